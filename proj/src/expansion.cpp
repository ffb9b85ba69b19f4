#include "cocur/expansion.hpp"

#include <algorithm>
#include <unordered_map>

namespace cocur {

const ArchiveEntry* ConceptArchive::find(std::string_view name) const {
    for (const ArchiveEntry& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

const std::vector<std::size_t>& ConceptArchive::support_set(std::string_view name) const {
    const ArchiveEntry* e = find(name);
    if (e == nullptr) {
        throw InputError("archive for \"" + anchor_id + "\" has no concept \"" +
                         std::string(name) + "\"");
    }
    return e->support_rows;
}

namespace {

void check_anchor(const PairRecord& anchor, const std::vector<PairRecord>& pairs) {
    if (anchor.row >= pairs.size() || pairs[anchor.row].id != anchor.id) {
        throw InternalError("anchor \"" + anchor.id + "\" does not belong to the corpus");
    }
}

ConceptArchive build_archive(const PairRecord& anchor, const std::vector<Neighbor>& neighbors,
                             const std::vector<PairRecord>& pairs, ExpansionMode mode,
                             std::size_t n_requested, std::size_t n_effective) {
    ConceptArchive archive;
    archive.anchor_id = anchor.id;
    archive.anchor_row = anchor.row;
    archive.mode = mode;
    archive.n_requested = n_requested;
    archive.n_retrieved = neighbors.size();
    archive.clamped = n_effective < n_requested;

    std::unordered_map<std::string, std::size_t> entry_of;

    // Anchor caption concepts come first, flagged; expansion never drops them.
    for (const std::string& concept_name : anchor.concepts) {
        ArchiveEntry entry;
        entry.name = concept_name;
        entry.from_anchor_caption = true;
        entry_of.emplace(concept_name, archive.entries.size());
        archive.entries.push_back(std::move(entry));
    }

    for (const Neighbor& nb : neighbors) {
        archive.retrieved_rows.push_back(nb.row);
        for (const std::string& concept_name : pairs[nb.row].concepts) {
            auto [it, inserted] = entry_of.emplace(concept_name, archive.entries.size());
            if (inserted) {
                ArchiveEntry entry;
                entry.name = concept_name;
                archive.entries.push_back(std::move(entry));
            }
            archive.entries[it->second].support_rows.push_back(nb.row);
        }
    }

    for (ArchiveEntry& e : archive.entries) {
        std::sort(e.support_rows.begin(), e.support_rows.end());
        e.support_rows.erase(std::unique(e.support_rows.begin(), e.support_rows.end()),
                             e.support_rows.end());
    }
    return archive;
}

} // namespace

ConceptArchive expand_vision_driven(const PairRecord& anchor, const VectorIndex& image_index,
                                    const std::vector<PairRecord>& pairs, std::size_t n_retrieve) {
    check_anchor(anchor, pairs);
    if (image_index.size() != pairs.size()) {
        throw InternalError("image index size does not match corpus size");
    }
    const std::size_t n_eff = std::min(n_retrieve, pairs.size() - 1);
    std::vector<Neighbor> neighbors =
        image_index.top_n(image_index.matrix().row(anchor.row), n_eff, anchor.id);
    return build_archive(anchor, neighbors, pairs, ExpansionMode::Vision, n_retrieve, n_eff);
}

ConceptArchive expand_language_driven(const PairRecord& anchor, std::span<const float> anchor_image,
                                      const VectorIndex& caption_index,
                                      const std::vector<PairRecord>& pairs,
                                      std::size_t n_retrieve) {
    check_anchor(anchor, pairs);
    if (caption_index.size() != pairs.size()) {
        throw InternalError("caption index size does not match corpus size");
    }
    const std::size_t n_eff = std::min(n_retrieve, pairs.size() - 1);
    std::vector<Neighbor> neighbors = caption_index.top_n(anchor_image, n_eff, anchor.id);
    return build_archive(anchor, neighbors, pairs, ExpansionMode::Language, n_retrieve, n_eff);
}

} // namespace cocur
