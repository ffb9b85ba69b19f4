#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cocur/index.hpp"

namespace cocur {

enum class ExpansionMode { Vision, Language };

struct RelevancyScore {
    double s_a = 0.0; // saliency: cosine(anchor image, prompted concept)
    double s_b = 0.0; // debiased support comparison
    double s = 0.0;   // s_a + s_b
};

struct ArchiveEntry {
    std::string name;
    // Retrieved rows whose captions contain the concept (ascending). Size is N'.
    std::vector<std::size_t> support_rows;
    bool from_anchor_caption = false;
    std::optional<RelevancyScore> score; // filled by rank_archive
    int cluster = -1;                    // filled by the pipeline's clustering pass
};

// Per-anchor candidate concept set with support bookkeeping.
struct ConceptArchive {
    std::string anchor_id;
    std::size_t anchor_row = 0;
    ExpansionMode mode = ExpansionMode::Vision;
    std::size_t n_requested = 0;
    std::size_t n_retrieved = 0; // after clamping to corpus size - 1
    bool clamped = false;
    std::vector<std::size_t> retrieved_rows; // neighbor rows in rank order
    std::vector<ArchiveEntry> entries;       // unique by concept

    const ArchiveEntry* find(std::string_view name) const;
    /// Support rows for a concept; throws if the concept is not in the archive.
    const std::vector<std::size_t>& support_set(std::string_view name) const;
};

/// Cross-image retrieval: top-N neighbors of the anchor's image embedding
/// (anchor excluded), archive = union of neighbor caption concepts and the
/// anchor's own caption concepts (flagged). N is clamped to corpus size - 1.
ConceptArchive expand_vision_driven(const PairRecord& anchor, const VectorIndex& image_index,
                                    const std::vector<PairRecord>& pairs, std::size_t n_retrieve);

/// Caption-curation baseline: top-N captions by cosine(anchor image embedding,
/// caption text embedding), anchor's own caption excluded.
ConceptArchive expand_language_driven(const PairRecord& anchor, std::span<const float> anchor_image,
                                      const VectorIndex& caption_index,
                                      const std::vector<PairRecord>& pairs, std::size_t n_retrieve);

} // namespace cocur
