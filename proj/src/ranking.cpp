#include "cocur/ranking.hpp"

#include <algorithm>
#include <fstream>

namespace cocur {

std::string prompt(std::string_view name) {
    if (name.empty()) {
        throw InputError("prompt: empty concept");
    }
    std::string out = "a photo of a ";
    out += name;
    return out;
}

double score_saliency(std::span<const float> anchor_emb, std::span<const float> concept_emb) {
    return cosine(anchor_emb, concept_emb);
}

double score_debiased(double anchor_sim, std::span<const double> support_sims) {
    if (support_sims.empty()) {
        return 1.0; // anchor-caption concept with no support: neutral
    }
    const double g_anchor = std::max(anchor_sim, 0.0);
    double denom = g_anchor;
    for (double sim : support_sims) {
        denom += std::max(sim, 0.0);
    }
    if (denom < 1e-9) {
        return 0.0;
    }
    return (1.0 + static_cast<double>(support_sims.size())) * g_anchor / denom;
}

double score_total(double s_a, double s_b) {
    return s_a + s_b;
}

ConceptTextTable::ConceptTextTable(EmbeddingMatrix matrix,
                                   const std::vector<std::string>& prompted_lines)
    : matrix_(std::move(matrix)) {
    if (prompted_lines.size() != matrix_.rows()) {
        throw InputError("concept text list has " + std::to_string(prompted_lines.size()) +
                         " lines but the embedding matrix has " + std::to_string(matrix_.rows()) +
                         " rows");
    }
    for (std::size_t i = 0; i < prompted_lines.size(); ++i) {
        auto [it, inserted] = row_of_.emplace(prompted_lines[i], i);
        if (!inserted) {
            throw InputError("duplicate concept text \"" + prompted_lines[i] + "\" on lines " +
                             std::to_string(it->second + 1) + " and " + std::to_string(i + 1));
        }
    }
}

ConceptTextTable ConceptTextTable::load(const std::filesystem::path& cemb_path,
                                        const std::filesystem::path& texts_path) {
    std::ifstream in(texts_path);
    if (!in) {
        throw InputError("cannot open concept text file: " + texts_path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    EmbeddingMatrix matrix = EmbeddingMatrix::load(cemb_path, std::nullopt, EmbeddingKind::ConceptText);
    return ConceptTextTable(std::move(matrix), lines);
}

std::span<const float> ConceptTextTable::embedding_of(const std::string& prompted,
                                                      std::string_view name) const {
    auto it = row_of_.find(prompted);
    if (it == row_of_.end()) {
        throw InputError("no concept-text embedding for concept \"" + std::string(name) +
                         "\" (prompted \"" + prompted + "\")");
    }
    return matrix_.row(it->second);
}

void rank_archive(ConceptArchive& archive, const EmbeddingMatrix& images,
                  const ConceptTextTable& concepts, RankingMode mode) {
    const std::span<const float> anchor_emb = images.row(archive.anchor_row);

    for (ArchiveEntry& entry : archive.entries) {
        const std::span<const float> t = concepts.embedding_of(prompt(entry.name), entry.name);
        RelevancyScore score;
        score.s_a = score_saliency(anchor_emb, t);
        if (mode == RankingMode::Full) {
            std::vector<double> support_sims;
            support_sims.reserve(entry.support_rows.size());
            for (std::size_t row : entry.support_rows) {
                support_sims.push_back(cosine(t, images.row(row)));
            }
            score.s_b = score_debiased(score.s_a, support_sims);
        } else {
            score.s_b = 0.0;
        }
        score.s = score_total(score.s_a, score.s_b);
        entry.score = score;
    }

    std::sort(archive.entries.begin(), archive.entries.end(),
              [](const ArchiveEntry& a, const ArchiveEntry& b) {
                  if (a.score->s != b.score->s) return a.score->s > b.score->s;
                  return a.name < b.name;
              });
}

} // namespace cocur
