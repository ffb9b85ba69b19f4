#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cocur/expansion.hpp"

namespace cocur {

enum class RankingMode {
    Full, // s = s_a + s_b
    Naive // s = s_a only
};

/// Single prompt template: "a photo of a {concept}". Throws on empty concept.
std::string prompt(std::string_view name);

/// Saliency term: cosine between the anchor image embedding and the prompted
/// concept embedding.
double score_saliency(std::span<const float> anchor_emb, std::span<const float> concept_emb);

/// Debiased support-comparison term. Negative cosines are clipped to zero
/// before use. N' = 0 yields the neutral value 1; an all-zero clipped
/// denominator yields 0; otherwise (1+N')*g(anchor) / (g(anchor) + sum g(support)).
double score_debiased(double anchor_sim, std::span<const double> support_sims);

double score_total(double s_a, double s_b);

// Concept-text embeddings keyed by the prompted string. Row i of the matrix
// corresponds to line i of the companion concept-list text file.
class ConceptTextTable {
public:
    ConceptTextTable(EmbeddingMatrix matrix, const std::vector<std::string>& prompted_lines);
    static ConceptTextTable load(const std::filesystem::path& cemb_path,
                                 const std::filesystem::path& texts_path);

    const EmbeddingMatrix& matrix() const { return matrix_; }
    bool has(const std::string& prompted) const { return row_of_.count(prompted) > 0; }
    /// Embedding of a prompted string; throws naming the concept when missing.
    std::span<const float> embedding_of(const std::string& prompted,
                                        std::string_view name) const;

private:
    EmbeddingMatrix matrix_;
    std::unordered_map<std::string, std::size_t> row_of_;
};

/// Fills (s_a, s_b, s) for every archive entry and sorts entries by s
/// descending, ties broken lexicographically by concept. Scores are computed
/// in 64-bit arithmetic. Idempotent; throws naming any concept without a
/// prompted embedding.
void rank_archive(ConceptArchive& archive, const EmbeddingMatrix& images,
                  const ConceptTextTable& concepts, RankingMode mode = RankingMode::Full);

} // namespace cocur
