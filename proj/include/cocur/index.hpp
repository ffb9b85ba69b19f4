#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cocur/corpus.hpp"

namespace cocur {

struct Neighbor {
    std::string id;
    std::size_t row = 0;
    double sim = 0.0; // cosine in [-1, 1]
};

/// Dot product of two unit vectors, accumulated in double and clamped to
/// [-1, 1]. Throws on dimension mismatch.
double cosine(std::span<const float> u, std::span<const float> v);

// Exact top-N retrieval over a shared immutable matrix. Results are sorted by
// similarity descending with ties broken by ascending row, so query output is
// byte-reproducible. Queries are pure and safe to issue concurrently.
class VectorIndex {
public:
    VectorIndex(const EmbeddingMatrix& matrix, std::vector<std::string> ids);

    const EmbeddingMatrix& matrix() const { return *matrix_; }
    const std::string& id_of(std::size_t row) const { return ids_[row]; }
    std::size_t size() const { return ids_.size(); }

    std::vector<Neighbor> top_n(std::span<const float> query, std::size_t n,
                                const std::optional<std::string>& exclude = std::nullopt) const;

private:
    const EmbeddingMatrix* matrix_;
    std::vector<std::string> ids_;
};

/// Test oracle: full scan plus full sort, no shortcuts. Must agree with
/// VectorIndex::top_n element for element.
std::vector<Neighbor> brute_force_top_n(const EmbeddingMatrix& matrix,
                                        const std::vector<std::string>& ids,
                                        std::span<const float> query, std::size_t n,
                                        const std::optional<std::string>& exclude = std::nullopt);

} // namespace cocur
