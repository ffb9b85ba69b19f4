#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cocur/common.hpp"

namespace cocur {

// Lexicon of lowercase concept strings (1..max_tokens whitespace tokens each).
// Entries are normalized on construction: trimmed, lowercased, inner runs of
// whitespace collapsed to single spaces, duplicates dropped.
class ConceptLexicon {
public:
    ConceptLexicon() = default;
    explicit ConceptLexicon(const std::vector<std::string>& raw_entries);

    /// Plain text file, one concept per line. Blank lines are skipped.
    static ConceptLexicon load(const std::filesystem::path& path);

    bool contains(const std::string& normalized) const { return entries_.count(normalized) > 0; }
    std::size_t size() const { return entries_.size(); }
    int max_tokens() const { return max_tokens_; }
    const std::vector<std::string>& entries() const { return ordered_; }

private:
    std::unordered_set<std::string> entries_;
    std::vector<std::string> ordered_; // insertion order, duplicates removed
    int max_tokens_ = 0;
};

// One image-text pair. `row` indexes the companion embedding matrices.
struct PairRecord {
    std::string id;
    std::string caption;
    std::vector<std::string> concepts; // lowercase, deduplicated, caption order
    std::size_t row = 0;
};

enum class EmbeddingKind { Image, ConceptText };

// Row-aligned unit-norm embedding table. Rows are renormalized at
// construction; a row whose norm is already within 1e-6 of 1 is kept
// bit-for-bit, which makes write->read round trips exact.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(std::size_t dim, std::vector<float> data,
                    EmbeddingKind kind = EmbeddingKind::Image);

    /// Reads the CEMB binary format: magic "CEMB", u32 version=1, u32 count,
    /// u32 dim, then count*dim little-endian f32 row-major.
    static EmbeddingMatrix load(const std::filesystem::path& path,
                                std::optional<std::uint32_t> expected_dim = std::nullopt,
                                EmbeddingKind kind = EmbeddingKind::Image);
    void save(const std::filesystem::path& path) const;

    std::size_t rows() const { return data_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    EmbeddingKind kind() const { return kind_; }
    std::span<const float> row(std::size_t r) const;

private:
    std::size_t dim_ = 0;
    EmbeddingKind kind_ = EmbeddingKind::Image;
    std::vector<float> data_;
};

/// Greedy longest-match n-gram scan of the lowercased, whitespace-tokenized
/// caption against the lexicon. Matched tokens are consumed; the result is
/// deduplicated preserving first-occurrence order.
std::vector<std::string> extract_concepts(std::string_view caption, const ConceptLexicon& lexicon);

/// JSON Lines file of {"id": ..., "caption": ...} objects, in file order.
/// Concepts are populated via extract_concepts; row = 0-based line index.
std::vector<PairRecord> load_pairs(const std::filesystem::path& path, const ConceptLexicon& lexicon);

namespace text {
// Shared tokenization helpers (ASCII lowercasing; UTF-8 bytes pass through).
std::string to_lower(std::string_view s);
std::vector<std::string> tokenize(std::string_view s);
std::string trim(std::string_view s);
} // namespace text

} // namespace cocur
