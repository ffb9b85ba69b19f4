#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cocur/common.hpp"

namespace cocur {

// Generator spec for a synthetic corpus with known ground truth. Every output
// is byte-deterministic given the seed.
struct SynthSpec {
    std::size_t vocab_size = 50;
    std::size_t dim = 64;
    std::size_t n_pairs = 2000;
    std::size_t k_min = 2; // concepts per image, inclusive range
    std::size_t k_max = 5;
    double keep_prob = 0.5;   // per-concept probability of appearing in the caption
    double noise_sigma = 0.05; // per-coordinate Gaussian noise on the image embedding
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthPaths {
    std::filesystem::path pairs;         // pairs.jsonl
    std::filesystem::path images;        // images.cemb
    std::filesystem::path captions;      // captions.cemb (caption text embeddings)
    std::filesystem::path concepts;      // concepts.cemb (keyed by prompted string)
    std::filesystem::path concept_texts; // concept_texts.txt
    std::filesystem::path lexicon;       // lexicon.txt
    std::filesystem::path truth;         // truth.jsonl

    static SynthPaths in_dir(const std::filesystem::path& dir);
};

/// Generates the corpus into `out_dir`: concept vectors uniform on the unit
/// sphere; each pair draws k concepts without replacement; the image embedding
/// is normalize(mean of concept vectors + noise); the caption keeps each
/// concept with probability keep_prob, redrawn until non-empty. The caption
/// text embedding is normalize(mean of caption concept vectors); concept-text
/// embeddings are the concept vectors themselves, keyed by the prompted
/// string. Truth lines are {"id", "truth": [...], "caption_concepts": [...]}.
SynthPaths synth_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

// Corpus-mean recovery metrics; per-pair values are means over pairs where
// the metric is defined (count fields give the denominators).
struct RecoveryStats {
    double missing_recall = 0.0;        // |sampled ∩ (truth − caption)| / |truth − caption|
    double archive_missing_recall = 0.0; // same with the archive instead of sampled
    double archive_truth_recall = 0.0;  // |archive ∩ truth| / |truth|
    double false_rate = 0.0;            // |sampled − truth| / |sampled|
    double group_coverage = 0.0;        // truth-bearing clusters touched by sampled / total
    std::size_t pairs = 0;
    std::size_t pairs_with_missing = 0;
    std::size_t pairs_with_sampled = 0;
    std::size_t pairs_with_groups = 0;
};

/// Pure function of the two files; curated and truth must align by id.
RecoveryStats recovery_report(const std::filesystem::path& curated_path,
                              const std::filesystem::path& truth_path);

std::string recovery_stats_to_json(const RecoveryStats& stats, const std::string& tag);

} // namespace cocur
