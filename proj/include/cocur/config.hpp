#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cocur/expansion.hpp"
#include "cocur/ranking.hpp"
#include "cocur/sampling.hpp"

namespace cocur {

// Full pipeline configuration. Defaults give the full curation pipeline:
// vision-driven expansion (N=16), two-term ranking, cluster-guided sampling
// with L=3 stochastic picks.
struct PipelineConfig {
    struct Paths {
        std::filesystem::path pairs;
        std::filesystem::path images;
        std::filesystem::path concepts;
        std::filesystem::path concept_texts;
        std::filesystem::path captions; // optional; required for language expansion
        std::filesystem::path lexicon;
        std::filesystem::path output;
    } paths;

    struct Expansion {
        ExpansionMode mode = ExpansionMode::Vision;
        std::size_t n_retrieve = 16;
    } expansion;

    struct Ranking {
        RankingMode mode = RankingMode::Full;
    } ranking;

    struct Sampling {
        SamplingMode mode = SamplingMode::Cluster;
        bool deterministic = false;
        std::size_t labels = 3; // L
    } sampling;

    struct Kmeans {
        std::size_t max_iter = 100;
    } kmeans;

    std::uint64_t seed = 0;
    std::size_t threads = 1;

    /// Checks value ranges and that all referenced input files exist.
    void validate() const;
};

ExpansionMode parse_expansion_mode(const std::string& s);
RankingMode parse_ranking_mode(const std::string& s);
SamplingMode parse_sampling_mode(const std::string& s);
const char* to_string(ExpansionMode m);
const char* to_string(RankingMode m);
const char* to_string(SamplingMode m);

/// TOML-style config file: [section] headers, key = value lines, # comments.
/// Keys mirror the structure above (e.g. [expansion] mode = vision). Unknown
/// keys are rejected. Values may be double-quoted.
PipelineConfig parse_config_file(const std::filesystem::path& path);

/// Applies one dotted key (e.g. "expansion.n_retrieve") to a config.
void apply_config_value(PipelineConfig& config, const std::string& dotted_key,
                        const std::string& value);

} // namespace cocur
