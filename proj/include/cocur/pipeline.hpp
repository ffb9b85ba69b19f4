#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cocur/config.hpp"
#include "cocur/synth.hpp"

namespace cocur {

// Immutable inputs shared read-only across worker threads.
struct LoadedInputs {
    ConceptLexicon lexicon;
    std::vector<PairRecord> pairs;
    EmbeddingMatrix images;
    std::optional<EmbeddingMatrix> captions;
    ConceptTextTable concepts;
    std::vector<std::string> ids; // per row, = pairs[i].id
};

LoadedInputs load_inputs(const PipelineConfig& config);

struct CuratedRecord {
    std::string caption;
    ConceptArchive archive;   // ranked, entries carry cluster ids
    SampledConcepts sampled;
};

struct CurateStats {
    std::size_t pairs = 0;
    std::size_t clamped = 0; // anchors whose N was clamped to corpus size - 1
};

/// Expand -> rank -> cluster -> sample for every pair, in input order.
/// Deterministic for a fixed (config, inputs) regardless of thread count.
std::vector<CuratedRecord> curate_records(const LoadedInputs& inputs,
                                          const PipelineConfig& config,
                                          CurateStats* stats = nullptr);

std::string curated_record_to_json(const PairRecord& pair, const CuratedRecord& record);

/// End to end: load inputs, curate, write one JSON line per input pair.
CurateStats curate(const PipelineConfig& config);

/// Per-pair caption-concept/archive/sampled counts plus corpus means and
/// histograms, as a JSON document.
std::string gap_report(const std::filesystem::path& pairs_path,
                       const std::filesystem::path& curated_path);

struct AblationRow {
    std::string mode; // "baseline", "1".."4"
    RecoveryStats stats;
};

/// Config preset for one ablation mode on top of a base config.
PipelineConfig ablation_config(const PipelineConfig& base, const std::string& mode);

/// Runs curate per mode and scores each curated output against the truth
/// file. Curated files are written next to base.paths.output with a
/// ".<mode>" suffix.
std::vector<AblationRow> run_ablation(const PipelineConfig& base,
                                      const std::vector<std::string>& modes,
                                      const std::filesystem::path& truth_path);

std::string format_ablation_table(const std::vector<AblationRow>& rows);

} // namespace cocur
