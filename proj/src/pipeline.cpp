#include "cocur/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace cocur {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

LoadedInputs load_inputs(const PipelineConfig& config) {
    config.validate();

    ConceptLexicon lexicon = ConceptLexicon::load(config.paths.lexicon);
    std::vector<PairRecord> pairs = load_pairs(config.paths.pairs, lexicon);
    if (pairs.empty()) {
        throw InputError("pairs file is empty: " + config.paths.pairs.string());
    }
    EmbeddingMatrix images = EmbeddingMatrix::load(config.paths.images);
    if (images.rows() != pairs.size()) {
        throw InputError("image embedding count (" + std::to_string(images.rows()) +
                         ") does not match pair count (" + std::to_string(pairs.size()) + ")");
    }
    std::optional<EmbeddingMatrix> captions;
    if (!config.paths.captions.empty()) {
        captions = EmbeddingMatrix::load(config.paths.captions,
                                         static_cast<std::uint32_t>(images.dim()));
        if (captions->rows() != pairs.size()) {
            throw InputError("caption embedding count (" + std::to_string(captions->rows()) +
                             ") does not match pair count (" + std::to_string(pairs.size()) + ")");
        }
    }
    ConceptTextTable concepts =
        ConceptTextTable::load(config.paths.concepts, config.paths.concept_texts);
    if (concepts.matrix().dim() != images.dim()) {
        throw InputError("concept embedding dimension (" +
                         std::to_string(concepts.matrix().dim()) +
                         ") does not match image dimension (" + std::to_string(images.dim()) + ")");
    }

    std::vector<std::string> ids;
    ids.reserve(pairs.size());
    for (const PairRecord& p : pairs) ids.push_back(p.id);

    return LoadedInputs{std::move(lexicon), std::move(pairs), std::move(images),
                        std::move(captions), std::move(concepts), std::move(ids)};
}

namespace {

CuratedRecord curate_one(const PairRecord& anchor, const LoadedInputs& inputs,
                         const VectorIndex& image_index, const VectorIndex* caption_index,
                         const PipelineConfig& config) {
    const char* stage = "expand";
    try {
        ConceptArchive archive;
        if (config.expansion.mode == ExpansionMode::Vision) {
            archive = expand_vision_driven(anchor, image_index, inputs.pairs,
                                           config.expansion.n_retrieve);
        } else {
            archive = expand_language_driven(anchor, inputs.images.row(anchor.row),
                                             *caption_index, inputs.pairs,
                                             config.expansion.n_retrieve);
        }

        stage = "rank";
        rank_archive(archive, inputs.images, inputs.concepts, config.ranking.mode);

        // Cluster the archive regardless of sampling mode so that every
        // output entry carries its cluster id.
        stage = "cluster";
        ClusterAssignment clusters;
        const std::size_t m = archive.entries.size();
        if (m > 0) {
            std::vector<double> points;
            points.reserve(m * inputs.concepts.matrix().dim());
            for (const ArchiveEntry& e : archive.entries) {
                const auto row = inputs.concepts.embedding_of(prompt(e.name), e.name);
                points.insert(points.end(), row.begin(), row.end());
            }
            clusters = kmeans(points, m, inputs.concepts.matrix().dim(),
                              std::min(config.sampling.labels, m),
                              derive_stream(config.seed, anchor.id, 0), config.kmeans.max_iter);
            for (std::size_t i = 0; i < m; ++i) {
                archive.entries[i].cluster = clusters.assignment[i];
            }
        }

        stage = "sample";
        SampledConcepts sampled;
        const std::uint64_t sample_seed = derive_stream(config.seed, anchor.id, 1);
        if (m == 0) {
            sampled.anchor_id = anchor.id;
            sampled.mode = config.sampling.mode;
            sampled.seed = sample_seed;
        } else if (config.sampling.mode == SamplingMode::Cluster) {
            sampled = cluster_guided_sample(archive, clusters, config.sampling.labels,
                                            sample_seed, config.sampling.deterministic);
        } else {
            sampled = naive_sample(archive, config.sampling.labels, sample_seed,
                                   config.sampling.deterministic);
        }

        return CuratedRecord{anchor.caption, std::move(archive), std::move(sampled)};
    } catch (const InputError& e) {
        throw InputError("anchor \"" + anchor.id + "\" stage " + stage + ": " + e.what());
    } catch (const InternalError& e) {
        throw InternalError("anchor \"" + anchor.id + "\" stage " + stage + ": " + e.what());
    }
}

} // namespace

std::vector<CuratedRecord> curate_records(const LoadedInputs& inputs,
                                          const PipelineConfig& config, CurateStats* stats) {
    if (config.expansion.mode == ExpansionMode::Language && !inputs.captions) {
        throw InputError("language-driven expansion requires caption embeddings");
    }

    const VectorIndex image_index(inputs.images, inputs.ids);
    std::optional<VectorIndex> caption_index;
    if (inputs.captions) {
        caption_index.emplace(*inputs.captions, inputs.ids);
    }

    const std::size_t n = inputs.pairs.size();
    std::vector<CuratedRecord> records(n);

    // Order-preserving fan-out: each worker pulls the next anchor index; the
    // per-anchor work is pure, so the result is independent of scheduling.
    const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(config.threads, 1), n);
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            {
                std::scoped_lock lock(error_mutex);
                if (first_error) break;
            }
            try {
                records[i] = curate_one(inputs.pairs[i], inputs, image_index,
                                        caption_index ? &*caption_index : nullptr, config);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                break;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    if (stats) {
        stats->pairs = n;
        stats->clamped = 0;
        for (const CuratedRecord& r : records) {
            if (r.archive.clamped) ++stats->clamped;
        }
    }
    return records;
}

std::string curated_record_to_json(const PairRecord& pair, const CuratedRecord& record) {
    ordered_json obj;
    obj["id"] = pair.id;
    obj["caption"] = record.caption;

    ordered_json archive = ordered_json::array();
    for (const ArchiveEntry& e : record.archive.entries) {
        ordered_json entry;
        entry["concept"] = e.name;
        entry["n_support"] = e.support_rows.size();
        entry["support_rows"] = e.support_rows;
        entry["from_caption"] = e.from_anchor_caption;
        entry["s_a"] = e.score ? e.score->s_a : 0.0;
        entry["s_b"] = e.score ? e.score->s_b : 0.0;
        entry["s"] = e.score ? e.score->s : 0.0;
        entry["cluster"] = e.cluster;
        archive.push_back(std::move(entry));
    }
    obj["archive"] = std::move(archive);

    ordered_json sampled = ordered_json::array();
    for (const SampledPick& p : record.sampled.picks) {
        ordered_json pick;
        pick["concept"] = p.name;
        pick["prompt"] = prompt(p.name);
        pick["s"] = p.score;
        pick["cluster"] = p.cluster;
        sampled.push_back(std::move(pick));
    }
    obj["sampled"] = std::move(sampled);
    return obj.dump();
}

CurateStats curate(const PipelineConfig& config) {
    const LoadedInputs inputs = load_inputs(config);
    CurateStats stats;
    const std::vector<CuratedRecord> records = curate_records(inputs, config, &stats);

    if (config.paths.output.has_parent_path()) {
        fs::create_directories(config.paths.output.parent_path());
    }
    std::ofstream out(config.paths.output, std::ios::binary);
    if (!out) {
        throw InputError("cannot open output file: " + config.paths.output.string());
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        out << curated_record_to_json(inputs.pairs[i], records[i]) << '\n';
    }
    if (!out) {
        throw InputError("failed writing output file: " + config.paths.output.string());
    }
    return stats;
}

std::string gap_report(const fs::path& pairs_path, const fs::path& curated_path) {
    std::ifstream pairs_in(pairs_path);
    if (!pairs_in) {
        throw InputError("cannot open pairs file: " + pairs_path.string());
    }
    std::ifstream curated_in(curated_path);
    if (!curated_in) {
        throw InputError("cannot open curated file: " + curated_path.string());
    }

    ordered_json per_pair = ordered_json::array();
    std::map<std::size_t, std::size_t> hist_caption, hist_archive, hist_sampled;
    double sum_caption = 0.0, sum_archive = 0.0, sum_sampled = 0.0;
    std::size_t n = 0;

    std::string pair_line, curated_line;
    std::size_t line_no = 0;
    while (true) {
        const bool has_pair = static_cast<bool>(std::getline(pairs_in, pair_line));
        const bool has_curated = static_cast<bool>(std::getline(curated_in, curated_line));
        if (has_pair != has_curated) {
            throw InputError("pairs and curated files have different lengths");
        }
        if (!has_pair) break;
        ++line_no;

        nlohmann::json pair_obj, curated_obj;
        try {
            pair_obj = nlohmann::json::parse(pair_line);
            curated_obj = nlohmann::json::parse(curated_line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        const std::string pair_id = pair_obj.at("id").get<std::string>();
        const std::string curated_id = curated_obj.at("id").get<std::string>();
        if (pair_id != curated_id) {
            throw InputError("id mismatch on line " + std::to_string(line_no) + ": \"" + pair_id +
                             "\" vs \"" + curated_id + "\"");
        }

        std::size_t caption_concepts = 0;
        const auto& archive = curated_obj.at("archive");
        for (const auto& e : archive) {
            if (e.at("from_caption").get<bool>()) ++caption_concepts;
        }
        const std::size_t archive_size = archive.size();
        const std::size_t sampled = curated_obj.at("sampled").size();

        ++n;
        sum_caption += static_cast<double>(caption_concepts);
        sum_archive += static_cast<double>(archive_size);
        sum_sampled += static_cast<double>(sampled);
        ++hist_caption[caption_concepts];
        ++hist_archive[archive_size];
        ++hist_sampled[sampled];

        ordered_json row;
        row["id"] = pair_id;
        row["caption_concepts"] = caption_concepts;
        row["archive_size"] = archive_size;
        row["sampled"] = sampled;
        per_pair.push_back(std::move(row));
    }

    auto hist_json = [](const std::map<std::size_t, std::size_t>& hist) {
        ordered_json out = ordered_json::object();
        for (const auto& [size, count] : hist) {
            out[std::to_string(size)] = count;
        }
        return out;
    };

    ordered_json report;
    report["pairs"] = n;
    report["mean_caption_concepts"] = n ? sum_caption / static_cast<double>(n) : 0.0;
    report["mean_archive_size"] = n ? sum_archive / static_cast<double>(n) : 0.0;
    report["mean_sampled"] = n ? sum_sampled / static_cast<double>(n) : 0.0;
    report["hist_caption_concepts"] = hist_json(hist_caption);
    report["hist_archive_size"] = hist_json(hist_archive);
    report["hist_sampled"] = hist_json(hist_sampled);
    report["per_pair"] = std::move(per_pair);
    return report.dump(2);
}

PipelineConfig ablation_config(const PipelineConfig& base, const std::string& mode) {
    PipelineConfig config = base;
    if (mode == "baseline") {
        config.expansion.mode = ExpansionMode::Vision;
        config.expansion.n_retrieve = 0; // archive = caption concepts only
        config.ranking.mode = RankingMode::Naive;
        config.sampling.mode = SamplingMode::Naive;
    } else if (mode == "1") {
        config.expansion.mode = ExpansionMode::Language;
        config.ranking.mode = RankingMode::Naive;
        config.sampling.mode = SamplingMode::Naive;
    } else if (mode == "2") {
        config.expansion.mode = ExpansionMode::Vision;
        config.ranking.mode = RankingMode::Naive;
        config.sampling.mode = SamplingMode::Naive;
    } else if (mode == "3") {
        config.expansion.mode = ExpansionMode::Vision;
        config.ranking.mode = RankingMode::Full;
        config.sampling.mode = SamplingMode::Naive;
    } else if (mode == "4") {
        config.expansion.mode = ExpansionMode::Vision;
        config.ranking.mode = RankingMode::Full;
        config.sampling.mode = SamplingMode::Cluster;
    } else {
        throw InputError("unknown ablation mode \"" + mode +
                         "\" (expected baseline, 1, 2, 3 or 4)");
    }
    config.paths.output = base.paths.output.string() + "." + mode;
    return config;
}

std::vector<AblationRow> run_ablation(const PipelineConfig& base,
                                      const std::vector<std::string>& modes,
                                      const fs::path& truth_path) {
    if (!fs::exists(truth_path)) {
        throw InputError("truth file does not exist: " + truth_path.string());
    }
    std::vector<AblationRow> rows;
    for (const std::string& mode : modes) {
        const PipelineConfig config = ablation_config(base, mode);
        curate(config);
        rows.push_back(AblationRow{mode, recovery_report(config.paths.output, truth_path)});
    }
    return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-10s %14s %14s %12s %10s %10s\n", "mode",
                  "arch_recall", "recall", "false_rate", "coverage", "truth_arch");
    out << line;
    for (const AblationRow& row : rows) {
        std::snprintf(line, sizeof(line), "%-10s %14.4f %14.4f %12.4f %10.4f %10.4f\n",
                      row.mode.c_str(), row.stats.archive_missing_recall,
                      row.stats.missing_recall, row.stats.false_rate, row.stats.group_coverage,
                      row.stats.archive_truth_recall);
        out << line;
    }
    return out.str();
}

} // namespace cocur
