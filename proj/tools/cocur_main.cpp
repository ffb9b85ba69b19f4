// cocur: concept curation for image-text corpora.
//
// Subcommands:
//   curate           expand -> rank -> cluster -> sample every pair
//   gap-report       caption/archive/sampled size statistics
//   ablate           run the curation mode ladder against a truth file
//   verify-objective evaluate the contrastive objectives on a batch file
//   synth            generate a synthetic corpus with known ground truth

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cocur/pipeline.hpp"
#include "cocur/objective.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInternal = 2;

struct CurateArgs {
    std::string config_file;
    // Flag values; only applied when the flag was actually given.
    std::string pairs, images, concepts, concept_texts, captions, lexicon, output;
    std::string expansion, ranking, sampling;
    std::uint64_t n_retrieve = 0, labels = 0, seed = 0, threads = 0, kmeans_max_iter = 0;
    bool deterministic = false;
};

void add_curate_flags(CLI::App* cmd, CurateArgs& args) {
    cmd->add_option("--config", args.config_file, "config file (TOML-style key = value sections)");
    cmd->add_option("--pairs", args.pairs, "pairs JSON Lines file");
    cmd->add_option("--images", args.images, "image embeddings (CEMB)");
    cmd->add_option("--concepts", args.concepts, "concept-text embeddings (CEMB)");
    cmd->add_option("--concept-texts", args.concept_texts, "prompted concept list, one per line");
    cmd->add_option("--captions", args.captions,
                    "caption text embeddings (CEMB), required for --expansion language");
    cmd->add_option("--lexicon", args.lexicon, "concept lexicon, one per line");
    cmd->add_option("--out", args.output, "curated output file (JSON Lines)");
    cmd->add_option("--expansion", args.expansion, "vision|language");
    cmd->add_option("--n-retrieve", args.n_retrieve, "retrieved neighbors per anchor (N)");
    cmd->add_option("--ranking", args.ranking, "full|naive");
    cmd->add_option("--sampling", args.sampling, "cluster|naive");
    cmd->add_flag("--deterministic", args.deterministic,
                  "argmax sampling instead of seeded draws");
    cmd->add_option("--labels", args.labels, "sampled concepts per anchor (L)");
    cmd->add_option("--seed", args.seed, "global seed");
    cmd->add_option("--threads", args.threads, "worker threads");
    cmd->add_option("--kmeans-max-iter", args.kmeans_max_iter, "Lloyd iteration cap");
}

cocur::PipelineConfig build_config(const CLI::App* cmd, const CurateArgs& args) {
    cocur::PipelineConfig config;
    if (!args.config_file.empty()) {
        config = cocur::parse_config_file(args.config_file);
    }
    auto maybe = [&](const char* flag, const std::string& key, const std::string& value) {
        if (cmd->count(flag) > 0) cocur::apply_config_value(config, key, value);
    };
    maybe("--pairs", "paths.pairs", args.pairs);
    maybe("--images", "paths.images", args.images);
    maybe("--concepts", "paths.concepts", args.concepts);
    maybe("--concept-texts", "paths.concept_texts", args.concept_texts);
    maybe("--captions", "paths.captions", args.captions);
    maybe("--lexicon", "paths.lexicon", args.lexicon);
    maybe("--out", "paths.output", args.output);
    maybe("--expansion", "expansion.mode", args.expansion);
    maybe("--n-retrieve", "expansion.n_retrieve", std::to_string(args.n_retrieve));
    maybe("--ranking", "ranking.mode", args.ranking);
    maybe("--sampling", "sampling.mode", args.sampling);
    maybe("--labels", "sampling.L", std::to_string(args.labels));
    maybe("--seed", "run.seed", std::to_string(args.seed));
    maybe("--threads", "run.threads", std::to_string(args.threads));
    maybe("--kmeans-max-iter", "kmeans.max_iter", std::to_string(args.kmeans_max_iter));
    if (cmd->count("--deterministic") > 0) {
        cocur::apply_config_value(config, "sampling.deterministic", "true");
    }
    return config;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw cocur::InputError("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content << std::endl;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw cocur::InputError("cannot open output file: " + out_path);
    }
    out << content << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"concept curation pipeline for image-text corpora"};
    app.require_subcommand(1);

    CurateArgs curate_args;
    CLI::App* curate_cmd = app.add_subcommand("curate", "curate every pair of a corpus");
    add_curate_flags(curate_cmd, curate_args);

    std::string gap_pairs, gap_curated, gap_out;
    CLI::App* gap_cmd = app.add_subcommand("gap-report", "caption vs archive size statistics");
    gap_cmd->add_option("--pairs", gap_pairs, "pairs JSON Lines file")->required();
    gap_cmd->add_option("--curated", gap_curated, "curated JSON Lines file")->required();
    gap_cmd->add_option("--out", gap_out, "write the JSON report here instead of stdout");

    CurateArgs ablate_args;
    std::string ablate_truth, ablate_json;
    std::vector<std::string> ablate_modes{"baseline", "1", "2", "3", "4"};
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the curation mode ladder");
    add_curate_flags(ablate_cmd, ablate_args);
    ablate_cmd->add_option("--truth", ablate_truth, "truth JSON Lines file")->required();
    ablate_cmd->add_option("--modes", ablate_modes, "modes to run (baseline 1 2 3 4)")
        ->delimiter(',');
    ablate_cmd->add_option("--json", ablate_json, "also write rows as JSON Lines here");

    std::string batch_path;
    double eps = 1e-5;
    bool print_grads = false;
    CLI::App* verify_cmd =
        app.add_subcommand("verify-objective", "evaluate Eqs. of the training objective");
    verify_cmd->add_option("--batch", batch_path, "batch JSON file {img, txt, labels, tau}")
        ->required();
    verify_cmd->add_option("--eps", eps, "finite-difference step");
    verify_cmd->add_flag("--grads", print_grads, "include analytic gradients in the output");

    cocur::SynthSpec spec;
    std::string synth_dir;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    synth_cmd->add_option("--vocab", spec.vocab_size, "vocabulary size");
    synth_cmd->add_option("--dim", spec.dim, "embedding dimension");
    synth_cmd->add_option("--pairs", spec.n_pairs, "number of pairs");
    synth_cmd->add_option("--k-min", spec.k_min, "min concepts per image");
    synth_cmd->add_option("--k-max", spec.k_max, "max concepts per image");
    synth_cmd->add_option("--keep-prob", spec.keep_prob, "caption keep probability");
    synth_cmd->add_option("--noise", spec.noise_sigma, "image noise sigma");
    synth_cmd->add_option("--seed", spec.seed, "generator seed");
    synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (curate_cmd->parsed()) {
            const cocur::PipelineConfig config = build_config(curate_cmd, curate_args);
            const cocur::CurateStats stats = cocur::curate(config);
            std::cerr << "curated " << stats.pairs << " pairs -> " << config.paths.output.string();
            if (stats.clamped > 0) {
                std::cerr << " (n_retrieve clamped for " << stats.clamped << " anchors)";
            }
            std::cerr << std::endl;
        } else if (gap_cmd->parsed()) {
            write_or_print(gap_out, cocur::gap_report(gap_pairs, gap_curated));
        } else if (ablate_cmd->parsed()) {
            const cocur::PipelineConfig base = build_config(ablate_cmd, ablate_args);
            const std::vector<cocur::AblationRow> rows =
                cocur::run_ablation(base, ablate_modes, ablate_truth);
            std::cout << cocur::format_ablation_table(rows);
            if (!ablate_json.empty()) {
                std::ostringstream lines;
                for (const cocur::AblationRow& row : rows) {
                    lines << cocur::recovery_stats_to_json(row.stats, row.mode) << '\n';
                }
                std::ofstream out(ablate_json, std::ios::binary);
                if (!out) {
                    throw cocur::InputError("cannot open output file: " + ablate_json);
                }
                out << lines.str();
            }
        } else if (verify_cmd->parsed()) {
            const cocur::ContrastiveBatch batch = cocur::parse_batch_json(read_file(batch_path));
            const cocur::LossReport report = cocur::total_loss(batch, true);
            const double err = cocur::grad_check(batch, eps);
            std::cout << cocur::loss_report_to_json(report, err, print_grads) << std::endl;
        } else if (synth_cmd->parsed()) {
            const cocur::SynthPaths paths = cocur::synth_corpus(spec, synth_dir);
            std::cerr << "wrote synthetic corpus to " << paths.pairs.parent_path().string()
                      << std::endl;
        }
    } catch (const cocur::InputError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitInput;
    } catch (const cocur::InternalError& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return kExitInternal;
    }
    return kExitOk;
}
