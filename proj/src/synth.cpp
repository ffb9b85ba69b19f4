#include "cocur/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "cocur/corpus.hpp"
#include "cocur/ranking.hpp"

namespace cocur {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void SynthSpec::validate() const {
    if (vocab_size == 0 || dim < 2 || n_pairs == 0) {
        throw InputError("synth spec: vocab_size, n_pairs must be >= 1 and dim >= 2");
    }
    if (k_min == 0 || k_min > k_max || k_max > vocab_size) {
        throw InputError("synth spec: need 1 <= k_min <= k_max <= vocab_size");
    }
    if (!(keep_prob > 0.0) || keep_prob > 1.0) {
        throw InputError("synth spec: keep_prob must be in (0, 1]");
    }
    if (noise_sigma < 0.0 || !std::isfinite(noise_sigma)) {
        throw InputError("synth spec: noise_sigma must be >= 0");
    }
}

SynthPaths SynthPaths::in_dir(const fs::path& dir) {
    SynthPaths p;
    p.pairs = dir / "pairs.jsonl";
    p.images = dir / "images.cemb";
    p.captions = dir / "captions.cemb";
    p.concepts = dir / "concepts.cemb";
    p.concept_texts = dir / "concept_texts.txt";
    p.lexicon = dir / "lexicon.txt";
    p.truth = dir / "truth.jsonl";
    return p;
}

namespace {

std::string zero_pad(std::size_t value, std::size_t width) {
    std::string s = std::to_string(value);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

std::vector<float> normalized_f32(const std::vector<double>& v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    double norm = std::sqrt(norm_sq);
    if (norm < 1e-12) {
        throw InternalError("synth: degenerate vector");
    }
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>(v[i] / norm);
    }
    return out;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary); // binary: no newline translation
    if (!out) {
        throw InputError("cannot open for writing: " + path.string());
    }
    for (const std::string& line : lines) {
        out << line << '\n';
    }
    if (!out) {
        throw InputError("failed writing: " + path.string());
    }
}

} // namespace

SynthPaths synth_corpus(const SynthSpec& spec, const fs::path& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);
    const SynthPaths paths = SynthPaths::in_dir(out_dir);

    Rng rng(spec.seed);
    const std::size_t d = spec.dim;
    const std::size_t v = spec.vocab_size;

    // Vocabulary: single-token names c00, c01, ... and unit-sphere vectors.
    const std::size_t name_width = std::to_string(v - 1).size();
    std::vector<std::string> names(v);
    std::vector<std::vector<float>> concept_vecs(v);
    for (std::size_t i = 0; i < v; ++i) {
        names[i] = "c" + zero_pad(i, name_width);
        std::vector<double> raw(d);
        for (double& x : raw) x = rng.gaussian();
        concept_vecs[i] = normalized_f32(raw);
    }

    std::vector<std::string> pair_lines, truth_lines;
    std::vector<float> image_data, caption_data;
    image_data.reserve(spec.n_pairs * d);
    caption_data.reserve(spec.n_pairs * d);

    const std::size_t id_width = std::to_string(spec.n_pairs - 1).size();
    std::vector<std::size_t> pool(v);
    for (std::size_t i = 0; i < v; ++i) pool[i] = i;

    for (std::size_t p = 0; p < spec.n_pairs; ++p) {
        const std::size_t k = spec.k_min + rng.below(spec.k_max - spec.k_min + 1);

        // Partial Fisher-Yates: the first k slots are the drawn concepts.
        for (std::size_t i = 0; i < v; ++i) pool[i] = i;
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t swap_with = j + rng.below(v - j);
            std::swap(pool[j], pool[swap_with]);
        }

        std::vector<double> mean(d, 0.0);
        for (std::size_t j = 0; j < k; ++j) {
            const std::vector<float>& cv = concept_vecs[pool[j]];
            for (std::size_t t = 0; t < d; ++t) mean[t] += cv[t];
        }
        for (double& x : mean) x /= static_cast<double>(k);
        if (spec.noise_sigma > 0.0) {
            for (double& x : mean) x += spec.noise_sigma * rng.gaussian();
        }
        const std::vector<float> image = normalized_f32(mean);
        image_data.insert(image_data.end(), image.begin(), image.end());

        // Caption: keep each drawn concept independently, redraw until non-empty.
        std::vector<std::size_t> kept;
        do {
            kept.clear();
            for (std::size_t j = 0; j < k; ++j) {
                if (rng.uniform() < spec.keep_prob) kept.push_back(pool[j]);
            }
        } while (kept.empty());

        std::vector<double> cap_mean(d, 0.0);
        std::string caption;
        for (std::size_t idx : kept) {
            if (!caption.empty()) caption += ' ';
            caption += names[idx];
            const std::vector<float>& cv = concept_vecs[idx];
            for (std::size_t t = 0; t < d; ++t) cap_mean[t] += cv[t];
        }
        for (double& x : cap_mean) x /= static_cast<double>(kept.size());
        const std::vector<float> caption_emb = normalized_f32(cap_mean);
        caption_data.insert(caption_data.end(), caption_emb.begin(), caption_emb.end());

        const std::string id = "p" + zero_pad(p, id_width);
        ordered_json pair_obj;
        pair_obj["id"] = id;
        pair_obj["caption"] = caption;
        pair_lines.push_back(pair_obj.dump());

        ordered_json truth_obj;
        truth_obj["id"] = id;
        ordered_json truth_list = ordered_json::array();
        for (std::size_t j = 0; j < k; ++j) truth_list.push_back(names[pool[j]]);
        truth_obj["truth"] = truth_list;
        ordered_json caption_list = ordered_json::array();
        for (std::size_t idx : kept) caption_list.push_back(names[idx]);
        truth_obj["caption_concepts"] = caption_list;
        truth_lines.push_back(truth_obj.dump());
    }

    write_lines(paths.pairs, pair_lines);
    write_lines(paths.truth, truth_lines);
    write_lines(paths.lexicon, names);

    std::vector<std::string> prompted(v);
    std::vector<float> concept_data;
    concept_data.reserve(v * d);
    for (std::size_t i = 0; i < v; ++i) {
        prompted[i] = prompt(names[i]);
        concept_data.insert(concept_data.end(), concept_vecs[i].begin(), concept_vecs[i].end());
    }
    write_lines(paths.concept_texts, prompted);

    EmbeddingMatrix(d, std::move(image_data), EmbeddingKind::Image).save(paths.images);
    EmbeddingMatrix(d, std::move(caption_data), EmbeddingKind::Image).save(paths.captions);
    EmbeddingMatrix(d, std::move(concept_data), EmbeddingKind::ConceptText).save(paths.concepts);
    return paths;
}

namespace {

struct TruthRecord {
    std::unordered_set<std::string> truth;
    std::unordered_set<std::string> caption;
};

std::vector<std::pair<std::string, TruthRecord>> load_truth(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open truth file: " + path.string());
    }
    std::vector<std::pair<std::string, TruthRecord>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + " line " + std::to_string(line_no) +
                             ": malformed JSON: " + e.what());
        }
        TruthRecord rec;
        for (const auto& c : obj.at("truth")) rec.truth.insert(c.get<std::string>());
        for (const auto& c : obj.at("caption_concepts")) rec.caption.insert(c.get<std::string>());
        out.emplace_back(obj.at("id").get<std::string>(), std::move(rec));
    }
    return out;
}

} // namespace

RecoveryStats recovery_report(const fs::path& curated_path, const fs::path& truth_path) {
    const auto truth = load_truth(truth_path);
    std::unordered_map<std::string, const TruthRecord*> truth_by_id;
    for (const auto& [id, rec] : truth) truth_by_id.emplace(id, &rec);

    std::ifstream in(curated_path);
    if (!in) {
        throw InputError("cannot open curated file: " + curated_path.string());
    }

    RecoveryStats stats;
    double sum_missing_recall = 0.0, sum_arch_missing = 0.0, sum_arch_truth = 0.0;
    double sum_false = 0.0, sum_coverage = 0.0;
    std::size_t pairs_with_truth = 0;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InputError(curated_path.string() + " line " + std::to_string(line_no) +
                             ": malformed JSON: " + e.what());
        }
        const std::string id = obj.at("id").get<std::string>();
        auto it = truth_by_id.find(id);
        if (it == truth_by_id.end()) {
            throw InputError("curated id \"" + id + "\" (line " + std::to_string(line_no) +
                             ") not present in the truth file");
        }
        const TruthRecord& rec = *it->second;
        ++stats.pairs;

        std::unordered_set<std::string> missing;
        for (const std::string& c : rec.truth) {
            if (!rec.caption.count(c)) missing.insert(c);
        }

        std::vector<std::pair<std::string, int>> archive; // concept, cluster
        for (const auto& e : obj.at("archive")) {
            archive.emplace_back(e.at("concept").get<std::string>(), e.at("cluster").get<int>());
        }
        std::vector<std::pair<std::string, int>> sampled;
        for (const auto& e : obj.at("sampled")) {
            sampled.emplace_back(e.at("concept").get<std::string>(), e.at("cluster").get<int>());
        }

        if (!missing.empty()) {
            std::size_t hit = 0;
            for (const auto& [c, cl] : sampled) {
                if (missing.count(c)) ++hit;
            }
            sum_missing_recall += static_cast<double>(hit) / static_cast<double>(missing.size());
            std::size_t arch_hit = 0;
            for (const auto& [c, cl] : archive) {
                if (missing.count(c)) ++arch_hit;
            }
            sum_arch_missing += static_cast<double>(arch_hit) / static_cast<double>(missing.size());
            ++stats.pairs_with_missing;
        }

        if (!rec.truth.empty()) {
            std::size_t arch_truth_hit = 0;
            for (const auto& [c, cl] : archive) {
                if (rec.truth.count(c)) ++arch_truth_hit;
            }
            sum_arch_truth += static_cast<double>(arch_truth_hit) / static_cast<double>(rec.truth.size());
            ++pairs_with_truth;
        }

        if (!sampled.empty()) {
            std::size_t false_hits = 0;
            for (const auto& [c, cl] : sampled) {
                if (!rec.truth.count(c)) ++false_hits;
            }
            sum_false += static_cast<double>(false_hits) / static_cast<double>(sampled.size());
            ++stats.pairs_with_sampled;
        }

        // Groups = archive clusters holding at least one ground-truth concept;
        // coverage = the fraction of those the sampled picks touch.
        std::unordered_set<int> truth_clusters;
        for (const auto& [c, cl] : archive) {
            if (cl >= 0 && rec.truth.count(c)) truth_clusters.insert(cl);
        }
        if (!truth_clusters.empty()) {
            std::unordered_set<int> covered;
            for (const auto& [c, cl] : sampled) {
                if (truth_clusters.count(cl)) covered.insert(cl);
            }
            sum_coverage += static_cast<double>(covered.size()) /
                            static_cast<double>(truth_clusters.size());
            ++stats.pairs_with_groups;
        }
    }

    if (stats.pairs != truth.size()) {
        throw InputError("curated file has " + std::to_string(stats.pairs) +
                         " records but the truth file has " + std::to_string(truth.size()));
    }

    if (stats.pairs_with_missing > 0) {
        stats.missing_recall = sum_missing_recall / static_cast<double>(stats.pairs_with_missing);
        stats.archive_missing_recall = sum_arch_missing / static_cast<double>(stats.pairs_with_missing);
    }
    if (pairs_with_truth > 0) {
        stats.archive_truth_recall = sum_arch_truth / static_cast<double>(pairs_with_truth);
    }
    if (stats.pairs_with_sampled > 0) {
        stats.false_rate = sum_false / static_cast<double>(stats.pairs_with_sampled);
    }
    if (stats.pairs_with_groups > 0) {
        stats.group_coverage = sum_coverage / static_cast<double>(stats.pairs_with_groups);
    }
    return stats;
}

std::string recovery_stats_to_json(const RecoveryStats& stats, const std::string& tag) {
    ordered_json out;
    out["mode"] = tag;
    out["missing_recall"] = stats.missing_recall;
    out["archive_missing_recall"] = stats.archive_missing_recall;
    out["archive_truth_recall"] = stats.archive_truth_recall;
    out["false_rate"] = stats.false_rate;
    out["group_coverage"] = stats.group_coverage;
    out["pairs"] = stats.pairs;
    out["pairs_with_missing"] = stats.pairs_with_missing;
    out["pairs_with_sampled"] = stats.pairs_with_sampled;
    out["pairs_with_groups"] = stats.pairs_with_groups;
    return out.dump();
}

} // namespace cocur
