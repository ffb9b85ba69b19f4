#include "cocur/config.hpp"

#include <fstream>

#include "cocur/corpus.hpp"

namespace cocur {

namespace fs = std::filesystem;

ExpansionMode parse_expansion_mode(const std::string& s) {
    if (s == "vision") return ExpansionMode::Vision;
    if (s == "language") return ExpansionMode::Language;
    throw InputError("expansion.mode must be \"vision\" or \"language\", got \"" + s + "\"");
}

RankingMode parse_ranking_mode(const std::string& s) {
    if (s == "full") return RankingMode::Full;
    if (s == "naive") return RankingMode::Naive;
    throw InputError("ranking.mode must be \"full\" or \"naive\", got \"" + s + "\"");
}

SamplingMode parse_sampling_mode(const std::string& s) {
    if (s == "cluster") return SamplingMode::Cluster;
    if (s == "naive") return SamplingMode::Naive;
    throw InputError("sampling.mode must be \"cluster\" or \"naive\", got \"" + s + "\"");
}

const char* to_string(ExpansionMode m) {
    return m == ExpansionMode::Vision ? "vision" : "language";
}
const char* to_string(RankingMode m) {
    return m == RankingMode::Full ? "full" : "naive";
}
const char* to_string(SamplingMode m) {
    return m == SamplingMode::Cluster ? "cluster" : "naive";
}

void PipelineConfig::validate() const {
    auto require_file = [](const fs::path& p, const char* what) {
        if (p.empty()) {
            throw InputError(std::string("missing required path: ") + what);
        }
        if (!fs::exists(p)) {
            throw InputError(std::string(what) + " file does not exist: " + p.string());
        }
    };
    require_file(paths.pairs, "pairs");
    require_file(paths.images, "images");
    require_file(paths.concepts, "concepts");
    require_file(paths.concept_texts, "concept_texts");
    require_file(paths.lexicon, "lexicon");
    if (expansion.mode == ExpansionMode::Language) {
        require_file(paths.captions, "captions (required for language-driven expansion)");
    } else if (!paths.captions.empty()) {
        require_file(paths.captions, "captions");
    }
    if (paths.output.empty()) {
        throw InputError("missing required path: output");
    }
    // The output must never overwrite an input.
    for (const fs::path* in : {&paths.pairs, &paths.images, &paths.concepts,
                               &paths.concept_texts, &paths.captions, &paths.lexicon}) {
        if (!in->empty() && fs::exists(*in) && fs::exists(paths.output) &&
            fs::equivalent(*in, paths.output)) {
            throw InputError("output path collides with input file: " + in->string());
        }
        if (!in->empty() && *in == paths.output) {
            throw InputError("output path collides with input file: " + in->string());
        }
    }
    if (sampling.labels == 0) {
        throw InputError("sampling.L must be >= 1");
    }
    if (threads == 0) {
        throw InputError("threads must be >= 1");
    }
    if (kmeans.max_iter == 0) {
        throw InputError("kmeans.max_iter must be >= 1");
    }
}

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw InputError("config key " + key + ": expected a boolean, got \"" + value + "\"");
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw InputError("config key " + key + ": expected an unsigned integer, got \"" + value +
                         "\"");
    }
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

} // namespace

void apply_config_value(PipelineConfig& config, const std::string& key, const std::string& raw) {
    const std::string value = unquote(raw);
    if (key == "paths.pairs") config.paths.pairs = value;
    else if (key == "paths.images") config.paths.images = value;
    else if (key == "paths.concepts") config.paths.concepts = value;
    else if (key == "paths.concept_texts") config.paths.concept_texts = value;
    else if (key == "paths.captions") config.paths.captions = value;
    else if (key == "paths.lexicon") config.paths.lexicon = value;
    else if (key == "paths.output") config.paths.output = value;
    else if (key == "expansion.mode") config.expansion.mode = parse_expansion_mode(value);
    else if (key == "expansion.n_retrieve") config.expansion.n_retrieve = parse_u64(value, key);
    else if (key == "ranking.mode") config.ranking.mode = parse_ranking_mode(value);
    else if (key == "sampling.mode") config.sampling.mode = parse_sampling_mode(value);
    else if (key == "sampling.deterministic") config.sampling.deterministic = parse_bool(value, key);
    else if (key == "sampling.L" || key == "sampling.labels") config.sampling.labels = parse_u64(value, key);
    else if (key == "kmeans.max_iter") config.kmeans.max_iter = parse_u64(value, key);
    else if (key == "run.seed" || key == "seed") config.seed = parse_u64(value, key);
    else if (key == "run.threads" || key == "threads") config.threads = parse_u64(value, key);
    else throw InputError("unknown config key: " + key);
}

PipelineConfig parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config file: " + path.string());
    }
    PipelineConfig config;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '[') {
            if (trimmed.back() != ']') {
                throw InputError(path.string() + " line " + std::to_string(line_no) +
                                 ": malformed section header");
            }
            section = text::trim(trimmed.substr(1, trimmed.size() - 2));
            continue;
        }
        std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw InputError(path.string() + " line " + std::to_string(line_no) +
                             ": expected key = value");
        }
        const std::string key = text::trim(trimmed.substr(0, eq));
        const std::string value = text::trim(trimmed.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw InputError(path.string() + " line " + std::to_string(line_no) +
                             ": empty key or value");
        }
        const std::string dotted = section.empty() ? key : section + "." + key;
        try {
            apply_config_value(config, dotted, value);
        } catch (const InputError& e) {
            throw InputError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

} // namespace cocur
