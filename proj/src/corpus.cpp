#include "cocur/corpus.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace cocur {

static_assert(std::endian::native == std::endian::little,
              "CEMB I/O assumes a little-endian host");

namespace text {

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) tokens.emplace_back(s.substr(start, i - start));
    }
    return tokens;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace text

static std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t len) {
    std::string out;
    for (std::size_t i = begin; i < begin + len; ++i) {
        if (i > begin) out += ' ';
        out += tokens[i];
    }
    return out;
}

ConceptLexicon::ConceptLexicon(const std::vector<std::string>& raw_entries) {
    for (const std::string& raw : raw_entries) {
        std::vector<std::string> tokens = text::tokenize(text::to_lower(raw));
        if (tokens.empty()) continue;
        std::string normalized = join_tokens(tokens, 0, tokens.size());
        if (entries_.insert(normalized).second) {
            ordered_.push_back(normalized);
            max_tokens_ = std::max(max_tokens_, static_cast<int>(tokens.size()));
        }
    }
}

ConceptLexicon ConceptLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open lexicon file: " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return ConceptLexicon(lines);
}

std::vector<std::string> extract_concepts(std::string_view caption, const ConceptLexicon& lexicon) {
    std::vector<std::string> result;
    if (lexicon.size() == 0) return result;

    std::vector<std::string> tokens = text::tokenize(text::to_lower(caption));
    std::unordered_set<std::string> seen;

    std::size_t i = 0;
    const std::size_t max_n = static_cast<std::size_t>(lexicon.max_tokens());
    while (i < tokens.size()) {
        bool matched = false;
        std::size_t longest = std::min(max_n, tokens.size() - i);
        for (std::size_t len = longest; len >= 1; --len) {
            std::string candidate = join_tokens(tokens, i, len);
            if (lexicon.contains(candidate)) {
                if (seen.insert(candidate).second) {
                    result.push_back(std::move(candidate));
                }
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) ++i;
    }
    return result;
}

std::vector<PairRecord> load_pairs(const std::filesystem::path& path, const ConceptLexicon& lexicon) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open pairs file: " + path.string());
    }

    std::vector<PairRecord> records;
    std::unordered_map<std::string, std::size_t> first_line_of_id; // 1-based
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
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
            !obj.contains("caption") || !obj["caption"].is_string()) {
            throw InputError(path.string() + " line " + std::to_string(line_no) +
                             ": expected an object with string fields \"id\" and \"caption\"");
        }
        PairRecord rec;
        rec.id = obj["id"].get<std::string>();
        rec.caption = obj["caption"].get<std::string>();
        if (rec.id.empty()) {
            throw InputError(path.string() + " line " + std::to_string(line_no) + ": empty id");
        }
        auto [it, inserted] = first_line_of_id.emplace(rec.id, line_no);
        if (!inserted) {
            throw InputError(path.string() + ": duplicate id \"" + rec.id + "\" on lines " +
                             std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        rec.concepts = extract_concepts(rec.caption, lexicon);
        rec.row = records.size();
        records.push_back(std::move(rec));
    }
    return records;
}

// Renormalizes each row to unit Euclidean length. Rows already unit to within
// 1e-6 are left untouched so that normalization is idempotent at the bit
// level (required for exact write->read round trips).
static void normalize_rows(std::vector<float>& data, std::size_t dim) {
    const std::size_t n = data.size() / dim;
    for (std::size_t r = 0; r < n; ++r) {
        float* row = data.data() + r * dim;
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            norm_sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
        }
        if (!std::isfinite(norm_sq)) {
            throw InputError("embedding row " + std::to_string(r) + " contains non-finite values");
        }
        double norm = std::sqrt(norm_sq);
        if (norm < 1e-12) {
            throw InputError("embedding row " + std::to_string(r) + " is degenerate (norm " +
                             std::to_string(norm) + " < 1e-12)");
        }
        if (std::abs(norm - 1.0) > 1e-6) {
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = static_cast<float>(static_cast<double>(row[j]) / norm);
            }
        }
    }
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> data, EmbeddingKind kind)
    : dim_(dim), kind_(kind), data_(std::move(data)) {
    if (dim_ < 2) {
        throw InputError("embedding dimension must be >= 2, got " + std::to_string(dim_));
    }
    if (data_.empty() || data_.size() % dim_ != 0) {
        throw InputError("embedding data size " + std::to_string(data_.size()) +
                         " is not a positive multiple of dim " + std::to_string(dim_));
    }
    normalize_rows(data_, dim_);
}

std::span<const float> EmbeddingMatrix::row(std::size_t r) const {
    if (r >= rows()) {
        throw InternalError("embedding row index " + std::to_string(r) + " out of range (" +
                            std::to_string(rows()) + " rows)");
    }
    return std::span<const float>(data_.data() + r * dim_, dim_);
}

namespace {

constexpr char kMagic[4] = {'C', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
           static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

} // namespace

EmbeddingMatrix EmbeddingMatrix::load(const std::filesystem::path& path,
                                      std::optional<std::uint32_t> expected_dim,
                                      EmbeddingKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open embedding file: " + path.string());
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw InputError(path.string() + ": not a CEMB file (bad magic)");
    }
    std::uint32_t version = read_u32(in);
    if (!in || version != kVersion) {
        throw InputError(path.string() + ": unsupported CEMB version " + std::to_string(version));
    }
    std::uint32_t count = read_u32(in);
    std::uint32_t dim = read_u32(in);
    if (!in) {
        throw InputError(path.string() + ": truncated CEMB header");
    }
    if (count == 0) {
        throw InputError(path.string() + ": CEMB row count must be >= 1");
    }
    if (expected_dim && dim != *expected_dim) {
        throw InputError(path.string() + ": dimension mismatch: file has " + std::to_string(dim) +
                         ", expected " + std::to_string(*expected_dim));
    }
    std::vector<float> data(static_cast<std::size_t>(count) * dim);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(float))) {
        throw InputError(path.string() + ": truncated CEMB payload");
    }
    return EmbeddingMatrix(dim, std::move(data), kind);
}

void EmbeddingMatrix::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot open embedding file for writing: " + path.string());
    }
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(rows()));
    write_u32(out, static_cast<std::uint32_t>(dim_));
    out.write(reinterpret_cast<const char*>(data_.data()),
              static_cast<std::streamsize>(data_.size() * sizeof(float)));
    if (!out) {
        throw InputError("failed writing embedding file: " + path.string());
    }
}

} // namespace cocur
