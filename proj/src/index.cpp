#include "cocur/index.hpp"

#include <algorithm>
#include <unordered_set>

namespace cocur {

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw InputError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()) + ")");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    }
    return std::clamp(dot, -1.0, 1.0);
}

VectorIndex::VectorIndex(const EmbeddingMatrix& matrix, std::vector<std::string> ids)
    : matrix_(&matrix), ids_(std::move(ids)) {
    if (ids_.size() != matrix.rows()) {
        throw InternalError("VectorIndex: " + std::to_string(ids_.size()) + " ids for " +
                            std::to_string(matrix.rows()) + " rows");
    }
    std::unordered_set<std::string_view> seen;
    for (const std::string& id : ids_) {
        if (!seen.insert(id).second) {
            throw InternalError("VectorIndex: duplicate id \"" + id + "\"");
        }
    }
}

namespace {

// true if a ranks strictly better than b: higher sim, then lower row.
inline bool better(double sim_a, std::size_t row_a, double sim_b, std::size_t row_b) {
    if (sim_a != sim_b) return sim_a > sim_b;
    return row_a < row_b;
}

} // namespace

std::vector<Neighbor> VectorIndex::top_n(std::span<const float> query, std::size_t n,
                                         const std::optional<std::string>& exclude) const {
    std::vector<Neighbor> out;
    if (n == 0) return out;

    // Min-heap on (sim, row) with the worst kept on top; ejects eagerly so the
    // scan is O(rows log n).
    using Entry = std::pair<double, std::size_t>; // (sim, row)
    auto worse_first = [](const Entry& a, const Entry& b) {
        return better(a.first, a.second, b.first, b.second);
    };
    std::vector<Entry> heap;
    heap.reserve(n + 1);

    const std::size_t rows = matrix_->rows();
    for (std::size_t r = 0; r < rows; ++r) {
        if (exclude && ids_[r] == *exclude) continue;
        double sim = cosine(query, matrix_->row(r));
        if (heap.size() == n) {
            const Entry& worst = heap.front();
            if (!better(sim, r, worst.first, worst.second)) continue;
            std::pop_heap(heap.begin(), heap.end(), worse_first);
            heap.pop_back();
        }
        heap.emplace_back(sim, r);
        std::push_heap(heap.begin(), heap.end(), worse_first);
    }

    std::sort(heap.begin(), heap.end(), [](const Entry& a, const Entry& b) {
        return better(a.first, a.second, b.first, b.second);
    });
    out.reserve(heap.size());
    for (const Entry& e : heap) {
        out.push_back(Neighbor{ids_[e.second], e.second, e.first});
    }
    return out;
}

std::vector<Neighbor> brute_force_top_n(const EmbeddingMatrix& matrix,
                                        const std::vector<std::string>& ids,
                                        std::span<const float> query, std::size_t n,
                                        const std::optional<std::string>& exclude) {
    if (ids.size() != matrix.rows()) {
        throw InternalError("brute_force_top_n: " + std::to_string(ids.size()) + " ids for " +
                            std::to_string(matrix.rows()) + " rows");
    }
    std::vector<Neighbor> all;
    all.reserve(matrix.rows());
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        if (exclude && ids[r] == *exclude) continue;
        all.push_back(Neighbor{ids[r], r, cosine(query, matrix.row(r))});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.row < b.row;
    });
    if (all.size() > n) all.resize(n);
    return all;
}

} // namespace cocur
