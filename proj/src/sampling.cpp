#include "cocur/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cocur {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

// k-means++: first center uniform, then D^2-weighted draws.
std::vector<std::size_t> kmeanspp_init(const std::vector<double>& data, std::size_t m,
                                       std::size_t d, std::size_t k, Rng& rng) {
    std::vector<std::size_t> centers;
    centers.reserve(k);
    centers.push_back(rng.below(m));

    std::vector<double> min_d2(m);
    for (std::size_t i = 0; i < m; ++i) {
        min_d2[i] = sq_dist(&data[i * d], &data[centers[0] * d], d);
    }

    while (centers.size() < k) {
        double total = 0.0;
        for (double w : min_d2) total += w;
        std::size_t chosen;
        if (total <= 0.0) {
            // Only duplicates of existing centers remain; pick uniformly.
            chosen = rng.below(m);
        } else {
            double r = rng.uniform() * total;
            double cum = 0.0;
            chosen = m - 1;
            for (std::size_t i = 0; i < m; ++i) {
                cum += min_d2[i];
                if (cum > r) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.push_back(chosen);
        for (std::size_t i = 0; i < m; ++i) {
            min_d2[i] = std::min(min_d2[i], sq_dist(&data[i * d], &data[chosen * d], d));
        }
    }
    return centers;
}

} // namespace

ClusterAssignment kmeans(const std::vector<double>& data, std::size_t m, std::size_t d,
                         std::size_t k, std::uint64_t seed, std::size_t max_iter) {
    if (m == 0 || d == 0 || data.size() != m * d) {
        throw InternalError("kmeans: bad data shape");
    }
    if (k == 0) {
        throw InternalError("kmeans: k must be >= 1");
    }
    const std::size_t k_eff = std::min(k, m);

    ClusterAssignment result;
    result.k = k_eff;
    result.dim = d;
    result.centroids.assign(k_eff * d, 0.0);

    Rng rng(seed);
    const std::vector<std::size_t> seeds = kmeanspp_init(data, m, d, k_eff, rng);
    for (std::size_t c = 0; c < k_eff; ++c) {
        std::copy_n(&data[seeds[c] * d], d, &result.centroids[c * d]);
    }

    std::vector<int> assignment(m, -1);
    std::vector<int> prev(m, -1);
    std::vector<std::size_t> counts(k_eff, 0);

    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        // Assign: nearest centroid, ties to the lowest cluster id.
        for (std::size_t i = 0; i < m; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < k_eff; ++c) {
                double dist = sq_dist(&data[i * d], &result.centroids[c * d], d);
                if (dist < best) {
                    best = dist;
                    best_c = static_cast<int>(c);
                }
            }
            assignment[i] = best_c;
        }

        // Repair empty clusters by stealing the point farthest from its
        // assigned centroid, from clusters that can spare one.
        std::fill(counts.begin(), counts.end(), 0);
        for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
        for (std::size_t e = 0; e < k_eff; ++e) {
            if (counts[e] != 0) continue;
            double farthest = -1.0;
            std::size_t victim = m; // none
            for (std::size_t i = 0; i < m; ++i) {
                if (counts[static_cast<std::size_t>(assignment[i])] < 2) continue;
                double dist = sq_dist(&data[i * d],
                                      &result.centroids[static_cast<std::size_t>(assignment[i]) * d], d);
                if (dist > farthest) {
                    farthest = dist;
                    victim = i;
                }
            }
            if (victim == m) {
                throw InternalError("kmeans: cannot repair empty cluster");
            }
            --counts[static_cast<std::size_t>(assignment[victim])];
            assignment[victim] = static_cast<int>(e);
            ++counts[e];
        }

        // Update: centroid = mean of members.
        std::fill(result.centroids.begin(), result.centroids.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t c = static_cast<std::size_t>(assignment[i]);
            for (std::size_t j = 0; j < d; ++j) {
                result.centroids[c * d + j] += data[i * d + j];
            }
        }
        for (std::size_t c = 0; c < k_eff; ++c) {
            const double inv = 1.0 / static_cast<double>(counts[c]);
            for (std::size_t j = 0; j < d; ++j) {
                result.centroids[c * d + j] *= inv;
            }
        }

        double inertia = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            inertia += sq_dist(&data[i * d],
                               &result.centroids[static_cast<std::size_t>(assignment[i]) * d], d);
        }
        if (!result.inertia_trace.empty() && inertia > result.inertia_trace.back() + 1e-9) {
            throw InternalError("kmeans: inertia increased across an iteration");
        }
        result.inertia_trace.push_back(inertia);
        result.iterations = iter;

        if (assignment == prev) {
            result.converged = true;
            break;
        }
        prev = assignment;
    }

    result.assignment = std::move(assignment);
    result.inertia = result.inertia_trace.back();
    return result;
}

namespace {

void require_scored(const ConceptArchive& archive, const char* op) {
    for (const ArchiveEntry& e : archive.entries) {
        if (!e.score) {
            throw InputError(std::string(op) + ": archive for \"" + archive.anchor_id +
                             "\" is unscored (concept \"" + e.name + "\")");
        }
    }
}

// Weighted draw over `weights` restricted to indices where alive[i] is true.
// Falls back to a uniform draw among alive indices when all weights are zero.
std::size_t weighted_pick(const std::vector<double>& weights, const std::vector<bool>& alive,
                          Rng& rng) {
    double total = 0.0;
    std::size_t n_alive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!alive[i]) continue;
        total += weights[i];
        ++n_alive;
    }
    if (n_alive == 0) {
        throw InternalError("weighted_pick: nothing to pick from");
    }
    if (total <= 0.0) {
        std::uint64_t target = rng.below(n_alive);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!alive[i]) continue;
            if (target == 0) return i;
            --target;
        }
    }
    double r = rng.uniform() * total;
    double cum = 0.0;
    std::size_t last_alive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!alive[i]) continue;
        last_alive = i;
        cum += weights[i];
        if (cum > r) return i;
    }
    return last_alive; // r landed on the top edge
}

} // namespace

SampledConcepts cluster_guided_sample(const ConceptArchive& archive,
                                      const ClusterAssignment& clusters, std::size_t l,
                                      std::uint64_t seed, bool deterministic) {
    if (l == 0) {
        throw InputError("cluster_guided_sample: L must be >= 1");
    }
    require_scored(archive, "cluster_guided_sample");
    if (clusters.assignment.size() != archive.entries.size()) {
        throw InternalError("cluster_guided_sample: cluster assignment does not cover the archive");
    }

    SampledConcepts out;
    out.anchor_id = archive.anchor_id;
    out.mode = SamplingMode::Cluster;
    out.seed = seed;

    Rng rng(seed);
    for (std::size_t c = 0; c < clusters.k; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < archive.entries.size(); ++i) {
            if (clusters.assignment[i] == static_cast<int>(c)) members.push_back(i);
        }
        if (members.empty()) continue;

        std::size_t pick;
        if (deterministic) {
            pick = members[0];
            for (std::size_t i : members) {
                const ArchiveEntry& a = archive.entries[i];
                const ArchiveEntry& b = archive.entries[pick];
                if (a.score->s > b.score->s ||
                    (a.score->s == b.score->s && a.name < b.name)) {
                    pick = i;
                }
            }
        } else {
            std::vector<double> weights(members.size());
            for (std::size_t j = 0; j < members.size(); ++j) {
                weights[j] = std::max(archive.entries[members[j]].score->s, 0.0);
            }
            std::vector<bool> alive(members.size(), true);
            pick = members[weighted_pick(weights, alive, rng)];
        }
        const ArchiveEntry& e = archive.entries[pick];
        out.picks.push_back(SampledPick{e.name, static_cast<int>(c), e.score->s});
    }
    return out;
}

SampledConcepts naive_sample(const ConceptArchive& archive, std::size_t l, std::uint64_t seed,
                             bool deterministic) {
    if (l == 0) {
        throw InputError("naive_sample: L must be >= 1");
    }
    require_scored(archive, "naive_sample");

    SampledConcepts out;
    out.anchor_id = archive.anchor_id;
    out.mode = SamplingMode::Naive;
    out.seed = seed;

    const std::size_t take = std::min(l, archive.entries.size());
    if (take == 0) return out;

    if (deterministic) {
        std::vector<std::size_t> order(archive.entries.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const ArchiveEntry& ea = archive.entries[a];
            const ArchiveEntry& eb = archive.entries[b];
            if (ea.score->s != eb.score->s) return ea.score->s > eb.score->s;
            return ea.name < eb.name;
        });
        for (std::size_t i = 0; i < take; ++i) {
            const ArchiveEntry& e = archive.entries[order[i]];
            out.picks.push_back(SampledPick{e.name, e.cluster, e.score->s});
        }
    } else {
        Rng rng(seed);
        std::vector<double> weights(archive.entries.size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = std::max(archive.entries[i].score->s, 0.0);
        }
        std::vector<bool> alive(archive.entries.size(), true);
        for (std::size_t drawn = 0; drawn < take; ++drawn) {
            std::size_t pick = weighted_pick(weights, alive, rng);
            alive[pick] = false;
            const ArchiveEntry& e = archive.entries[pick];
            out.picks.push_back(SampledPick{e.name, e.cluster, e.score->s});
        }
    }
    return out;
}

} // namespace cocur
