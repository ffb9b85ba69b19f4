#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cocur/expansion.hpp"

namespace cocur {

struct ClusterAssignment {
    std::size_t k = 0;   // effective cluster count, min(requested k, points)
    std::size_t dim = 0;
    std::vector<int> assignment;    // per input row
    std::vector<double> centroids;  // k * dim row-major
    double inertia = 0.0;           // sum of squared distances to assigned centroid
    std::vector<double> inertia_trace; // after each Lloyd update, non-increasing
    std::size_t iterations = 0;
    bool converged = false; // assignment fixpoint reached before max_iter
};

/// Lloyd's algorithm with k-means++ seeding from a seeded RNG. Euclidean
/// distance; nearest-centroid ties break to the lowest cluster id; an empty
/// cluster steals the point farthest from its assigned centroid (from
/// clusters with at least two members, ties to the lowest point index).
/// `data` is m rows of dimension d, row-major.
ClusterAssignment kmeans(const std::vector<double>& data, std::size_t m, std::size_t d,
                         std::size_t k, std::uint64_t seed, std::size_t max_iter = 100);

enum class SamplingMode { Cluster, Naive };

struct SampledPick {
    std::string name;
    int cluster = -1;
    double score = 0.0;
};

struct SampledConcepts {
    std::string anchor_id;
    SamplingMode mode = SamplingMode::Cluster;
    std::uint64_t seed = 0;
    std::vector<SampledPick> picks;
};

/// One concept per non-empty cluster, ordered by cluster id. Deterministic
/// mode takes the per-cluster argmax by score (ties lexicographic); otherwise
/// one seeded draw per cluster with probability proportional to max(s, 0)
/// (uniform within the cluster when all clipped scores are zero).
/// `clusters.assignment` must be aligned with `archive.entries`.
SampledConcepts cluster_guided_sample(const ConceptArchive& archive,
                                      const ClusterAssignment& clusters, std::size_t l,
                                      std::uint64_t seed, bool deterministic);

/// Relevancy-only selection: deterministic mode takes the top-L by score;
/// otherwise L distinct seeded draws without replacement, proportional to
/// max(s, 0). Archives smaller than L are returned whole.
SampledConcepts naive_sample(const ConceptArchive& archive, std::size_t l, std::uint64_t seed,
                             bool deterministic);

} // namespace cocur
