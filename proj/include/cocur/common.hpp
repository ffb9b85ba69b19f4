#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cocur {

/// Problems with user-supplied files, configs or arguments. CLI exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A broken internal invariant (a bug, not bad input). CLI exit code 2.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// Stable per-anchor stream id derived from (global seed, anchor id, salt).
// Results are independent of scheduling/thread count by construction.
std::uint64_t derive_stream(std::uint64_t seed, std::string_view id, std::uint64_t salt);

// Seeded RNG with hand-rolled distributions. mt19937_64's output sequence is
// pinned by the standard; uniform/gaussian/below are derived from raw draws
// here so sequences do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform();
    /// Standard normal (Box-Muller).
    double gaussian();
    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cocur
