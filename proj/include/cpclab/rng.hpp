#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cpclab {

// Deterministic random source. std::mt19937_64 is fully specified by the
// standard; the transforms below are hand-rolled because the standard
// distributions are implementation-defined and would break bit-for-bit
// reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (two uniforms, no cached spare).
    double normal();

    // Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t uniform_int(std::uint64_t n);

    std::vector<double> normal_vec(std::size_t n);

    // k distinct values from {0, ..., n-1}, returned sorted.
    std::vector<int> sample_distinct(int n, int k);

private:
    std::mt19937_64 engine_;
};

// Independent stream seed for (seed, stream). splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cpclab
