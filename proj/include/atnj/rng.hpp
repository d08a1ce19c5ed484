#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "atnj/tensor.hpp"

namespace atnj {

// SplitMix64 stream with Box-Muller Gaussian sampling. One 64-bit word of
// state; identical seed gives an identical stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t state() const { return state_; }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]: top 53 bits, shifted into (0,1] so log() is safe.
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // One Box-Muller pair from two uniforms.
    std::pair<double, double> next_normal_pair();

    // Fills out with N(mean, stddev^2) draws. Consumes ceil(n/2) pairs; the
    // odd tail discards its second half, no carry between calls.
    void fill_normal(std::span<float> out, double mean = 0.0, double stddev = 1.0);

private:
    std::uint64_t state_;
};

// n standard-normal draws as a rank-1 tensor.
Tensor rng_normal(Rng& rng, std::size_t n);

}  // namespace atnj
