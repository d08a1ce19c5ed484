#include "atnj/rng.hpp"

#include <cmath>

namespace atnj {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::pair<double, double> Rng::next_normal_pair() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

void Rng::fill_normal(std::span<float> out, double mean, double stddev) {
    std::size_t i = 0;
    while (i < out.size()) {
        const auto [z1, z2] = next_normal_pair();
        out[i++] = static_cast<float>(mean + stddev * z1);
        if (i < out.size()) out[i++] = static_cast<float>(mean + stddev * z2);
    }
}

Tensor rng_normal(Rng& rng, std::size_t n) {
    if (n == 0) throw DimensionMismatch("rng_normal: n must be >= 1");
    Tensor t({n});
    rng.fill_normal(t.values());
    return t;
}

}  // namespace atnj
