#pragma once

#include <cstring>

#include "atnj/rng.hpp"
#include "atnj/tensor.hpp"

namespace atnj::test {

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    rng.fill_normal(t.values(), 0.0, scale);
    return t;
}

inline bool bits_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0;
}

// Independent triple-loop oracle, f64 accumulation.
inline Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) {
                acc += static_cast<double>(a.at2(i, l)) * static_cast<double>(b.at2(l, j));
            }
            c.at2(i, j) = static_cast<float>(acc);
        }
    }
    return c;
}

}  // namespace atnj::test
