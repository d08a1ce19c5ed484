#include <cmath>
#include <vector>

#include "atnj/kernels.hpp"

namespace atnj {
namespace {

void matmul_scalar(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) acc[j] = 0.0;
        const float* arow = a + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double al = static_cast<double>(arow[l]);
            const float* brow = b + l * n;
            for (std::size_t j = 0; j < n; ++j) {
                acc[j] += al * static_cast<double>(brow[j]);
            }
        }
        float* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[j]);
    }
}

void add_scaled_scalar(float* y, const float* x, float s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + s * x[i];
}

void softmax_rows_scalar(const float* x, float* out,
                         std::size_t rows, std::size_t cols) {
    std::vector<double> e(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* xr = x + r * cols;
        float mx = xr[0];
        for (std::size_t j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            e[j] = std::exp(static_cast<double>(xr[j]) - static_cast<double>(mx));
            sum += e[j];
        }
        float* or_ = out + r * cols;
        for (std::size_t j = 0; j < cols; ++j) {
            or_[j] = static_cast<float>(e[j] / sum);
        }
    }
}

double sq_diff_sum_scalar(const float* a, const float* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t body = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < body; i += 4) {
        const double d0 = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        const double d1 = static_cast<double>(a[i + 1]) - static_cast<double>(b[i + 1]);
        const double d2 = static_cast<double>(a[i + 2]) - static_cast<double>(b[i + 2]);
        const double d3 = static_cast<double>(a[i + 3]) - static_cast<double>(b[i + 3]);
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    double total = (s0 + s2) + (s1 + s3);
    for (std::size_t i = body; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        total += d * d;
    }
    return total;
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{
        "scalar",
        matmul_scalar,
        add_scaled_scalar,
        softmax_rows_scalar,
        sq_diff_sum_scalar,
    };
    return k;
}

}  // namespace atnj
