#include "atnj/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>
#include <vector>

namespace atnj {
namespace {

// Same accumulation order as the scalar reference: per output element the
// f64 products are added in ascending-l order, so results are bit-identical.
void matmul_avx2(const float* a, const float* b, float* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t body = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::size_t j = 0; j < body; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (std::size_t l = 0; l < k; ++l) {
                const __m256d av = _mm256_set1_pd(static_cast<double>(arow[l]));
                const __m256d bv = _mm256_cvtps_pd(_mm_loadu_ps(b + l * n + j));
                acc = _mm256_add_pd(acc, _mm256_mul_pd(av, bv));
            }
            _mm_storeu_ps(crow + j, _mm256_cvtpd_ps(acc));
        }
        for (std::size_t j = body; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) {
                acc += static_cast<double>(arow[l]) * static_cast<double>(b[l * n + j]);
            }
            crow[j] = static_cast<float>(acc);
        }
    }
}

void add_scaled_avx2(float* y, const float* x, float s, std::size_t n) {
    const __m256 sv = _mm256_set1_ps(s);
    const std::size_t body = n & ~static_cast<std::size_t>(7);
    for (std::size_t i = 0; i < body; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 yv = _mm256_loadu_ps(y + i);
        _mm256_storeu_ps(y + i, _mm256_add_ps(yv, _mm256_mul_ps(sv, xv)));
    }
    for (std::size_t i = body; i < n; ++i) y[i] = y[i] + s * x[i];
}

float row_max_avx2(const float* xr, std::size_t cols) {
    // max is associative and commutative, so the tree order matches the
    // sequential scan for finite inputs.
    std::size_t body = cols & ~static_cast<std::size_t>(7);
    float mx;
    if (body) {
        __m256 mv = _mm256_loadu_ps(xr);
        for (std::size_t j = 8; j < body; j += 8) {
            mv = _mm256_max_ps(mv, _mm256_loadu_ps(xr + j));
        }
        __m128 lo = _mm256_castps256_ps128(mv);
        __m128 hi = _mm256_extractf128_ps(mv, 1);
        __m128 m4 = _mm_max_ps(lo, hi);
        __m128 m2 = _mm_max_ps(m4, _mm_movehl_ps(m4, m4));
        __m128 m1 = _mm_max_ss(m2, _mm_shuffle_ps(m2, m2, 1));
        mx = _mm_cvtss_f32(m1);
    } else {
        mx = xr[0];
        body = 1;
    }
    for (std::size_t j = body; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
    return mx;
}

void softmax_rows_avx2(const float* x, float* out,
                       std::size_t rows, std::size_t cols) {
    std::vector<double> e(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* xr = x + r * cols;
        const float mx = row_max_avx2(xr, cols);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            e[j] = std::exp(static_cast<double>(xr[j]) - static_cast<double>(mx));
            sum += e[j];
        }
        float* or_ = out + r * cols;
        const __m256d sv = _mm256_set1_pd(sum);
        const std::size_t body = cols & ~static_cast<std::size_t>(3);
        for (std::size_t j = 0; j < body; j += 4) {
            const __m256d ev = _mm256_loadu_pd(e.data() + j);
            _mm_storeu_ps(or_ + j, _mm256_cvtpd_ps(_mm256_div_pd(ev, sv)));
        }
        for (std::size_t j = body; j < cols; ++j) {
            or_[j] = static_cast<float>(e[j] / sum);
        }
    }
}

double sq_diff_sum_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t body = n & ~static_cast<std::size_t>(3);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d av = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
        const __m256d bv = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
        const __m256d d = _mm256_sub_pd(av, bv);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    // (s0+s2)+(s1+s3), matching the scalar reference combine.
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    double total = _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
    for (std::size_t i = body; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        total += d * d;
    }
    return total;
}

}  // namespace

const Kernels* avx2_kernels_impl() {
    static const Kernels k{
        "avx2",
        matmul_avx2,
        add_scaled_avx2,
        softmax_rows_avx2,
        sq_diff_sum_avx2,
    };
    return &k;
}

}  // namespace atnj

#else

namespace atnj {
const Kernels* avx2_kernels_impl() { return nullptr; }
}  // namespace atnj

#endif
