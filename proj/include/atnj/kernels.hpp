#pragma once

#include <cstddef>

namespace atnj {

// Inner-loop kernel table. Every entry has a scalar reference implementation
// and may have SIMD variants selected once at startup. Variants are required
// to be BIT-IDENTICAL to the scalar reference: accumulation happens in f64
// with a fixed canonical order, f32 element-wise paths round identically per
// lane, and transcendental calls stay on scalar libm. Equivalence tests
// assert byte equality, so dispatch never changes results.
struct Kernels {
    const char* name;

    // c[m x n] = a[m x k] * b[k x n]; per output element the products are
    // accumulated in f64 in ascending-l order, then rounded once to f32.
    void (*matmul)(const float* a, const float* b, float* c,
                   std::size_t m, std::size_t k, std::size_t n);

    // y[i] = y[i] + s * x[i], all in f32 (two roundings per element).
    void (*add_scaled)(float* y, const float* x, float s, std::size_t n);

    // Row-wise softmax: max-shift, exp and the running sum in f64, one f32
    // rounding at the final divide.
    void (*softmax_rows)(const float* x, float* out,
                         std::size_t rows, std::size_t cols);

    // Sum of squared differences in f64. Canonical order: four interleaved
    // partial sums over the 4-aligned body combined as (s0+s2)+(s1+s3),
    // then the tail elements added sequentially.
    double (*sq_diff_sum)(const float* a, const float* b, std::size_t n);
};

const Kernels& scalar_kernels();

// Null when unsupported by the build target or the running CPU.
const Kernels* avx2_kernels();

// Selected once per process: honours ATNJ_KERNELS={auto,scalar,avx2},
// falling back to scalar with a warning when avx2 is unavailable.
const Kernels& active_kernels();

}  // namespace atnj
