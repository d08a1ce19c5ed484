#pragma once

#include "atnj/tensor.hpp"

namespace atnj {

// Rank-2 matrix product; f64 accumulation, f32 storage.
Tensor matmul(const Tensor& a, const Tensor& b);

// Rank-2 transpose.
Tensor transpose2(const Tensor& x);

// Row-wise softmax with max-shift; rows sum to 1 within 1e-6.
Tensor softmax_rows(const Tensor& x);

// (x - min) / (max - min) over the whole tensor; a constant tensor maps to
// all zeros so degenerate attention maps stay well-defined.
Tensor minmax_normalize(const Tensor& x);

// Elementwise 1 / (1 + e^-x), evaluated in f64.
Tensor sigmoid(const Tensor& x);

// Concatenation along `axis`; a's data precedes b's.
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);

// Contiguous sub-range [start, start+len) along `axis`.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len);

// y += s * x elementwise (f32).
void add_scaled_inplace(Tensor& y, const Tensor& x, float s = 1.0f);

// Elementwise a - b.
Tensor sub(const Tensor& a, const Tensor& b);

// Scales every element by s (f32).
void scale_inplace(Tensor& x, float s);

// Sum of squared differences / mean squared error, f64 accumulation.
double sq_diff_sum(const Tensor& a, const Tensor& b);
double mse(const Tensor& a, const Tensor& b);

double l2_norm(const Tensor& x);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace atnj
