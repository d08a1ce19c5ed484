#include "atnj/ops.hpp"

#include <cmath>
#include <cstring>

#include "atnj/kernels.hpp"

namespace atnj {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionMismatch("matmul expects rank-2 tensors");
    }
    const std::size_t m = a.dim(0), k = a.dim(1);
    if (b.dim(0) != k) {
        throw DimensionMismatch("matmul inner dimensions differ");
    }
    const std::size_t n = b.dim(1);
    Tensor c({m, n});
    active_kernels().matmul(a.data(), b.data(), c.data(), m, k, n);
    return c;
}

Tensor transpose2(const Tensor& x) {
    if (x.rank() != 2) throw DimensionMismatch("transpose2 expects rank-2");
    const std::size_t r = x.dim(0), c = x.dim(1);
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out.at2(j, i) = x.at2(i, j);
    }
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw DimensionMismatch("softmax_rows expects rank-2");
    Tensor out(x.shape());
    active_kernels().softmax_rows(x.data(), out.data(), x.dim(0), x.dim(1));
    return out;
}

Tensor minmax_normalize(const Tensor& x) {
    if (x.empty()) throw DimensionMismatch("minmax_normalize: empty tensor");
    float mn = x[0], mx = x[0];
    for (float v : x.values()) {
        mn = v < mn ? v : mn;
        mx = v > mx ? v : mx;
    }
    Tensor out(x.shape());
    if (mx == mn) return out;  // constant input -> zero mask
    const double lo = mn, range = static_cast<double>(mx) - static_cast<double>(mn);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        out[i] = static_cast<float>((static_cast<double>(x[i]) - lo) / range);
    }
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x[i]))));
    }
    return out;
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    if (a.rank() != b.rank()) throw DimensionMismatch("concat: rank mismatch");
    if (axis >= a.rank()) throw DimensionMismatch("concat: axis out of range");
    for (std::size_t d = 0; d < a.rank(); ++d) {
        if (d != axis && a.dim(d) != b.dim(d)) {
            throw DimensionMismatch("concat: shapes differ off the concat axis");
        }
    }
    std::vector<std::size_t> shape = a.shape();
    shape[axis] += b.dim(axis);
    Tensor out(shape);

    // outer = product of dims before axis, inner = product after.
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= a.dim(d);
    for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.dim(d);
    const std::size_t a_span = a.dim(axis) * inner;
    const std::size_t b_span = b.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
        std::memcpy(out.data() + o * (a_span + b_span),
                    a.data() + o * a_span, a_span * sizeof(float));
        std::memcpy(out.data() + o * (a_span + b_span) + a_span,
                    b.data() + o * b_span, b_span * sizeof(float));
    }
    return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len) {
    if (axis >= x.rank()) throw DimensionMismatch("slice: axis out of range");
    if (len == 0 || start + len > x.dim(axis)) {
        throw DimensionMismatch("slice: range out of bounds");
    }
    std::vector<std::size_t> shape = x.shape();
    shape[axis] = len;
    Tensor out(shape);
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
    for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
    const std::size_t x_span = x.dim(axis) * inner;
    const std::size_t o_span = len * inner;
    for (std::size_t o = 0; o < outer; ++o) {
        std::memcpy(out.data() + o * o_span,
                    x.data() + o * x_span + start * inner, o_span * sizeof(float));
    }
    return out;
}

void add_scaled_inplace(Tensor& y, const Tensor& x, float s) {
    if (!y.same_shape(x)) throw DimensionMismatch("add_scaled: shape mismatch");
    active_kernels().add_scaled(y.data(), x.data(), s, y.numel());
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("sub: shape mismatch");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
    return out;
}

void scale_inplace(Tensor& x, float s) {
    for (float& v : x.values()) v *= s;
}

double sq_diff_sum(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("sq_diff_sum: shape mismatch");
    return active_kernels().sq_diff_sum(a.data(), b.data(), a.numel());
}

double mse(const Tensor& a, const Tensor& b) {
    return sq_diff_sum(a, b) / static_cast<double>(a.numel());
}

double l2_norm(const Tensor& x) {
    double s = 0.0;
    for (float v : x.values()) s += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(s);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionMismatch("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
        m = d > m ? d : m;
    }
    return m;
}

}  // namespace atnj
