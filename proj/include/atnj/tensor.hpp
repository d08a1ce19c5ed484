#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "atnj/errors.hpp"

namespace atnj {

// Dense row-major f32 n-dimensional array. The universal value carrier:
// plain value semantics, no views, no broadcasting.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    static Tensor full(std::vector<std::size_t> shape, float value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    // Ref-qualified: a span over a temporary would dangle in range-fors.
    std::span<float> values() & { return data_; }
    std::span<const float> values() const& { return data_; }
    std::span<float> values() && = delete;
    std::span<const float> values() const&& = delete;

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Rank-2 accessors; no bounds checks beyond debug builds.
    float& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    float at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    // Rank-3 accessor (channel, row, col).
    float& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    float at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Reinterprets the flat data under a new shape with equal element count.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    bool all_finite() const;
    void require_finite(const char* what) const;  // throws NonFinite

private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

// Order-sensitive hash of shape and little-endian f32 payload.
std::uint64_t tensor_hash(const Tensor& t);

}  // namespace atnj
