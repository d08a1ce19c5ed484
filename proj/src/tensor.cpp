#include "atnj/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

namespace atnj {

namespace {

std::size_t checked_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionMismatch("tensor dimension must be positive");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size()) {
        throw DimensionMismatch("tensor data length does not match shape");
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, float value) {
    Tensor t(std::move(shape));
    for (float& v : t.data_) v = value;
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw DimensionMismatch("axis out of range");
    return shape_[axis];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (checked_numel(new_shape) != data_.size()) {
        throw DimensionMismatch("reshape changes element count");
    }
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::require_finite(const char* what) const {
    if (!all_finite()) throw NonFinite(std::string(what) + ": non-finite value");
}

std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t tensor_hash(const Tensor& t) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t d : t.shape()) {
        std::uint64_t v = d;
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        h = fnv1a64(b, 8, h);
    }
    for (float f : t.values()) {
        std::uint32_t v = std::bit_cast<std::uint32_t>(f);
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        h = fnv1a64(b, 4, h);
    }
    return h;
}

}  // namespace atnj
