#include <doctest.h>

#include <cstring>

#include "atnj/kernels.hpp"
#include "atnj/rng.hpp"
#include "test_helpers.hpp"

using namespace atnj;
using test::random_tensor;

// The SIMD variants are required to be bit-identical to the scalar
// reference, not merely close; golden files and run-to-run determinism
// rely on it.
TEST_CASE("scalar and avx2 kernels are bit-identical") {
    const Kernels* simd = avx2_kernels();
    if (!simd) {
        MESSAGE("avx2 unavailable on this host; equivalence not exercised");
        return;
    }
    const Kernels& ref = scalar_kernels();
    Rng rng(2024);

    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m = 1 + rng.next_u64() % 40;
        const std::size_t k = 1 + rng.next_u64() % 40;
        const std::size_t n = 1 + rng.next_u64() % 40;
        Tensor a = random_tensor(rng, {m, k}, 2.0);
        Tensor b = random_tensor(rng, {k, n}, 2.0);
        Tensor c1({m, n}), c2({m, n});
        ref.matmul(a.data(), b.data(), c1.data(), m, k, n);
        simd->matmul(a.data(), b.data(), c2.data(), m, k, n);
        REQUIRE(std::memcmp(c1.data(), c2.data(), c1.numel() * 4) == 0);
    }

    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.next_u64() % 300;
        Tensor x = random_tensor(rng, {n});
        Tensor y1 = random_tensor(rng, {n});
        Tensor y2 = y1;
        const float s = static_cast<float>(rng.next_uniform() * 4.0 - 2.0);
        ref.add_scaled(y1.data(), x.data(), s, n);
        simd->add_scaled(y2.data(), x.data(), s, n);
        REQUIRE(std::memcmp(y1.data(), y2.data(), n * 4) == 0);
    }

    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t rows = 1 + rng.next_u64() % 12;
        const std::size_t cols = 1 + rng.next_u64() % 150;
        Tensor x = random_tensor(rng, {rows, cols}, 5.0);
        Tensor p1({rows, cols}), p2({rows, cols});
        ref.softmax_rows(x.data(), p1.data(), rows, cols);
        simd->softmax_rows(x.data(), p2.data(), rows, cols);
        REQUIRE(std::memcmp(p1.data(), p2.data(), p1.numel() * 4) == 0);
    }

    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.next_u64() % 500;
        Tensor a = random_tensor(rng, {n});
        Tensor b = random_tensor(rng, {n});
        const double s1 = ref.sq_diff_sum(a.data(), b.data(), n);
        const double s2 = simd->sq_diff_sum(a.data(), b.data(), n);
        REQUIRE(s1 == s2);
    }
}

TEST_CASE("active kernel dispatch returns a usable table") {
    const Kernels& k = active_kernels();
    CHECK(k.matmul != nullptr);
    CHECK(k.add_scaled != nullptr);
    CHECK(k.softmax_rows != nullptr);
    CHECK(k.sq_diff_sum != nullptr);
}
