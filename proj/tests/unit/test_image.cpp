#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "atnj/image.hpp"
#include "test_helpers.hpp"

using namespace atnj;

TEST_CASE("reference image validation and clamping") {
    Tensor px({3, 32, 32});
    px[0] = -0.5f;
    px[1] = 1.5f;
    ReferenceImage img = make_reference_image(px);
    CHECK(img.pixels[0] == 0.0f);
    CHECK(img.pixels[1] == 1.0f);
    CHECK_THROWS_AS(make_reference_image(Tensor({3, 16, 16})), DimensionMismatch);
}

TEST_CASE("ppm round-trip is byte identical") {
    const auto images = make_toy_dataset();
    REQUIRE(images.size() == 8);
    const std::string p1 = "test_img1.ppm", p2 = "test_img2.ppm";
    save_ppm(p1, images[3]);
    ReferenceImage back = load_ppm(p1);
    save_ppm(p2, back);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK_FALSE(s1.str().empty());
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("truncated and malformed ppm files are rejected") {
    const std::string path = "test_bad.ppm";
    {
        std::ofstream os(path, std::ios::binary);
        os << "P6\n32 32\n255\n";
        os.write("abc", 3);  // far too short
    }
    CHECK_THROWS_AS(load_ppm(path), ParseError);
    {
        std::ofstream os(path, std::ios::binary);
        os << "P5\n32 32\n255\n";
    }
    CHECK_THROWS_AS(load_ppm(path), ParseError);
    {
        std::ofstream os(path, std::ios::binary);
        os << "P6\n16 16\n255\n" << std::string(16 * 16 * 3, 'x');
    }
    CHECK_THROWS_AS(load_ppm(path), ParseError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_ppm("does_not_exist.ppm"), ParseError);
}

TEST_CASE("image_to_latent pools, appends luminance, and recenters") {
    // Constant image: every pooled value equals the constant.
    Tensor px({3, 32, 32});
    for (std::size_t y = 0; y < 32; ++y) {
        for (std::size_t x = 0; x < 32; ++x) {
            px.at3(0, y, x) = 1.0f;
            px.at3(1, y, x) = 0.5f;
            px.at3(2, y, x) = 0.0f;
        }
    }
    Tensor lat = image_to_latent(make_reference_image(px));
    REQUIRE(lat.shape() == std::vector<std::size_t>{4, 8, 8});
    CHECK(lat.at3(0, 0, 0) == doctest::Approx(1.0));   // (1.0-0.5)*2
    CHECK(lat.at3(1, 0, 0) == doctest::Approx(0.0));
    CHECK(lat.at3(2, 0, 0) == doctest::Approx(-1.0));
    const double lum = 0.299 * 1.0 + 0.587 * 0.5 + 0.114 * 0.0;
    CHECK(lat.at3(3, 0, 0) == doctest::Approx((lum - 0.5) * 2.0).epsilon(1e-6));

    // One bright pooled block moves exactly its own latent cell.
    Tensor px2({3, 32, 32});
    for (std::size_t dy = 0; dy < 4; ++dy) {
        for (std::size_t dx = 0; dx < 4; ++dx) px2.at3(0, 8 + dy, 12 + dx) = 1.0f;
    }
    Tensor lat2 = image_to_latent(make_reference_image(px2));
    CHECK(lat2.at3(0, 2, 3) == doctest::Approx(1.0 * 2.0 - 1.0));
    CHECK(lat2.at3(0, 0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("toy dataset is deterministic and distinct") {
    const auto a = make_toy_dataset();
    const auto b = make_toy_dataset();
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(test::bits_equal(a[i].pixels, b[i].pixels));
    }
    for (std::size_t i = 1; i < 8; ++i) {
        CHECK_FALSE(test::bits_equal(a[0].pixels, a[i].pixels));
    }
}
