#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atnj/tensor.hpp"

namespace atnj {

// 3x32x32 f32 image in [0,1].
struct ReferenceImage {
    Tensor pixels;

    static constexpr std::size_t kChannels = 3;
    static constexpr std::size_t kSide = 32;
};

// Clamps into [0,1] and validates dimensions.
ReferenceImage make_reference_image(Tensor pixels);

// Binary PPM (P6, maxval 255). Values quantized by round(v * 255).
void save_ppm(const std::string& path, const ReferenceImage& img);
ReferenceImage load_ppm(const std::string& path);

// Fixed image-to-latent reduction: per-channel 4x4 average pool down to
// 8x8, a fourth luminance channel from the pooled RGB, then (v - 0.5) * 2.
Tensor image_to_latent(const ReferenceImage& img);

// Deterministic toy dataset: 8 soft blobs of distinct color and position
// on dark backgrounds. All math is polynomial so the files are identical
// on any platform.
std::vector<ReferenceImage> make_toy_dataset();

// Loads every .ppm in the directory, sorted by filename.
std::vector<ReferenceImage> load_ppm_dir(const std::string& dir);

}  // namespace atnj
