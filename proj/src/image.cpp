#include "atnj/image.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "atnj/rng.hpp"

namespace atnj {

ReferenceImage make_reference_image(Tensor pixels) {
    if (pixels.rank() != 3 || pixels.dim(0) != ReferenceImage::kChannels ||
        pixels.dim(1) != ReferenceImage::kSide || pixels.dim(2) != ReferenceImage::kSide) {
        throw DimensionMismatch("reference image must be 3x32x32");
    }
    pixels.require_finite("reference image");
    for (float& v : pixels.values()) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return ReferenceImage{std::move(pixels)};
}

void save_ppm(const std::string& path, const ReferenceImage& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    const std::size_t side = ReferenceImage::kSide;
    os << "P6\n" << side << " " << side << "\n255\n";
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const float v = img.pixels.at3(c, y, x);
                os.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0f))));
            }
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

namespace {

// Reads one whitespace/comment-separated PPM header token.
std::string next_header_token(std::istream& is) {
    std::string tok;
    int c;
    while ((c = is.get()) != std::char_traits<char>::eof()) {
        if (c == '#') {
            while ((c = is.get()) != std::char_traits<char>::eof() && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw ParseError("ppm: truncated header");
    return tok;
}

}  // namespace

ReferenceImage load_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open image: " + path);
    if (next_header_token(is) != "P6") throw ParseError("ppm: expected P6");
    const std::string ws = next_header_token(is);
    const std::string hs = next_header_token(is);
    const std::string ms = next_header_token(is);
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(ws);
        h = std::stoul(hs);
        maxval = std::stoul(ms);
    } catch (const std::exception&) {
        throw ParseError("ppm: bad header fields");
    }
    if (w != ReferenceImage::kSide || h != ReferenceImage::kSide) {
        throw ParseError("ppm: expected 32x32 image");
    }
    if (maxval != 255) throw ParseError("ppm: expected maxval 255");

    std::vector<char> raw(w * h * 3);
    is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw ParseError("ppm: truncated pixel data");
    }
    Tensor px({3, h, w});
    std::size_t idx = 0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                px.at3(c, y, x) =
                    static_cast<float>(static_cast<unsigned char>(raw[idx++])) / 255.0f;
            }
        }
    }
    return ReferenceImage{std::move(px)};
}

Tensor image_to_latent(const ReferenceImage& img) {
    constexpr std::size_t kPool = 4;
    constexpr std::size_t kOut = ReferenceImage::kSide / kPool;  // 8
    Tensor latent({4, kOut, kOut});
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < kOut; ++y) {
            for (std::size_t x = 0; x < kOut; ++x) {
                double sum = 0.0;
                for (std::size_t dy = 0; dy < kPool; ++dy) {
                    for (std::size_t dx = 0; dx < kPool; ++dx) {
                        sum += img.pixels.at3(c, y * kPool + dy, x * kPool + dx);
                    }
                }
                latent.at3(c, y, x) = static_cast<float>(sum / (kPool * kPool));
            }
        }
    }
    // Rec.601 luminance of the pooled RGB as the fourth channel.
    for (std::size_t y = 0; y < kOut; ++y) {
        for (std::size_t x = 0; x < kOut; ++x) {
            latent.at3(3, y, x) = static_cast<float>(
                0.299 * latent.at3(0, y, x) + 0.587 * latent.at3(1, y, x) +
                0.114 * latent.at3(2, y, x));
        }
    }
    for (float& v : latent.values()) v = (v - 0.5f) * 2.0f;
    return latent;
}

namespace {

double smoothstep01(double t) {
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return t * t * (3.0 - 2.0 * t);
}

// One blob image from its own seeded stream: dark background, one bright
// soft-edged disc. sqrt and polynomials only, so bytes match everywhere.
ReferenceImage make_blob(std::uint64_t seed) {
    Rng rng(seed);
    auto unit = [&]() { return rng.next_uniform(); };

    const double bg[3] = {0.05 + 0.10 * unit(), 0.05 + 0.10 * unit(), 0.05 + 0.10 * unit()};
    const double fg[3] = {0.55 + 0.40 * unit(), 0.55 + 0.40 * unit(), 0.55 + 0.40 * unit()};
    const double cx = 8.0 + 16.0 * unit();
    const double cy = 8.0 + 16.0 * unit();
    const double radius = 5.0 + 4.0 * unit();

    Tensor px({3, ReferenceImage::kSide, ReferenceImage::kSide});
    for (std::size_t y = 0; y < ReferenceImage::kSide; ++y) {
        for (std::size_t x = 0; x < ReferenceImage::kSide; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - cx;
            const double dy = static_cast<double>(y) + 0.5 - cy;
            const double dist = std::sqrt(dx * dx + dy * dy);
            const double a = smoothstep01((radius - dist) / 1.5 + 0.5);
            for (std::size_t c = 0; c < 3; ++c) {
                px.at3(c, y, x) = static_cast<float>(bg[c] + (fg[c] - bg[c]) * a);
            }
        }
    }
    return make_reference_image(std::move(px));
}

}  // namespace

std::vector<ReferenceImage> make_toy_dataset() {
    std::vector<ReferenceImage> out;
    out.reserve(8);
    for (std::uint64_t i = 0; i < 8; ++i) {
        out.push_back(make_blob(0xb10b0000ull + i));
    }
    return out;
}

std::vector<ReferenceImage> load_ppm_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> paths;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            paths.push_back(entry.path().string());
        }
    }
    if (ec) throw IoError("cannot read directory: " + dir);
    std::sort(paths.begin(), paths.end());
    std::vector<ReferenceImage> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_ppm(p));
    return out;
}

}  // namespace atnj
