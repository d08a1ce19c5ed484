#include "atnj/tenio.hpp"

#include <bit>
#include <fstream>
#include <limits>

namespace atnj {

namespace wire {

void put_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_f32(std::ostream& os, float v) {
    put_u32(os, std::bit_cast<std::uint32_t>(v));
}

std::uint8_t get_u8(std::istream& is) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw ParseError("unexpected end of file");
    return static_cast<std::uint8_t>(c);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw ParseError("unexpected end of file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is) {
    return std::bit_cast<float>(get_u32(is));
}

void expect_magic(std::istream& is, const char magic[4], const char* what) {
    char got[4];
    is.read(got, 4);
    if (is.gcount() != 4 || got[0] != magic[0] || got[1] != magic[1] ||
        got[2] != magic[2] || got[3] != magic[3]) {
        throw ParseError(std::string(what) + ": bad magic");
    }
}

}  // namespace wire

void write_tensor(std::ostream& os, const Tensor& t) {
    if (t.rank() > 255) throw DimensionMismatch("tensor rank exceeds format limit");
    os.write("ATNJ", 4);
    wire::put_u8(os, 1);
    wire::put_u8(os, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) {
            throw DimensionMismatch("dimension exceeds u32");
        }
        wire::put_u32(os, static_cast<std::uint32_t>(d));
    }
    for (float v : t.values()) wire::put_f32(os, v);
}

Tensor read_tensor(std::istream& is) {
    wire::expect_magic(is, "ATNJ", ".ten");
    const std::uint8_t version = wire::get_u8(is);
    if (version != 1) throw ParseError(".ten: unsupported version");
    const std::uint8_t ndim = wire::get_u8(is);
    if (ndim == 0) throw ParseError(".ten: zero rank");
    std::vector<std::size_t> shape(ndim);
    std::size_t n = 1;
    for (auto& d : shape) {
        d = wire::get_u32(is);
        if (d == 0) throw ParseError(".ten: zero dimension");
        n *= d;
    }
    std::vector<float> data(n);
    for (auto& v : data) v = wire::get_f32(is);
    return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    write_tensor(os, t);
    if (!os) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return read_tensor(is);
}

}  // namespace atnj
