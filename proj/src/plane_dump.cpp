#include "plane_dump.hpp"

#include "strainveil/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace strainveil::detail {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_planes(const std::filesystem::path& path, const char magic[4], const std::vector<const ImageD*>& planes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(magic, 4);
    put_u32(out, static_cast<std::uint32_t>(planes.front()->cols()));
    put_u32(out, static_cast<std::uint32_t>(planes.front()->rows()));
    for (const ImageD* plane : planes) {
        for (Eigen::Index y = 0; y < plane->rows(); ++y)
            for (Eigen::Index x = 0; x < plane->cols(); ++x)
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>((*plane)(y, x))));
    }
    if (!out) throw InputError("write failed: " + path.string());
}

std::vector<ImageD> read_planes(const std::filesystem::path& path, const char magic[4], int count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    char got[4] = {};
    in.read(got, 4);
    if (!in || std::memcmp(got, magic, 4) != 0) {
        throw InputError(path.string() + ": bad magic, expected " + std::string(magic, 4));
    }
    const std::uint32_t w = get_u32(in);
    const std::uint32_t h = get_u32(in);
    if (!in || w == 0 || h == 0 || w > 65536 || h > 65536) throw InputError(path.string() + ": bad dimensions");
    std::vector<ImageD> planes;
    for (int p = 0; p < count; ++p) {
        ImageD plane(h, w);
        for (std::uint32_t y = 0; y < h; ++y)
            for (std::uint32_t x = 0; x < w; ++x) plane(y, x) = std::bit_cast<float>(get_u32(in));
        planes.push_back(std::move(plane));
    }
    if (!in) throw InputError(path.string() + ": truncated plane data");
    return planes;
}

}  // namespace strainveil::detail
