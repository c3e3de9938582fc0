#include "semirend/grid_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "semirend/error.hpp"

namespace semirend {

namespace {

constexpr std::array<char, 4> kGridMagic{'S', 'R', 'G', 'D'};
constexpr std::uint32_t kGridVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& where) {
    std::array<unsigned char, 8> b;
    in.read(reinterpret_cast<char*>(b.data()), 8);
    if (!in) throw ParseError(where, "truncated grid file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_grid(const Grid2D& grid, std::ostream& out) {
    out.write(kGridMagic.data(), 4);
    const std::uint32_t version = kGridVersion;
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((version >> (8 * i)) & 0xFF));
    put_u64(out, grid.height());
    put_u64(out, grid.width());
    put_u64(out, grid.channels());
    for (double v : grid.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw Error("failed to write grid");
}

Grid2D load_grid(std::istream& in, const std::string& where) {
    std::array<char, 4> magic{};
    in.read(magic.data(), 4);
    if (!in || magic != kGridMagic) throw ParseError(where, "bad magic, expected SRGD");
    std::array<unsigned char, 4> vb{};
    in.read(reinterpret_cast<char*>(vb.data()), 4);
    const std::uint32_t version = vb[0] | (vb[1] << 8) | (vb[2] << 16) | (static_cast<std::uint32_t>(vb[3]) << 24);
    if (!in || version != kGridVersion) throw ParseError(where, "unsupported grid version");
    const std::uint64_t h = get_u64(in, where);
    const std::uint64_t w = get_u64(in, where);
    const std::uint64_t c = get_u64(in, where);
    if (h == 0 || w == 0 || c == 0 || h > (1u << 16) || w > (1u << 16) || c > 4096) {
        throw ParseError(where, "implausible grid dimensions");
    }
    std::vector<double> values(h * w * c);
    for (double& v : values) v = std::bit_cast<double>(get_u64(in, where));
    try {
        return Grid2D(h, w, c, std::move(values));
    } catch (const InvalidInput& e) {
        throw ParseError(where, e.what());
    }
}

void save_grid(const Grid2D& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    save_grid(grid, out);
}

Grid2D load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return load_grid(in, path);
}

}  // namespace semirend
