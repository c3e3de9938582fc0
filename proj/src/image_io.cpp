#include "semirend/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "semirend/error.hpp"

namespace semirend {

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex_magic(const std::vector<unsigned char>& bytes) {
    std::string out;
    char buf[4];
    for (std::size_t k = 0; k < std::min<std::size_t>(bytes.size(), 8); ++k) {
        std::snprintf(buf, sizeof buf, "%02x", bytes[k]);
        if (!out.empty()) out += ' ';
        out += buf;
    }
    return out.empty() ? "<empty>" : out;
}

void check_shape(const GrayImage& image) {
    if (image.height == 0 || image.width == 0) throw InvalidInput("image dimensions must be positive");
    if (image.bit_depth != 8 && image.bit_depth != 16) throw InvalidInput("bit depth must be 8 or 16");
    if (image.pixels.size() != image.height * image.width) throw InvalidInput("pixel count mismatch");
}

// ---- PGM

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<unsigned char>& data, std::size_t& pos, const std::string& path) {
    while (pos < data.size()) {
        if (data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
        } else if (std::isspace(data[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < data.size() && !std::isspace(data[pos]) && data[pos] != '#') tok += static_cast<char>(data[pos++]);
    if (tok.empty()) throw ParseError(path, "truncated PGM header");
    return tok;
}

std::size_t pgm_number(const std::vector<unsigned char>& data, std::size_t& pos, const std::string& path) {
    const std::string tok = pgm_token(data, pos, path);
    if (!std::all_of(tok.begin(), tok.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        throw ParseError(path, "bad PGM header field '" + tok + "'");
    }
    return static_cast<std::size_t>(std::stoull(tok));
}

GrayImage read_pgm(const std::vector<unsigned char>& data, const std::string& path) {
    std::size_t pos = 2;
    const bool binary = data[1] == '5';
    GrayImage img;
    img.width = pgm_number(data, pos, path);
    img.height = pgm_number(data, pos, path);
    const std::size_t maxval = pgm_number(data, pos, path);
    if (img.width == 0 || img.height == 0) throw ParseError(path, "PGM dimensions must be positive");
    if (maxval == 0 || maxval > 65535) throw ParseError(path, "PGM maxval out of range");
    img.bit_depth = maxval > 255 ? 16 : 8;
    const std::size_t n = img.width * img.height;
    img.pixels.resize(n);
    if (binary) {
        ++pos;  // single whitespace after maxval
        const std::size_t bpp = img.bit_depth == 16 ? 2 : 1;
        if (data.size() < pos + n * bpp) throw ParseError(path, "truncated PGM raster");
        for (std::size_t k = 0; k < n; ++k) {
            img.pixels[k] = bpp == 2 ? static_cast<std::uint16_t>((data[pos + 2 * k] << 8) | data[pos + 2 * k + 1])
                                     : data[pos + k];
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t v = pgm_number(data, pos, path);
            if (v > maxval) throw ParseError(path, "PGM sample exceeds maxval");
            img.pixels[k] = static_cast<std::uint16_t>(v);
        }
    }
    return img;
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << '\n' << img.max_value() << '\n';
    std::vector<unsigned char> raster;
    raster.reserve(img.pixels.size() * (img.bit_depth == 16 ? 2 : 1));
    for (std::uint16_t v : img.pixels) {
        if (img.bit_depth == 16) raster.push_back(static_cast<unsigned char>(v >> 8));
        raster.push_back(static_cast<unsigned char>(v & 0xFF));
    }
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw Error("failed writing " + path);
}

// ---- PNG (libpng)

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

thread_local std::string png_last_error;

void png_fail(png_structp png, png_const_charp msg) {
    png_last_error = msg ? msg : "unknown error";
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

GrayImage read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error("cannot open " + path);
    GrayImage img;
    std::vector<unsigned char> row;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng initialisation failed");
    }
    // libpng reports errors by longjmp back here; everything with a
    // destructor lives above this point.
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path, "libpng: " + png_last_error);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnsupportedFormat(path + ": only grayscale PNG is supported");
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    img.width = width;
    img.height = height;
    img.bit_depth = depth == 16 ? 16 : 8;
    row.resize(png_get_rowbytes(png, info));
    img.pixels.resize(img.width * img.height);
    for (std::size_t r = 0; r < img.height; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (std::size_t c = 0; c < img.width; ++c) {
            img.pixels[r * img.width + c] = img.bit_depth == 16
                                                ? static_cast<std::uint16_t>((row[2 * c] << 8) | row[2 * c + 1])
                                                : row[c];
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const GrayImage& img, const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error("cannot open " + path + " for writing");
    const std::size_t bpp = img.bit_depth == 16 ? 2 : 1;
    std::vector<unsigned char> row(img.width * bpp);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(path + ": libpng: " + png_last_error);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 img.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            const std::uint16_t v = img.pixels[r * img.width + c];
            if (bpp == 2) {
                row[2 * c] = static_cast<unsigned char>(v >> 8);
                row[2 * c + 1] = static_cast<unsigned char>(v & 0xFF);
            } else {
                row[c] = static_cast<unsigned char>(v);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                      [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

GrayImage read_image(const std::string& path) {
    const auto data = slurp(path);
    if (data.size() >= 2 && data[0] == 'P' && (data[1] == '5' || data[1] == '2')) return read_pgm(data, path);
    static constexpr unsigned char kPng[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (data.size() >= 8 && std::equal(kPng, kPng + 8, data.begin())) return read_png(path);
    throw UnsupportedFormat(path + ": unsupported image format (magic bytes: " + hex_magic(data) + ")");
}

void write_image(const GrayImage& image, const std::string& path) {
    check_shape(image);
    if (ends_with(path, ".pgm")) {
        write_pgm(image, path);
    } else if (ends_with(path, ".png")) {
        write_png(image, path);
    } else {
        throw UnsupportedFormat(path + ": unknown image extension (use .pgm or .png)");
    }
}

Grid2D image_to_grid(const GrayImage& image) {
    check_shape(image);
    std::vector<double> values(image.pixels.begin(), image.pixels.end());
    return Grid2D(image.height, image.width, 1, std::move(values));
}

GrayImage grid_to_image(const Grid2D& grid, int bit_depth) {
    GrayImage img;
    img.height = grid.height();
    img.width = grid.width();
    img.bit_depth = bit_depth;
    check_shape(GrayImage{img.height, img.width, bit_depth, std::vector<std::uint16_t>(img.height * img.width)});
    const double hi = img.max_value();
    img.pixels.resize(img.height * img.width);
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            img.pixels[r * img.width + c] = static_cast<std::uint16_t>(std::clamp(std::round(grid.at(r, c)), 0.0, hi));
        }
    }
    return img;
}

}  // namespace semirend
