#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semirend/grid.hpp"

namespace semirend {

// 8- or 16-bit grayscale raster, row-major.
struct GrayImage {
    std::size_t height = 0;
    std::size_t width = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> pixels;

    std::uint16_t max_value() const { return bit_depth == 16 ? 65535 : 255; }
    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

enum class ImageFormat { pgm, png };

// Format detected from magic bytes: binary/ASCII PGM (P5/P2) or PNG.
// Throws UnsupportedFormat naming the magic bytes found otherwise.
GrayImage read_image(const std::string& path);

// Format chosen from the extension (.pgm or .png).
void write_image(const GrayImage& image, const std::string& path);

// Raw pixel values as a one-channel grid (no rescaling).
Grid2D image_to_grid(const GrayImage& image);
// Rounds and clamps grid channel 0 to the image's value range.
GrayImage grid_to_image(const Grid2D& grid, int bit_depth = 8);

}  // namespace semirend
