#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semirend/defect_class.hpp"

namespace semirend {

// Dense 0/1 mask, row-major.
struct DenseMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;

    DenseMask() = default;
    DenseMask(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w, 0) {}

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }

    friend bool operator==(const DenseMask&, const DenseMask&) = default;
};

// Run-length encoded binary mask in COCO layout: column-major scan, runs
// alternate background/foreground starting with a (possibly empty)
// background run.
class BinaryMask {
public:
    // Empty 1x1 background mask.
    BinaryMask() : height_(1), width_(1), counts_{1} {}

    // Validates the run list; throws CorruptMask if the runs do not sum to
    // height * width or contain an interior zero-length run.
    static BinaryMask from_counts(std::size_t height, std::size_t width, std::vector<std::uint32_t> counts);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    const std::vector<std::uint32_t>& counts() const noexcept { return counts_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    BinaryMask(std::size_t h, std::size_t w, std::vector<std::uint32_t> counts)
        : height_(h), width_(w), counts_(std::move(counts)) {}
    friend BinaryMask rle_encode(const DenseMask& dense);

    std::size_t height_;
    std::size_t width_;
    std::vector<std::uint32_t> counts_;
};

BinaryMask rle_encode(const DenseMask& dense);
DenseMask rle_decode(const BinaryMask& mask);

std::size_t mask_area(const BinaryMask& m);
std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b);

// |a & b| / |a | b|, 0 when the union is empty. Throws InvalidInput on a size mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Pixel-space box: (x, y) top-left corner, (w, h) extents.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

double bbox_iou(const BBox& a, const BBox& b);

// Tight box around the foreground; all zeros for an empty mask.
BBox mask_to_bbox(const BinaryMask& m);

// Vertices in pixel coordinates: pixel (r, c) covers [c, c+1) x [r, r+1) and
// its center is (c + 0.5, r + 0.5).
struct Polygon {
    std::vector<double> xs;
    std::vector<double> ys;

    friend bool operator==(const Polygon&, const Polygon&) = default;
};

// Even-odd fill sampled at pixel centers. Centers lying exactly on an edge
// count as inside. Throws InvalidInput for fewer than 3 vertices.
DenseMask rasterize_polygon(std::span<const double> xs, std::span<const double> ys, std::size_t height,
                            std::size_t width);
BinaryMask polygon_to_mask(std::span<const double> xs, std::span<const double> ys, std::size_t height,
                           std::size_t width);
inline BinaryMask polygon_to_mask(const Polygon& poly, std::size_t height, std::size_t width) {
    return polygon_to_mask(poly.xs, poly.ys, height, width);
}

// One defect prediction or annotation.
struct MaskInstance {
    std::string image_id;
    DefectClass class_id = DefectClass::thin_bridge;
    double score = 1.0;
    BBox bbox;
    BinaryMask mask;

    friend bool operator==(const MaskInstance&, const MaskInstance&) = default;
};

// Builds an instance whose bbox is the tight box of `mask`.
MaskInstance make_instance(std::string image_id, DefectClass cls, double score, BinaryMask mask);

}  // namespace semirend
