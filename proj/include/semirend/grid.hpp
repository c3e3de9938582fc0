#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace semirend {

// Continuous normalized image coordinate: x runs along columns, y along rows,
// both in [0, 1]. Cell (row i, col j) of an H x W grid has its center at
// ((j + 0.5) / W, (i + 0.5) / H).
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

using PointSet = std::vector<Point>;

// One channel vector per sampled point.
using ChannelVectors = std::vector<std::vector<double>>;

// Dense H x W x C grid of finite reals, row-major with channels innermost.
// Holds coarse logits, uncertainty maps and fine feature maps alike.
class Grid2D {
public:
    Grid2D(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
    Grid2D(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> values);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t cell_count() const noexcept { return height_ * width_; }

    double at(std::size_t row, std::size_t col, std::size_t channel = 0) const;
    std::span<const double> cell(std::size_t row, std::size_t col) const;
    std::span<const double> values() const noexcept { return values_; }

    // Min and max over every stored value.
    double min_value() const;
    double max_value() const;

    friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
    friend Grid2D scatter_points(Grid2D, const PointSet&, const ChannelVectors&);

    std::size_t index(std::size_t row, std::size_t col) const noexcept {
        return (row * width_ + col) * channels_;
    }

    std::size_t height_;
    std::size_t width_;
    std::size_t channels_;
    std::vector<double> values_;
};

// Normalized coordinate of the center of cell (row, col).
Point cell_center(std::size_t row, std::size_t col, std::size_t height, std::size_t width);

// Throws InvalidInput unless every coordinate is finite and inside [0, 1].
void validate_points(const PointSet& points);

// Bilinear interpolation (cell centers at (j + 0.5) / W) with border clamp.
// Sampling exactly at a cell center returns that cell's stored value.
ChannelVectors bilinear_sample(const Grid2D& grid, const PointSet& points);

// Writes the interpolated channel vector at `p` into `out` (size = channels).
void bilinear_sample_into(const Grid2D& grid, Point p, std::span<double> out);

// 2H x 2W grid whose cells are the bilinear samples of `grid` at the output
// cell centers.
Grid2D upsample2x(const Grid2D& grid);

// Index (row, col) of the cell whose center is nearest to `p`; ties go to the
// smaller row, then the smaller column.
struct CellIndex {
    std::size_t row = 0;
    std::size_t col = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};
CellIndex nearest_cell(Point p, std::size_t height, std::size_t width);

// Overwrites, for each point, its nearest cell with the matching value.
Grid2D scatter_points(Grid2D grid, const PointSet& points, const ChannelVectors& values);

}  // namespace semirend
