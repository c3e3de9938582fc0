#include "semirend/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semirend/error.hpp"

namespace semirend {

namespace {

// Continuous coordinates within this distance of a cell center (in cell
// units) are treated as exactly on it, so round trips through normalized
// coordinates are exact.
constexpr double kCenterSnap = 1e-9;

struct AxisTap {
    std::size_t lo = 0;
    std::size_t hi = 0;
    double t = 0.0;
};

AxisTap axis_tap(double normalized, std::size_t extent) {
    double f = normalized * static_cast<double>(extent) - 0.5;
    const double r = std::round(f);
    if (std::abs(f - r) <= kCenterSnap) f = r;
    f = std::clamp(f, 0.0, static_cast<double>(extent - 1));
    AxisTap tap;
    tap.lo = static_cast<std::size_t>(std::floor(f));
    tap.t = f - static_cast<double>(tap.lo);
    tap.hi = std::min(tap.lo + 1, extent - 1);
    return tap;
}

// Bounded lerp: equal endpoints give that endpoint exactly and the result
// never leaves [min(a, b), max(a, b)].
double lerp(double a, double b, double t) {
    if (t == 0.0 || a == b) return a;
    const double v = a + t * (b - a);
    return std::clamp(v, std::min(a, b), std::max(a, b));
}

void require_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidInput("grid values must be finite");
    }
}

}  // namespace

Grid2D::Grid2D(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    if (height == 0 || width == 0 || channels == 0) {
        throw InvalidInput("grid dimensions must be positive");
    }
    if (!std::isfinite(fill)) throw InvalidInput("grid fill value must be finite");
    values_.assign(height * width * channels, fill);
}

Grid2D::Grid2D(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
    if (height == 0 || width == 0 || channels == 0) {
        throw InvalidInput("grid dimensions must be positive");
    }
    if (values_.size() != height * width * channels) {
        throw InvalidInput("grid value count " + std::to_string(values_.size()) + " does not match " +
                           std::to_string(height) + "x" + std::to_string(width) + "x" +
                           std::to_string(channels));
    }
    require_finite(values_);
}

double Grid2D::at(std::size_t row, std::size_t col, std::size_t channel) const {
    if (row >= height_ || col >= width_ || channel >= channels_) {
        throw InvalidInput("grid index out of range");
    }
    return values_[index(row, col) + channel];
}

std::span<const double> Grid2D::cell(std::size_t row, std::size_t col) const {
    if (row >= height_ || col >= width_) throw InvalidInput("grid index out of range");
    return std::span<const double>(values_).subspan(index(row, col), channels_);
}

double Grid2D::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

double Grid2D::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

Point cell_center(std::size_t row, std::size_t col, std::size_t height, std::size_t width) {
    return {(static_cast<double>(col) + 0.5) / static_cast<double>(width),
            (static_cast<double>(row) + 0.5) / static_cast<double>(height)};
}

void validate_points(const PointSet& points) {
    for (const Point& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw InvalidInput("point coordinates must be finite");
        }
        if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
            throw InvalidInput("point coordinates must lie in [0, 1]");
        }
    }
}

void bilinear_sample_into(const Grid2D& grid, Point p, std::span<double> out) {
    const AxisTap tx = axis_tap(p.x, grid.width());
    const AxisTap ty = axis_tap(p.y, grid.height());
    const auto c00 = grid.cell(ty.lo, tx.lo);
    const auto c01 = grid.cell(ty.lo, tx.hi);
    const auto c10 = grid.cell(ty.hi, tx.lo);
    const auto c11 = grid.cell(ty.hi, tx.hi);
    for (std::size_t k = 0; k < grid.channels(); ++k) {
        const double top = lerp(c00[k], c01[k], tx.t);
        const double bottom = lerp(c10[k], c11[k], tx.t);
        out[k] = lerp(top, bottom, ty.t);
    }
}

ChannelVectors bilinear_sample(const Grid2D& grid, const PointSet& points) {
    validate_points(points);
    ChannelVectors result(points.size(), std::vector<double>(grid.channels()));
    for (std::size_t n = 0; n < points.size(); ++n) {
        bilinear_sample_into(grid, points[n], result[n]);
    }
    return result;
}

Grid2D upsample2x(const Grid2D& grid) {
    const std::size_t h = grid.height() * 2;
    const std::size_t w = grid.width() * 2;
    const std::size_t c = grid.channels();
    std::vector<double> values(h * w * c);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            bilinear_sample_into(grid, cell_center(i, j, h, w),
                                 std::span<double>(values).subspan((i * w + j) * c, c));
        }
    }
    return Grid2D(h, w, c, std::move(values));
}

CellIndex nearest_cell(Point p, std::size_t height, std::size_t width) {
    // Round half down along each axis: a point equidistant from two centers
    // lands on the smaller index.
    const auto axis = [](double normalized, std::size_t extent) {
        const double f = normalized * static_cast<double>(extent) - 0.5;
        const double idx = std::ceil(f - 0.5);
        return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(extent - 1)));
    };
    return {axis(p.y, height), axis(p.x, width)};
}

Grid2D scatter_points(Grid2D grid, const PointSet& points, const ChannelVectors& values) {
    if (points.size() != values.size()) {
        throw InvalidInput("scatter_points: " + std::to_string(points.size()) + " points but " +
                           std::to_string(values.size()) + " values");
    }
    validate_points(points);
    for (std::size_t n = 0; n < points.size(); ++n) {
        if (values[n].size() != grid.channels()) {
            throw InvalidInput("scatter_points: value vector has wrong channel count");
        }
        require_finite(values[n]);
    }
    for (std::size_t n = 0; n < points.size(); ++n) {
        const CellIndex cell = nearest_cell(points[n], grid.height(), grid.width());
        std::copy(values[n].begin(), values[n].end(),
                  grid.values_.begin() + static_cast<std::ptrdiff_t>(grid.index(cell.row, cell.col)));
    }
    return grid;
}

}  // namespace semirend
