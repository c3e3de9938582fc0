#include "semirend/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semirend/error.hpp"

namespace semirend {

BinaryMask BinaryMask::from_counts(std::size_t height, std::size_t width, std::vector<std::uint32_t> counts) {
    if (height == 0 || width == 0) throw CorruptMask("mask dimensions must be positive");
    if (counts.empty()) throw CorruptMask("mask has no runs");
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (k > 0 && counts[k] == 0) {
            throw CorruptMask("zero-length run at position " + std::to_string(k));
        }
        total += counts[k];
    }
    if (total != static_cast<std::uint64_t>(height) * width) {
        throw CorruptMask("runs sum to " + std::to_string(total) + ", expected " +
                          std::to_string(height * width));
    }
    return BinaryMask(height, width, std::move(counts));
}

BinaryMask rle_encode(const DenseMask& dense) {
    if (dense.height == 0 || dense.width == 0 || dense.pixels.size() != dense.height * dense.width) {
        throw InvalidInput("dense mask has inconsistent dimensions");
    }
    std::vector<std::uint32_t> counts;
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (std::size_t c = 0; c < dense.width; ++c) {
        for (std::size_t r = 0; r < dense.height; ++r) {
            const std::uint8_t v = dense.at(r, c) ? 1 : 0;
            if (v != current) {
                counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    }
    counts.push_back(run);
    return BinaryMask(dense.height, dense.width, std::move(counts));
}

DenseMask rle_decode(const BinaryMask& mask) {
    DenseMask dense(mask.height(), mask.width());
    std::size_t pos = 0;
    std::uint8_t value = 0;
    for (std::uint32_t run : mask.counts()) {
        for (std::uint32_t k = 0; k < run; ++k, ++pos) {
            dense.pixels[(pos % mask.height()) * mask.width() + pos / mask.height()] = value;
        }
        value ^= 1;
    }
    return dense;
}

std::size_t mask_area(const BinaryMask& m) {
    std::size_t area = 0;
    const auto& counts = m.counts();
    for (std::size_t k = 1; k < counts.size(); k += 2) area += counts[k];
    return area;
}

namespace {

struct Interval {
    std::size_t begin;
    std::size_t end;
};

// Foreground runs as half-open intervals of the column-major scan.
std::vector<Interval> foreground_intervals(const BinaryMask& m) {
    std::vector<Interval> out;
    std::size_t pos = 0;
    const auto& counts = m.counts();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (k % 2 == 1) out.push_back({pos, pos + counts[k]});
        pos += counts[k];
    }
    return out;
}

void require_same_size(const BinaryMask& a, const BinaryMask& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw InvalidInput("mask sizes differ: " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                           " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
    }
}

}  // namespace

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_size(a, b);
    const auto ia = foreground_intervals(a);
    const auto ib = foreground_intervals(b);
    std::size_t total = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ia.size() && j < ib.size()) {
        const std::size_t lo = std::max(ia[i].begin, ib[j].begin);
        const std::size_t hi = std::min(ia[i].end, ib[j].end);
        if (hi > lo) total += hi - lo;
        if (ia[i].end < ib[j].end) {
            ++i;
        } else {
            ++j;
        }
    }
    return total;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    const std::size_t inter = intersection_area(a, b);
    const std::size_t uni = mask_area(a) + mask_area(b) - inter;
    if (uni == 0 || inter == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double bbox_iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    if (iw <= 0.0) return 0.0;
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

BBox mask_to_bbox(const BinaryMask& m) {
    const std::size_t h = m.height();
    std::size_t r_min = std::numeric_limits<std::size_t>::max();
    std::size_t r_max = 0;
    std::size_t c_min = std::numeric_limits<std::size_t>::max();
    std::size_t c_max = 0;
    bool any = false;
    for (const Interval& iv : foreground_intervals(m)) {
        any = true;
        const std::size_t first_col = iv.begin / h;
        const std::size_t last_col = (iv.end - 1) / h;
        c_min = std::min(c_min, first_col);
        c_max = std::max(c_max, last_col);
        if (first_col != last_col) {
            // The run wraps through at least one column boundary, so it
            // touches both the top and the bottom row.
            r_min = 0;
            r_max = h - 1;
        } else {
            r_min = std::min(r_min, iv.begin % h);
            r_max = std::max(r_max, (iv.end - 1) % h);
        }
    }
    if (!any) return {};
    return {static_cast<double>(c_min), static_cast<double>(r_min), static_cast<double>(c_max - c_min + 1),
            static_cast<double>(r_max - r_min + 1)};
}

namespace {

// Exact when the inputs are small integers or half-integers.
bool on_segment(double px, double py, double ax, double ay, double bx, double by) {
    const double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    if (cross != 0.0) return false;
    return px >= std::min(ax, bx) && px <= std::max(ax, bx) && py >= std::min(ay, by) && py <= std::max(ay, by);
}

}  // namespace

DenseMask rasterize_polygon(std::span<const double> xs, std::span<const double> ys, std::size_t height,
                            std::size_t width) {
    if (xs.size() != ys.size()) throw InvalidInput("polygon x and y lists differ in length");
    if (xs.size() < 3) throw InvalidInput("polygon needs at least 3 vertices");
    if (height == 0 || width == 0) throw InvalidInput("mask dimensions must be positive");
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) throw InvalidInput("polygon vertex is not finite");
    }

    DenseMask mask(height, width);
    const std::size_t n = xs.size();
    std::vector<double> crossings;

    // Even-odd spans. An edge (prev -> cur) crosses the scanline when exactly
    // one endpoint lies strictly above it.
    for (std::size_t r = 0; r < height; ++r) {
        const double yc = static_cast<double>(r) + 0.5;
        crossings.clear();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            if ((ys[i] > yc) != (ys[j] > yc)) {
                crossings.push_back((xs[j] - xs[i]) * (yc - ys[i]) / (ys[j] - ys[i]) + xs[i]);
            }
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            const double x0 = crossings[k];
            const double x1 = crossings[k + 1];
            if (!(x1 > 0.0) || x0 >= static_cast<double>(width)) continue;
            auto c = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(x0 - 0.5) - 1.0));
            for (; c < static_cast<std::ptrdiff_t>(width); ++c) {
                const double xc = static_cast<double>(c) + 0.5;
                if (xc >= x1) break;
                if (xc >= x0) mask.at(r, static_cast<std::size_t>(c)) = 1;
            }
        }
    }

    // Boundary-inclusive pass: centers lying exactly on an edge.
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double ax = xs[j], ay = ys[j], bx = xs[i], by = ys[i];
        const double y_lo = std::max(0.0, std::ceil(std::min(ay, by) - 0.5));
        const double y_hi = std::min(static_cast<double>(height) - 1.0, std::floor(std::max(ay, by) - 0.5));
        for (double rr = y_lo; rr <= y_hi; rr += 1.0) {
            const double yc = rr + 0.5;
            double x_lo;
            double x_hi;
            if (ay == by) {
                x_lo = std::min(ax, bx);
                x_hi = std::max(ax, bx);
            } else {
                const double x = ax + (bx - ax) * (yc - ay) / (by - ay);
                x_lo = x;
                x_hi = x;
            }
            const double c_lo = std::max(0.0, std::floor(x_lo - 0.5) - 1.0);
            const double c_hi = std::min(static_cast<double>(width) - 1.0, std::ceil(x_hi - 0.5) + 1.0);
            for (double cc = c_lo; cc <= c_hi; cc += 1.0) {
                if (on_segment(cc + 0.5, yc, ax, ay, bx, by)) {
                    mask.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) = 1;
                }
            }
        }
    }
    return mask;
}

BinaryMask polygon_to_mask(std::span<const double> xs, std::span<const double> ys, std::size_t height,
                           std::size_t width) {
    return rle_encode(rasterize_polygon(xs, ys, height, width));
}

MaskInstance make_instance(std::string image_id, DefectClass cls, double score, BinaryMask mask) {
    MaskInstance inst;
    inst.image_id = std::move(image_id);
    inst.class_id = cls;
    inst.score = score;
    inst.bbox = mask_to_bbox(mask);
    inst.mask = std::move(mask);
    return inst;
}

}  // namespace semirend
