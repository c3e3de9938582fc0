#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "semirend/mask.hpp"

namespace oracle {

using semirend::DenseMask;

// Exact point-in-polygon on doubled integer coordinates: even-odd ray cast to
// +x plus an explicit on-edge test.
inline bool point_in_polygon(const std::vector<long long>& xs2, const std::vector<long long>& ys2, long long px, long long py) {
    const std::size_t n = xs2.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const long long ax = xs2[j], ay = ys2[j], bx = xs2[i], by = ys2[i];
        const long long cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        if (cross == 0 && std::min(ax, bx) <= px && px <= std::max(ax, bx) && std::min(ay, by) <= py &&
            py <= std::max(ay, by)) {
            return true;
        }
        if ((ay > py) != (by > py)) {
            // Crossing x > px  <=>  (ax - px)(by - ay) + (bx - ax)(py - ay) has the sign of (by - ay).
            const long long num = (ax - px) * (by - ay) + (bx - ax) * (py - ay);
            if ((by - ay > 0 && num > 0) || (by - ay < 0 && num < 0)) inside = !inside;
        }
    }
    return inside;
}

inline DenseMask raster(const std::vector<double>& xs, const std::vector<double>& ys, std::size_t h, std::size_t w) {
    std::vector<long long> xs2, ys2;
    for (double x : xs) xs2.push_back(std::llround(2 * x));
    for (double y : ys) ys2.push_back(std::llround(2 * y));
    DenseMask m(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            m.at(r, c) = point_in_polygon(xs2, ys2, 2 * static_cast<long long>(c) + 1, 2 * static_cast<long long>(r) + 1);
        }
    }
    return m;
}

}  // namespace oracle
