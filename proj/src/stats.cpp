#include "semirend/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "semirend/error.hpp"

namespace semirend {

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

AreaStats describe(DefectClass c, std::vector<double> values) {
    if (values.empty()) throw InvalidInput("statistics of an empty sample");
    std::sort(values.begin(), values.end());
    AreaStats s;
    s.class_id = c;
    s.count = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
    } else {
        s.std_undefined = true;
    }
    s.min = values.front();
    s.max = values.back();
    s.q25 = quantile_sorted(values, 0.25);
    s.q50 = quantile_sorted(values, 0.50);
    s.q75 = quantile_sorted(values, 0.75);
    s.values = std::move(values);
    return s;
}

std::vector<AreaStats> area_statistics(std::span<const MaskInstance> instances) {
    if (instances.empty()) throw InvalidInput("area statistics need at least one instance");
    std::map<std::size_t, std::vector<double>> by_class;
    for (const MaskInstance& inst : instances) {
        by_class[class_index(inst.class_id)].push_back(static_cast<double>(mask_area(inst.mask)));
    }
    std::vector<AreaStats> out;
    for (auto& [idx, areas] : by_class) out.push_back(describe(kAllDefectClasses[idx], std::move(areas)));
    return out;
}

std::vector<BoxplotSeries> boxplot_series(std::span<const AreaStats> stats) {
    std::vector<BoxplotSeries> out;
    for (const AreaStats& s : stats) {
        BoxplotSeries b;
        b.class_id = s.class_id;
        b.q25 = s.q25;
        b.q50 = s.q50;
        b.q75 = s.q75;
        const double iqr = s.q75 - s.q25;
        const double lo_fence = s.q25 - 1.5 * iqr;
        const double hi_fence = s.q75 + 1.5 * iqr;
        b.whisker_low = s.q25;
        b.whisker_high = s.q75;
        bool have_low = false;
        for (double v : s.values) {
            if (v < lo_fence || v > hi_fence) {
                b.outliers.push_back(v);
                continue;
            }
            if (!have_low) {
                b.whisker_low = std::min(v, s.q25);
                have_low = true;
            }
            b.whisker_high = std::max(v, s.q75);
        }
        out.push_back(std::move(b));
    }
    return out;
}

nlohmann::json boxplot_to_json(std::span<const BoxplotSeries> series) {
    nlohmann::json arr = nlohmann::json::array();
    for (const BoxplotSeries& b : series) {
        arr.push_back({{"class", class_id(b.class_id)},
                       {"label", class_label(b.class_id)},
                       {"q25", b.q25},
                       {"median", b.q50},
                       {"q75", b.q75},
                       {"whisker_low", b.whisker_low},
                       {"whisker_high", b.whisker_high},
                       {"outliers", b.outliers}});
    }
    return {{"version", 1}, {"series", arr}};
}

nlohmann::json stats_to_json(std::span<const AreaStats> stats) {
    nlohmann::json arr = nlohmann::json::array();
    for (const AreaStats& s : stats) {
        arr.push_back({{"class", class_id(s.class_id)},
                       {"count", s.count},
                       {"mean", s.mean},
                       {"std", s.std},
                       {"std_undefined", s.std_undefined},
                       {"min", s.min},
                       {"q25", s.q25},
                       {"q50", s.q50},
                       {"q75", s.q75},
                       {"max", s.max}});
    }
    return arr;
}

std::string format_stats_table(std::span<const AreaStats> stats) {
    const std::vector<std::string> header{"Defect Class", "Count", "Mean", "Std", "Min", "25%", "50%", "75%", "Max"};
    std::vector<std::vector<std::string>> rows;
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        return std::string(buf);
    };
    for (const AreaStats& s : stats) {
        rows.push_back({std::string(class_label(s.class_id)), std::to_string(s.count), num(s.mean),
                        num(s.std) + (s.std_undefined ? "*" : ""), num(s.min), num(s.q25), num(s.q50), num(s.q75),
                        num(s.max)});
    }
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    const auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            const std::string pad(widths[c] - row[c].size(), ' ');
            out << (c == 0 ? row[c] + pad : "  " + pad + row[c]);
        }
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    bool flagged = false;
    for (const AreaStats& s : stats) flagged = flagged || s.std_undefined;
    if (flagged) out << "* single instance: std undefined, reported as 0\n";
    return out.str();
}

}  // namespace semirend
