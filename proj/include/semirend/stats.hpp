#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semirend/defect_class.hpp"
#include "semirend/mask.hpp"

namespace semirend {

// Descriptive statistics of mask areas (pixels) for one class.
struct AreaStats {
    DefectClass class_id = DefectClass::thin_bridge;
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
    double min = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double max = 0.0;
    bool std_undefined = false;  // count == 1: std reported as 0
    std::vector<double> values;  // sorted ascending
};

// Linear-interpolation quantile of ascending `sorted` data:
// position h = (n - 1) q, value x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile_sorted(std::span<const double> sorted, double q);

// Statistics of one sample of values.
AreaStats describe(DefectClass c, std::vector<double> values);

// One row per class present, in class order. Throws InvalidInput when empty.
std::vector<AreaStats> area_statistics(std::span<const MaskInstance> instances);

struct BoxplotSeries {
    DefectClass class_id = DefectClass::thin_bridge;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double whisker_low = 0.0;   // smallest datum >= q25 - 1.5 IQR
    double whisker_high = 0.0;  // largest datum <= q75 + 1.5 IQR
    std::vector<double> outliers;
};

std::vector<BoxplotSeries> boxplot_series(std::span<const AreaStats> stats);

nlohmann::json boxplot_to_json(std::span<const BoxplotSeries> series);
nlohmann::json stats_to_json(std::span<const AreaStats> stats);

// Text table with columns Defect Class, Count, Mean, Std, Min, 25%, 50%, 75%, Max.
std::string format_stats_table(std::span<const AreaStats> stats);

}  // namespace semirend
