#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semirend/defect_class.hpp"
#include "semirend/mask.hpp"

namespace semirend {

enum class EvalMode { bbox, segmentation };

std::string_view mode_name(EvalMode mode);  // "bbox" | "segm"
std::optional<EvalMode> parse_mode(std::string_view name);

// Closed pixel-area interval [lo, hi], COCO semantics.
struct AreaRange {
    std::string name;
    double lo = 0.0;
    double hi = 1e10;

    bool contains(double area) const { return area >= lo && area <= hi; }
    friend bool operator==(const AreaRange&, const AreaRange&) = default;
};

// 0.50, 0.55, ..., 0.95 computed the way numpy.linspace does, so thresholds
// compare bit-for-bit with the reference COCO evaluator.
std::vector<double> default_iou_thresholds();
std::vector<AreaRange> default_area_ranges();  // all, medium (32^2..96^2), large (96^2..)
const AreaRange& all_area_range();

// The 101 recall sample points 0.00, 0.01, ..., 1.00 (linspace-exact).
const std::vector<double>& recall_thresholds();

struct EvalConfig {
    std::vector<double> iou_thresholds = default_iou_thresholds();
    std::vector<AreaRange> area_ranges = default_area_ranges();
    EvalMode mode = EvalMode::segmentation;
    std::optional<std::size_t> max_detections;  // per image and class; unset = unlimited
    std::vector<DefectClass> classes{kAllDefectClasses.begin(), kAllDefectClasses.end()};
    // Predictions of a class outside `classes`: error when strict, else skipped with a warning.
    bool strict = true;

    void validate() const;
};

enum class MatchLabel { true_positive, false_positive, ignored };

struct MatchResult {
    std::vector<std::size_t> order;       // prediction indices in visiting order
    std::vector<MatchLabel> labels;       // aligned with `order`
    std::vector<long> matched_gt;         // aligned with `order`; gt index or -1
    std::vector<bool> gt_matched;         // per ground truth, input order
    std::vector<bool> gt_ignored;         // outside the active area range
};

// IoU of one prediction/ground-truth pair under `mode`.
double instance_iou(const MaskInstance& pred, const MaskInstance& gt, EvalMode mode);

// Area used for range filtering: mask pixels (segmentation) or box area (bbox).
double instance_area(const MaskInstance& inst, EvalMode mode);

// Greedy single-consumption matching for one (image, class) group.
// Predictions are visited by descending score (stable); each takes the
// still-unmatched ground truth with the highest IoU >= iou_thr, preferring
// in-range ground truths. Predictions matched to out-of-range ground truths,
// and unmatched out-of-range predictions, are labelled `ignored`.
MatchResult match_detections(std::span<const MaskInstance> preds, std::span<const MaskInstance> gts,
                             double iou_thr, EvalMode mode, const AreaRange& range = all_area_range(),
                             std::optional<std::size_t> max_detections = std::nullopt);

// 101-point interpolated AP of labels already in descending score order.
// nullopt when num_gt == 0 (the class is excluded from means).
std::optional<double> average_precision(std::span<const MatchLabel> labels, std::size_t num_gt);

struct APReport {
    EvalMode mode = EvalMode::segmentation;
    std::vector<double> iou_thresholds;
    std::vector<AreaRange> area_ranges;
    std::vector<DefectClass> classes;
    // ap[area][class][threshold]; nullopt when the class has no ground truth
    // in that area range.
    std::vector<std::vector<std::vector<std::optional<double>>>> ap;
    std::vector<std::string> warnings;

    std::optional<std::size_t> area_index(std::string_view name) const;
    std::optional<std::size_t> threshold_index(double thr) const;

    // Mean over thresholds for one class.
    std::optional<double> class_ap(DefectClass c, std::string_view area = "all") const;
    // Mean over present classes and all thresholds.
    std::optional<double> mean_ap(std::string_view area = "all") const;
    // Mean over present classes at a single threshold.
    std::optional<double> mean_ap_at(double thr, std::string_view area = "all") const;
    std::optional<double> ap50() const { return mean_ap_at(0.5); }
    std::optional<double> ap75() const { return mean_ap_at(0.75); }
};

APReport evaluate(std::span<const MaskInstance> preds, std::span<const MaskInstance> gts, const EvalConfig& cfg);

// 100 * (improved - baseline) / baseline. Throws InvalidInput when baseline <= 0.
double relative_improvement(double baseline, double improved);

// One decimal with a percent sign, e.g. "13.8%".
std::string format_percent(double value);

nlohmann::json report_to_json(const APReport& report);

// Flattened metrics of one report, as read back from JSON. Missing fields stay empty.
struct ReportSummary {
    std::optional<double> map;
    std::optional<double> ap50;
    std::optional<double> ap75;
    std::optional<double> ap_medium;
    std::optional<double> ap_large;
    std::vector<std::pair<DefectClass, double>> per_class;
};

ReportSummary summary_from_json(const nlohmann::json& report_json, const std::string& where);

// Per-class rows plus "Total (mAP)" with BBox AP / Segmentation AP columns.
std::string format_class_table(const ReportSummary* bbox, const ReportSummary* segm);

// "mAP with..." rows: IOU 0.5:0.95, IOU 0.5, IOU 0.75, Medium area, Large Area.
std::string format_threshold_table(const ReportSummary* bbox, const ReportSummary* segm);

// Baseline vs improved comparison with relative improvements. Classes present
// in only one report are dropped and reported in `warnings`.
std::string format_comparison(const ReportSummary* base_bbox, const ReportSummary* base_segm,
                              const ReportSummary* new_bbox, const ReportSummary* new_segm,
                              std::vector<std::string>& warnings);

}  // namespace semirend
