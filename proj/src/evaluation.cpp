#include "semirend/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "semirend/error.hpp"

namespace semirend {

std::string_view mode_name(EvalMode mode) { return mode == EvalMode::bbox ? "bbox" : "segm"; }

std::optional<EvalMode> parse_mode(std::string_view name) {
    if (name == "bbox") return EvalMode::bbox;
    if (name == "segm" || name == "segmentation") return EvalMode::segmentation;
    return std::nullopt;
}

namespace {

// numpy.linspace(start, stop, num): start + i * ((stop - start) / (num - 1)),
// with the last sample pinned to stop.
std::vector<double> linspace(double start, double stop, std::size_t num) {
    std::vector<double> out(num);
    const double step = (stop - start) / static_cast<double>(num - 1);
    for (std::size_t i = 0; i < num; ++i) out[i] = static_cast<double>(i) * step + start;
    out.back() = stop;
    return out;
}

}  // namespace

std::vector<double> default_iou_thresholds() { return linspace(0.5, 0.95, 10); }

std::vector<AreaRange> default_area_ranges() {
    return {{"all", 0.0, 1e10}, {"medium", 32.0 * 32.0, 96.0 * 96.0}, {"large", 96.0 * 96.0, 1e10}};
}

const AreaRange& all_area_range() {
    static const AreaRange range{"all", 0.0, 1e10};
    return range;
}

const std::vector<double>& recall_thresholds() {
    static const std::vector<double> thresholds = linspace(0.0, 1.0, 101);
    return thresholds;
}

void EvalConfig::validate() const {
    if (iou_thresholds.empty()) throw InvalidInput("at least one IoU threshold is required");
    for (std::size_t k = 0; k < iou_thresholds.size(); ++k) {
        const double t = iou_thresholds[k];
        if (!(t > 0.0 && t <= 1.0)) throw InvalidInput("IoU thresholds must lie in (0, 1]");
        if (k > 0 && !(t > iou_thresholds[k - 1])) {
            throw InvalidInput("IoU thresholds must be strictly increasing");
        }
    }
    if (area_ranges.empty()) throw InvalidInput("at least one area range is required");
    std::set<std::string> names;
    for (const AreaRange& r : area_ranges) {
        if (!(r.lo <= r.hi)) throw InvalidInput("area range '" + r.name + "' is empty");
        if (!names.insert(r.name).second) throw InvalidInput("duplicate area range '" + r.name + "'");
    }
    if (max_detections && *max_detections == 0) throw InvalidInput("max_detections must be positive");
}

double instance_iou(const MaskInstance& pred, const MaskInstance& gt, EvalMode mode) {
    return mode == EvalMode::bbox ? bbox_iou(pred.bbox, gt.bbox) : mask_iou(pred.mask, gt.mask);
}

double instance_area(const MaskInstance& inst, EvalMode mode) {
    return mode == EvalMode::bbox ? inst.bbox.area() : static_cast<double>(mask_area(inst.mask));
}

namespace {

// One (image, class) group prepared for matching at any threshold.
struct Group {
    std::vector<std::size_t> dt_order;  // prediction indices, score desc, truncated
    std::vector<double> dt_scores;      // aligned with dt_order
    std::vector<double> dt_area;        // aligned with dt_order
    std::vector<double> gt_area;        // input order
    std::vector<std::vector<double>> ious;  // [dt position][gt index]
};

Group prepare_group(std::span<const MaskInstance> preds, std::span<const MaskInstance> gts, EvalMode mode,
                    std::optional<std::size_t> max_detections) {
    Group g;
    g.dt_order.resize(preds.size());
    std::iota(g.dt_order.begin(), g.dt_order.end(), std::size_t{0});
    std::stable_sort(g.dt_order.begin(), g.dt_order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
    if (max_detections && g.dt_order.size() > *max_detections) g.dt_order.resize(*max_detections);
    for (std::size_t d : g.dt_order) {
        g.dt_scores.push_back(preds[d].score);
        g.dt_area.push_back(instance_area(preds[d], mode));
        std::vector<double> row(gts.size());
        for (std::size_t k = 0; k < gts.size(); ++k) row[k] = instance_iou(preds[d], gts[k], mode);
        g.ious.push_back(std::move(row));
    }
    for (const MaskInstance& gt : gts) g.gt_area.push_back(instance_area(gt, mode));
    return g;
}

struct GroupMatch {
    std::vector<MatchLabel> labels;  // aligned with dt_order
    std::vector<long> matched_gt;
    std::vector<bool> gt_matched;
    std::vector<bool> gt_ignored;
    std::size_t num_gt = 0;  // in-range ground truths
};

GroupMatch match_group(const Group& g, double iou_thr, const AreaRange& range) {
    const std::size_t num_gts = g.gt_area.size();
    GroupMatch out;
    out.gt_matched.assign(num_gts, false);
    out.gt_ignored.assign(num_gts, false);
    for (std::size_t k = 0; k < num_gts; ++k) {
        out.gt_ignored[k] = !range.contains(g.gt_area[k]);
        if (!out.gt_ignored[k]) ++out.num_gt;
    }
    // In-range ground truths are tried first, each partition in input order.
    std::vector<std::size_t> gt_order(num_gts);
    std::iota(gt_order.begin(), gt_order.end(), std::size_t{0});
    std::stable_partition(gt_order.begin(), gt_order.end(), [&](std::size_t k) { return !out.gt_ignored[k]; });

    for (std::size_t pos = 0; pos < g.dt_order.size(); ++pos) {
        double best = std::min(iou_thr, 1.0 - 1e-10);
        long m = -1;
        for (std::size_t k : gt_order) {
            if (out.gt_matched[k]) continue;
            if (m > -1 && !out.gt_ignored[static_cast<std::size_t>(m)] && out.gt_ignored[k]) break;
            if (g.ious[pos][k] < best) continue;
            best = g.ious[pos][k];
            m = static_cast<long>(k);
        }
        out.matched_gt.push_back(m);
        if (m == -1) {
            out.labels.push_back(range.contains(g.dt_area[pos]) ? MatchLabel::false_positive : MatchLabel::ignored);
        } else {
            out.gt_matched[static_cast<std::size_t>(m)] = true;
            out.labels.push_back(out.gt_ignored[static_cast<std::size_t>(m)] ? MatchLabel::ignored
                                                                               : MatchLabel::true_positive);
        }
    }
    return out;
}

}  // namespace

MatchResult match_detections(std::span<const MaskInstance> preds, std::span<const MaskInstance> gts,
                             double iou_thr, EvalMode mode, const AreaRange& range,
                             std::optional<std::size_t> max_detections) {
    const Group g = prepare_group(preds, gts, mode, max_detections);
    GroupMatch gm = match_group(g, iou_thr, range);
    MatchResult result;
    result.order = g.dt_order;
    result.labels = std::move(gm.labels);
    result.matched_gt = std::move(gm.matched_gt);
    result.gt_matched = std::move(gm.gt_matched);
    result.gt_ignored = std::move(gm.gt_ignored);
    return result;
}

std::optional<double> average_precision(std::span<const MatchLabel> labels, std::size_t num_gt) {
    if (num_gt == 0) return std::nullopt;
    std::vector<double> recall;
    std::vector<double> precision;
    double tp = 0.0;
    double fp = 0.0;
    for (MatchLabel label : labels) {
        if (label == MatchLabel::ignored) continue;
        (label == MatchLabel::true_positive ? tp : fp) += 1.0;
        recall.push_back(tp / static_cast<double>(num_gt));
        precision.push_back(tp / (tp + fp));
    }
    // Interpolated precision: running maximum from the right.
    for (std::size_t i = precision.size(); i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double sum = 0.0;
    for (double r : recall_thresholds()) {
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it == recall.end()) break;
        sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / static_cast<double>(recall_thresholds().size());
}

std::optional<std::size_t> APReport::area_index(std::string_view name) const {
    for (std::size_t a = 0; a < area_ranges.size(); ++a) {
        if (area_ranges[a].name == name) return a;
    }
    return std::nullopt;
}

std::optional<std::size_t> APReport::threshold_index(double thr) const {
    for (std::size_t t = 0; t < iou_thresholds.size(); ++t) {
        if (std::abs(iou_thresholds[t] - thr) < 1e-9) return t;
    }
    return std::nullopt;
}

std::optional<double> APReport::class_ap(DefectClass c, std::string_view area) const {
    const auto a = area_index(area);
    if (!a) return std::nullopt;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (classes[k] != c) continue;
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& v : ap[*a][k]) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
    return std::nullopt;
}

std::optional<double> APReport::mean_ap(std::string_view area) const {
    const auto a = area_index(area);
    if (!a) return std::nullopt;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& per_class : ap[*a]) {
        for (const auto& v : per_class) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::optional<double> APReport::mean_ap_at(double thr, std::string_view area) const {
    const auto a = area_index(area);
    const auto t = threshold_index(thr);
    if (!a || !t) return std::nullopt;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& per_class : ap[*a]) {
        if (per_class[*t]) {
            sum += *per_class[*t];
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

APReport evaluate(std::span<const MaskInstance> preds, std::span<const MaskInstance> gts, const EvalConfig& cfg) {
    cfg.validate();
    APReport report;
    report.mode = cfg.mode;
    report.iou_thresholds = cfg.iou_thresholds;
    report.area_ranges = cfg.area_ranges;
    report.classes = cfg.classes;

    const auto class_slot = [&](DefectClass c) -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
            if (cfg.classes[k] == c) return k;
        }
        return std::nullopt;
    };

    // (image, class slot) -> instance lists, images in sorted order.
    std::map<std::pair<std::string, std::size_t>, std::pair<std::vector<MaskInstance>, std::vector<MaskInstance>>>
        groups;
    std::set<DefectClass> skipped;
    for (const MaskInstance& p : preds) {
        const auto slot = class_slot(p.class_id);
        if (!slot) {
            if (cfg.strict) {
                throw UnknownClass("prediction for image '" + p.image_id + "' has class '" +
                                   std::string(class_id(p.class_id)) + "' outside the evaluated class set");
            }
            skipped.insert(p.class_id);
            continue;
        }
        groups[{p.image_id, *slot}].first.push_back(p);
    }
    for (DefectClass c : skipped) {
        report.warnings.push_back("skipped predictions of class '" + std::string(class_id(c)) + "'");
    }
    for (const MaskInstance& g : gts) {
        if (const auto slot = class_slot(g.class_id)) groups[{g.image_id, *slot}].second.push_back(g);
    }

    const std::size_t num_classes = cfg.classes.size();
    const std::size_t num_thr = cfg.iou_thresholds.size();
    report.ap.assign(cfg.area_ranges.size(),
                     std::vector<std::vector<std::optional<double>>>(
                         num_classes, std::vector<std::optional<double>>(num_thr)));

    std::vector<std::vector<Group>> prepared(num_classes);
    for (auto& [key, lists] : groups) {
        prepared[key.second].push_back(prepare_group(lists.first, lists.second, cfg.mode, cfg.max_detections));
    }

    for (std::size_t a = 0; a < cfg.area_ranges.size(); ++a) {
        for (std::size_t k = 0; k < num_classes; ++k) {
            if (prepared[k].empty()) continue;
            for (std::size_t t = 0; t < num_thr; ++t) {
                std::vector<std::pair<double, MatchLabel>> scored;
                std::size_t num_gt = 0;
                for (const Group& g : prepared[k]) {
                    const GroupMatch gm = match_group(g, cfg.iou_thresholds[t], cfg.area_ranges[a]);
                    num_gt += gm.num_gt;
                    for (std::size_t pos = 0; pos < gm.labels.size(); ++pos) {
                        scored.emplace_back(g.dt_scores[pos], gm.labels[pos]);
                    }
                }
                std::stable_sort(scored.begin(), scored.end(),
                                 [](const auto& x, const auto& y) { return x.first > y.first; });
                std::vector<MatchLabel> labels;
                labels.reserve(scored.size());
                for (const auto& s : scored) labels.push_back(s.second);
                report.ap[a][k][t] = average_precision(labels, num_gt);
            }
        }
    }
    return report;
}

double relative_improvement(double baseline, double improved) {
    if (!(baseline > 0.0)) throw InvalidInput("relative improvement needs a positive baseline");
    return 100.0 * (improved - baseline) / baseline;
}

std::string format_percent(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f%%", value);
    return buf;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

nlohmann::json report_to_json(const APReport& report) {
    nlohmann::json j;
    j["mode"] = mode_name(report.mode);
    j["iou_thresholds"] = report.iou_thresholds;
    nlohmann::json ranges = nlohmann::json::array();
    for (const AreaRange& r : report.area_ranges) ranges.push_back({{"name", r.name}, {"min", r.lo}, {"max", r.hi}});
    j["area_ranges"] = ranges;

    nlohmann::json summary;
    summary["mAP"] = opt_json(report.mean_ap());
    summary["AP50"] = opt_json(report.ap50());
    summary["AP75"] = opt_json(report.ap75());
    nlohmann::json area = nlohmann::json::object();
    for (const AreaRange& r : report.area_ranges) area[r.name] = opt_json(report.mean_ap(r.name));
    summary["area"] = area;
    j["summary"] = summary;

    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t k = 0; k < report.classes.size(); ++k) {
        const DefectClass c = report.classes[k];
        nlohmann::json entry;
        entry["AP"] = opt_json(report.class_ap(c));
        const auto a = report.area_index("all");
        const auto t50 = report.threshold_index(0.5);
        const auto t75 = report.threshold_index(0.75);
        entry["AP50"] = a && t50 ? opt_json(report.ap[*a][k][*t50]) : nlohmann::json();
        entry["AP75"] = a && t75 ? opt_json(report.ap[*a][k][*t75]) : nlohmann::json();
        nlohmann::json by_area = nlohmann::json::object();
        for (const AreaRange& r : report.area_ranges) by_area[r.name] = opt_json(report.class_ap(c, r.name));
        entry["area"] = by_area;
        per_class[std::string(class_id(c))] = entry;
    }
    j["per_class"] = per_class;
    j["warnings"] = report.warnings;
    return j;
}

namespace {

std::optional<double> read_metric(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ParseError(where + "/" + key, "expected a number");
    return v.get<double>();
}

}  // namespace

ReportSummary summary_from_json(const nlohmann::json& report_json, const std::string& where) {
    if (!report_json.is_object()) throw ParseError(where, "report must be a JSON object");
    ReportSummary s;
    if (report_json.contains("summary")) {
        const auto& sum = report_json.at("summary");
        const std::string at = where + "/summary";
        s.map = read_metric(sum, "mAP", at);
        s.ap50 = read_metric(sum, "AP50", at);
        s.ap75 = read_metric(sum, "AP75", at);
        if (sum.is_object() && sum.contains("area")) {
            s.ap_medium = read_metric(sum.at("area"), "medium", at + "/area");
            s.ap_large = read_metric(sum.at("area"), "large", at + "/area");
        }
    }
    if (report_json.contains("per_class")) {
        const auto& pc = report_json.at("per_class");
        if (!pc.is_object()) throw ParseError(where + "/per_class", "expected an object");
        for (const auto& [name, value] : pc.items()) {
            const auto cls = parse_class(name);
            if (!cls) throw ParseError(where + "/per_class/" + name, "unknown defect class");
            std::optional<double> v;
            if (value.is_number()) {
                v = value.get<double>();
            } else if (value.is_object()) {
                v = read_metric(value, "AP", where + "/per_class/" + name);
            } else if (!value.is_null()) {
                throw ParseError(where + "/per_class/" + name, "expected a number or an object");
            }
            if (v) s.per_class.emplace_back(*cls, *v);
        }
    }
    return s;
}

namespace {

// Row order of the per-class tables.
constexpr std::array<DefectClass, 5> kTableOrder{
    DefectClass::thin_bridge,
    DefectClass::single_bridge,
    DefectClass::multi_bridge_horizontal,
    DefectClass::multi_bridge_non_horizontal,
    DefectClass::line_collapse,
};

std::optional<double> class_value(const ReportSummary* s, DefectClass c) {
    if (!s) return std::nullopt;
    for (const auto& [cls, v] : s->per_class) {
        if (cls == c) return v;
    }
    return std::nullopt;
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

std::string improvement_cell(const std::optional<double>& base, const std::optional<double>& improved) {
    if (!base || !improved || !(*base > 0.0)) return "-";
    return format_percent(relative_improvement(*base, *improved));
}

// Fixed-width text table: first column left-aligned, the rest right-aligned.
std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    const auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            const std::string pad(widths[c] - row[c].size(), ' ');
            if (c == 0) {
                out << row[c] << pad;
            } else {
                out << "  " << pad << row[c];
            }
        }
        out << '\n';
    };
    emit(header);
    std::size_t total = 0;
    for (std::size_t w : widths) total += w;
    out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    for (const auto& row : rows) emit(row);
    return out.str();
}

using Metric = std::optional<double> ReportSummary::*;

struct ThresholdRow {
    const char* label;
    Metric metric;
};

constexpr std::array<ThresholdRow, 5> kThresholdRows{{
    {"IOU 0.5:0.95", &ReportSummary::map},
    {"IOU 0.5", &ReportSummary::ap50},
    {"IOU 0.75", &ReportSummary::ap75},
    {"Medium area", &ReportSummary::ap_medium},
    {"Large Area", &ReportSummary::ap_large},
}};

std::optional<double> metric(const ReportSummary* s, Metric m) {
    if (!s) return std::nullopt;
    return s->*m;
}

}  // namespace

std::string format_class_table(const ReportSummary* bbox, const ReportSummary* segm) {
    std::vector<std::vector<std::string>> rows;
    for (DefectClass c : kTableOrder) {
        const auto b = class_value(bbox, c);
        const auto s = class_value(segm, c);
        if (!b && !s) continue;
        rows.push_back({std::string(class_label(c)), cell(b), cell(s)});
    }
    rows.push_back({"Total (mAP)", cell(metric(bbox, &ReportSummary::map)), cell(metric(segm, &ReportSummary::map))});
    return render({"Class Name", "BBox AP", "Segmentation AP"}, rows);
}

std::string format_threshold_table(const ReportSummary* bbox, const ReportSummary* segm) {
    std::vector<std::vector<std::string>> rows;
    for (const ThresholdRow& r : kThresholdRows) {
        rows.push_back({r.label, cell(metric(bbox, r.metric)), cell(metric(segm, r.metric))});
    }
    return render({"mAP with...", "Bounding Box", "Segmentation"}, rows);
}

std::string format_comparison(const ReportSummary* base_bbox, const ReportSummary* base_segm,
                              const ReportSummary* new_bbox, const ReportSummary* new_segm,
                              std::vector<std::string>& warnings) {
    const std::vector<std::string> header{"",          "Base BBox", "Base Segm", "New BBox",
                                          "New Segm", "BBox gain", "Segm gain"};

    // Per-class rows over the classes both sides report.
    const auto class_set = [](const ReportSummary* s) {
        std::set<DefectClass> out;
        if (s) {
            for (const auto& [c, v] : s->per_class) out.insert(c);
        }
        return out;
    };
    std::set<DefectClass> base_classes = class_set(base_bbox);
    for (DefectClass c : class_set(base_segm)) base_classes.insert(c);
    std::set<DefectClass> new_classes = class_set(new_bbox);
    for (DefectClass c : class_set(new_segm)) new_classes.insert(c);
    for (DefectClass c : kAllDefectClasses) {
        if (base_classes.count(c) != new_classes.count(c)) {
            warnings.push_back("class '" + std::string(class_id(c)) +
                               "' is present in only one report; using the intersection");
        }
    }

    std::vector<std::vector<std::string>> class_rows;
    for (DefectClass c : kTableOrder) {
        if (!base_classes.count(c) || !new_classes.count(c)) continue;
        const auto bb = class_value(base_bbox, c);
        const auto bs = class_value(base_segm, c);
        const auto nb = class_value(new_bbox, c);
        const auto ns = class_value(new_segm, c);
        class_rows.push_back({std::string(class_label(c)), cell(bb), cell(bs), cell(nb), cell(ns),
                              improvement_cell(bb, nb), improvement_cell(bs, ns)});
    }
    {
        const auto bb = metric(base_bbox, &ReportSummary::map);
        const auto bs = metric(base_segm, &ReportSummary::map);
        const auto nb = metric(new_bbox, &ReportSummary::map);
        const auto ns = metric(new_segm, &ReportSummary::map);
        class_rows.push_back({"Total (mAP)", cell(bb), cell(bs), cell(nb), cell(ns), improvement_cell(bb, nb),
                              improvement_cell(bs, ns)});
    }

    std::vector<std::vector<std::string>> thr_rows;
    for (const ThresholdRow& r : kThresholdRows) {
        const auto bb = metric(base_bbox, r.metric);
        const auto bs = metric(base_segm, r.metric);
        const auto nb = metric(new_bbox, r.metric);
        const auto ns = metric(new_segm, r.metric);
        thr_rows.push_back(
            {r.label, cell(bb), cell(bs), cell(nb), cell(ns), improvement_cell(bb, nb), improvement_cell(bs, ns)});
    }

    std::vector<std::string> class_header = header;
    class_header[0] = "Class Name";
    std::vector<std::string> thr_header = header;
    thr_header[0] = "mAP with...";
    return render(class_header, class_rows) + "\n" + render(thr_header, thr_rows);
}

}  // namespace semirend
