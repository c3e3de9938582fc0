#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "../common/eval_oracle.hpp"
#include "semirend/error.hpp"
#include "semirend/evaluation.hpp"
#include "semirend/rng.hpp"

using namespace semirend;

namespace {

MaskInstance rect(const std::string& img, DefectClass c, double score, long x0, long y0, long x1, long y1,
                  std::size_t size = 12) {
    return make_instance(img, c, score, oracle::rect_mask(size, size, x0, y0, x1, y1));
}

std::vector<MatchLabel> L(std::initializer_list<char> tags) {
    std::vector<MatchLabel> out;
    for (char t : tags) out.push_back(t == 'T' ? MatchLabel::true_positive : MatchLabel::false_positive);
    return out;
}

EvalConfig micro_config(EvalMode mode) {
    EvalConfig cfg;
    cfg.mode = mode;
    cfg.classes = {DefectClass::thin_bridge, DefectClass::line_collapse};
    // Ranges sized for the 12x12 canvas so area filtering is exercised.
    cfg.area_ranges = {{"all", 0, 1e10}, {"medium", 9, 36}, {"large", 36, 1e10}};
    return cfg;
}

}  // namespace

TEST_CASE("default thresholds follow linspace arithmetic") {
    const auto t = default_iou_thresholds();
    REQUIRE(t.size() == 10);
    CHECK(t.front() == 0.5);
    CHECK(t.back() == 0.95);
    // numpy.linspace(0.5, 0.95, 10)[k] == k * 0.05 + 0.5 in double arithmetic.
    const double step = (0.95 - 0.5) / 9.0;
    for (std::size_t k = 0; k + 1 < 10; ++k) CHECK(t[k] == static_cast<double>(k) * step + 0.5);
    CHECK(recall_thresholds().size() == 101);
    CHECK(recall_thresholds()[100] == 1.0);
    CHECK(recall_thresholds()[7] == 7 * 0.01);
    const auto ranges = default_area_ranges();
    REQUIRE(ranges.size() == 3);
    CHECK(ranges[1].lo == 1024.0);
    CHECK(ranges[1].hi == 9216.0);
    CHECK(ranges[2].lo == 9216.0);
    CHECK(ranges[1].contains(1024.0));
    CHECK(ranges[2].contains(9216.0));
}

TEST_CASE("config validation") {
    EvalConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.iou_thresholds = {0.5, 0.5};
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg.iou_thresholds = {0.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.max_detections = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.area_ranges.push_back({"all", 0, 1});
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("average precision closed forms") {
    CHECK(*average_precision(L({'T', 'T'}), 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*average_precision(L({'F', 'F'}), 2) == 0.0);
    CHECK(*average_precision({}, 3) == 0.0);
    CHECK_FALSE(average_precision(L({'F'}), 0).has_value());
    // (recall, precision): (0.5, 1), (0.5, 0.5), (1, 2/3).
    const double expected = (51.0 * 1.0 + 50.0 * (2.0 / 3.0)) / 101.0;
    CHECK(std::abs(*average_precision(L({'T', 'F', 'T'}), 2) - expected) <= 1e-15);
    const std::vector<MatchLabel> with_ignored{MatchLabel::true_positive, MatchLabel::ignored,
                                               MatchLabel::false_positive, MatchLabel::true_positive};
    CHECK(std::abs(*average_precision(with_ignored, 2) - expected) <= 1e-15);
}

TEST_CASE("average precision matches the definition on random label lists") {
    Rng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<MatchLabel> labels;
        std::vector<oracle::Tag> tags;
        std::size_t tps = 0;
        const std::size_t n = rng.below(12);
        for (std::size_t k = 0; k < n; ++k) {
            const auto r = rng.below(3);
            labels.push_back(r == 0 ? MatchLabel::true_positive : r == 1 ? MatchLabel::false_positive
                                                                         : MatchLabel::ignored);
            tags.push_back(r == 0 ? oracle::Tag::tp : r == 1 ? oracle::Tag::fp : oracle::Tag::skip);
            tps += r == 0;
        }
        const std::size_t num_gt = tps + rng.below(3);
        const auto a = average_precision(labels, num_gt);
        const auto b = oracle::ap_from_tags(tags, num_gt);
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(std::abs(*a - *b) <= 1e-12);
    }
}

TEST_CASE("matching basics") {
    const auto gt = rect("a", DefectClass::thin_bridge, 1.0, 2, 2, 8, 8);
    const std::vector<MaskInstance> gts{gt};
    {
        const std::vector<MaskInstance> preds{gt};
        const MatchResult m = match_detections(preds, gts, 0.5, EvalMode::segmentation);
        CHECK(m.labels == std::vector<MatchLabel>{MatchLabel::true_positive});
        CHECK(m.gt_matched == std::vector<bool>{true});
    }
    {
        auto low = gt, high = gt;
        low.score = 0.3;
        high.score = 0.9;
        const std::vector<MaskInstance> preds{low, high};
        const MatchResult m = match_detections(preds, gts, 0.5, EvalMode::segmentation);
        CHECK(m.order == std::vector<std::size_t>{1, 0});
        CHECK(m.labels == std::vector<MatchLabel>{MatchLabel::true_positive, MatchLabel::false_positive});
        CHECK(m.matched_gt == std::vector<long>{0, -1});
    }
    {
        // IoU exactly 0.5 matches at threshold 0.5.
        const std::vector<MaskInstance> preds{rect("a", DefectClass::thin_bridge, 0.5, 2, 2, 8, 5)};
        CHECK(match_detections(preds, gts, 0.5, EvalMode::segmentation).labels[0] == MatchLabel::true_positive);
        CHECK(match_detections(preds, gts, 0.55, EvalMode::segmentation).labels[0] == MatchLabel::false_positive);
    }
}

TEST_CASE("matching prefers in-range ground truths and ignores out-of-range ones") {
    const AreaRange medium{"medium", 9, 36};
    const auto small_gt = rect("a", DefectClass::thin_bridge, 1.0, 0, 0, 2, 2);    // area 4
    const auto medium_gt = rect("a", DefectClass::thin_bridge, 1.0, 0, 0, 4, 4);   // area 16
    const std::vector<MaskInstance> gts{small_gt, medium_gt};
    const std::vector<MaskInstance> preds{rect("a", DefectClass::thin_bridge, 0.9, 0, 0, 3, 3),
                                          rect("a", DefectClass::thin_bridge, 0.8, 0, 0, 2, 2),
                                          rect("a", DefectClass::thin_bridge, 0.7, 9, 9, 10, 10)};
    const MatchResult m = match_detections(preds, gts, 0.5, EvalMode::segmentation, medium);
    CHECK(m.gt_ignored == std::vector<bool>{true, false});
    // 3x3 pred: IoU 9/16 with medium, 4/9 with small -> TP on the medium gt.
    CHECK(m.labels[0] == MatchLabel::true_positive);
    CHECK(m.matched_gt[0] == 1);
    // 2x2 pred matches the out-of-range gt exactly -> ignored.
    CHECK(m.labels[1] == MatchLabel::ignored);
    // Unmatched tiny pred outside the range -> ignored, not FP.
    CHECK(m.labels[2] == MatchLabel::ignored);
}

TEST_CASE("max detections truncates per image and class") {
    const auto gt = rect("a", DefectClass::thin_bridge, 1.0, 2, 2, 8, 8);
    const std::vector<MaskInstance> gts{gt};
    std::vector<MaskInstance> preds;
    for (int k = 0; k < 4; ++k) preds.push_back(rect("a", DefectClass::thin_bridge, 0.1 * (k + 1), 0, 0, 1, 1));
    const MatchResult m = match_detections(preds, gts, 0.5, EvalMode::segmentation, all_area_range(), 2);
    CHECK(m.order == std::vector<std::size_t>{3, 2});
}

TEST_CASE("matching agrees with the brute-force reference") {
    Rng rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        const auto ds = oracle::micro_dataset(rng, {DefectClass::thin_bridge});
        std::vector<MaskInstance> p, g;
        for (const auto& x : ds.preds) {
            if (x.image_id == "img0") p.push_back(x);
        }
        for (const auto& x : ds.gts) {
            if (x.image_id == "img0") g.push_back(x);
        }
        const double thr = default_iou_thresholds()[rng.below(10)];
        const EvalMode mode = rng.below(2) ? EvalMode::bbox : EvalMode::segmentation;
        const AreaRange range = rng.below(2) ? AreaRange{"m", 9, 36} : all_area_range();
        const MatchResult m = match_detections(p, g, thr, mode, range);
        const auto [tags, n] = oracle::match_one(p, g, thr, range.lo, range.hi, mode, std::nullopt);
        REQUIRE(tags.size() == m.labels.size());
        for (std::size_t k = 0; k < tags.size(); ++k) {
            const MatchLabel want = tags[k].tag == oracle::Tag::tp   ? MatchLabel::true_positive
                                    : tags[k].tag == oracle::Tag::fp ? MatchLabel::false_positive
                                                                     : MatchLabel::ignored;
            CHECK(m.labels[k] == want);
        }
    }
}

TEST_CASE("evaluate agrees with the brute-force reference on micro datasets") {
    Rng rng(3);
    for (int trial = 0; trial < 150; ++trial) {
        const EvalMode mode = trial % 2 ? EvalMode::bbox : EvalMode::segmentation;
        EvalConfig cfg = micro_config(mode);
        if (trial % 5 == 0) cfg.max_detections = 2;
        const auto ds = oracle::micro_dataset(rng, cfg.classes);
        const APReport r = evaluate(ds.preds, ds.gts, cfg);
        for (std::size_t a = 0; a < cfg.area_ranges.size(); ++a) {
            for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
                for (std::size_t t = 0; t < cfg.iou_thresholds.size(); ++t) {
                    const auto want = oracle::class_ap(ds.preds, ds.gts, cfg.classes[c], cfg.iou_thresholds[t],
                                                       cfg.area_ranges[a].lo, cfg.area_ranges[a].hi, mode,
                                                       cfg.max_detections);
                    const auto got = r.ap[a][c][t];
                    REQUIRE(got.has_value() == want.has_value());
                    if (got) CHECK(std::abs(*got - *want) <= 1e-9);
                }
            }
        }
    }
}

TEST_CASE("self evaluation saturates and empty predictions score zero") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const EvalMode mode = trial % 2 ? EvalMode::bbox : EvalMode::segmentation;
        EvalConfig cfg = micro_config(mode);
        auto ds = oracle::micro_dataset(rng, cfg.classes);
        const APReport self = evaluate(ds.gts, ds.gts, cfg);
        const APReport none = evaluate(std::vector<MaskInstance>{}, ds.gts, cfg);
        for (std::size_t a = 0; a < self.ap.size(); ++a) {
            for (std::size_t c = 0; c < self.ap[a].size(); ++c) {
                for (std::size_t t = 0; t < self.ap[a][c].size(); ++t) {
                    if (self.ap[a][c][t]) CHECK(*self.ap[a][c][t] == 1.0);
                    if (none.ap[a][c][t]) CHECK(*none.ap[a][c][t] == 0.0);
                }
            }
        }
    }
}

TEST_CASE("AP is non-increasing in the IoU threshold") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        EvalConfig cfg = micro_config(EvalMode::segmentation);
        cfg.area_ranges = {all_area_range()};
        const auto ds = oracle::micro_dataset(rng, cfg.classes);
        const APReport r = evaluate(ds.preds, ds.gts, cfg);
        for (const auto& per_class : r.ap[0]) {
            for (std::size_t t = 1; t < per_class.size(); ++t) {
                if (per_class[t]) CHECK(*per_class[t] <= *per_class[t - 1] + 1e-15);
            }
        }
    }
}

TEST_CASE("duplicated predictions never raise AP") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        EvalConfig cfg = micro_config(EvalMode::segmentation);
        cfg.area_ranges = {all_area_range()};
        const auto ds = oracle::micro_dataset(rng, cfg.classes);
        // One ground truth per image and class, so every duplicate is a false
        // positive: its original already consumed the only candidate.
        std::vector<MaskInstance> gts;
        std::set<std::pair<std::string, DefectClass>> seen;
        for (const auto& g : ds.gts) {
            if (seen.insert({g.image_id, g.class_id}).second) gts.push_back(g);
        }
        std::vector<MaskInstance> doubled = ds.preds;
        doubled.insert(doubled.end(), ds.preds.begin(), ds.preds.end());
        for (const auto& key : seen) {
            std::vector<MaskInstance> p1, p2, g;
            for (const auto& x : ds.preds) {
                if (x.image_id == key.first && x.class_id == key.second) p1.push_back(x);
            }
            for (const auto& x : doubled) {
                if (x.image_id == key.first && x.class_id == key.second) p2.push_back(x);
            }
            for (const auto& x : gts) {
                if (x.image_id == key.first && x.class_id == key.second) g.push_back(x);
            }
            const auto tps = [](const MatchResult& m) {
                return std::count(m.labels.begin(), m.labels.end(), MatchLabel::true_positive);
            };
            for (double thr : cfg.iou_thresholds) {
                REQUIRE(tps(match_detections(p1, g, thr, cfg.mode)) == tps(match_detections(p2, g, thr, cfg.mode)));
            }
        }
        const APReport a = evaluate(ds.preds, gts, cfg);
        const APReport b = evaluate(doubled, gts, cfg);
        for (std::size_t c = 0; c < a.ap[0].size(); ++c) {
            for (std::size_t t = 0; t < a.ap[0][c].size(); ++t) {
                if (a.ap[0][c][t]) CHECK(*b.ap[0][c][t] <= *a.ap[0][c][t] + 1e-15);
            }
        }
    }
}

TEST_CASE("scaling scores leaves the report unchanged") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const EvalConfig cfg = micro_config(EvalMode::bbox);
        const auto ds = oracle::micro_dataset(rng, cfg.classes);
        auto scaled = ds.preds;
        for (auto& p : scaled) p.score *= 0.5;
        const APReport a = evaluate(ds.preds, ds.gts, cfg);
        const APReport b = evaluate(scaled, ds.gts, cfg);
        CHECK(a.ap == b.ap);
        for (const auto& area : a.ap) {
            for (const auto& cls : area) {
                for (const auto& v : cls) {
                    if (v) {
                        CHECK(*v >= 0.0);
                        CHECK(*v <= 1.0);
                    }
                }
            }
        }
    }
}

TEST_CASE("classes without ground truth are excluded from the mean") {
    EvalConfig cfg = micro_config(EvalMode::segmentation);
    const std::vector<MaskInstance> gts{rect("a", DefectClass::thin_bridge, 1.0, 0, 0, 4, 4)};
    const std::vector<MaskInstance> preds{gts[0], rect("a", DefectClass::line_collapse, 0.9, 0, 0, 4, 4)};
    const APReport r = evaluate(preds, gts, cfg);
    CHECK_FALSE(r.class_ap(DefectClass::line_collapse).has_value());
    CHECK(*r.mean_ap() == 1.0);
    CHECK(*r.ap50() == 1.0);
    CHECK(*r.ap75() == 1.0);
}

TEST_CASE("unknown prediction classes are strict errors or skipped") {
    EvalConfig cfg = micro_config(EvalMode::segmentation);
    const std::vector<MaskInstance> gts{rect("a", DefectClass::thin_bridge, 1.0, 0, 0, 4, 4)};
    const std::vector<MaskInstance> preds{gts[0], rect("a", DefectClass::single_bridge, 0.9, 0, 0, 4, 4)};
    CHECK_THROWS_AS(evaluate(preds, gts, cfg), UnknownClass);
    cfg.strict = false;
    const APReport r = evaluate(preds, gts, cfg);
    CHECK(r.warnings.size() == 1);
    CHECK(*r.mean_ap() == 1.0);
}

TEST_CASE("relative improvement reproduces the reported gains") {
    CHECK(format_percent(relative_improvement(0.584, 0.653)) == "11.8%");
    CHECK(format_percent(relative_improvement(0.542, 0.617)) == "13.8%");
    CHECK(format_percent(relative_improvement(0.605, 0.719)) == "18.8%");
    CHECK(format_percent(relative_improvement(0.353, 0.418)) == "18.4%");
    CHECK(std::abs(relative_improvement(0.542, 0.617) - 13.8376383763837) < 1e-9);
    CHECK_THROWS_AS(relative_improvement(0.0, 0.5), InvalidInput);
    CHECK_THROWS_AS(relative_improvement(-0.1, 0.5), InvalidInput);
}

TEST_CASE("report JSON round-trips through the summary reader") {
    Rng rng(8);
    const EvalConfig cfg;
    auto ds = oracle::micro_dataset(rng, {DefectClass::thin_bridge, DefectClass::single_bridge});
    const APReport r = evaluate(ds.preds, ds.gts, cfg);
    const nlohmann::json j = report_to_json(r);
    const ReportSummary s = summary_from_json(j, "report");
    CHECK(s.map == r.mean_ap());
    CHECK(s.ap50 == r.ap50());
    CHECK(s.ap75 == r.ap75());
    CHECK(s.ap_medium == r.mean_ap("medium"));
    CHECK(s.ap_large == r.mean_ap("large"));
    CHECK_THROWS_AS(summary_from_json(nlohmann::json::array(), "x"), ParseError);
    CHECK_THROWS_AS(summary_from_json({{"per_class", {{"nonsense", 0.5}}}}, "x"), ParseError);
    try {
        summary_from_json({{"summary", {{"mAP", "high"}}}}, "r.json");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.where() == "r.json/summary/mAP");
    }
}

TEST_CASE("text tables follow the published layout") {
    ReportSummary bbox, segm;
    bbox.map = 0.584;
    segm.map = 0.542;
    bbox.per_class = {{DefectClass::line_collapse, 0.9}, {DefectClass::thin_bridge, 0.3}};
    segm.per_class = {{DefectClass::line_collapse, 0.8}, {DefectClass::thin_bridge, 0.2}};
    const std::string t = format_class_table(&bbox, &segm);
    CHECK(t.find("Class Name") == 0);
    CHECK(t.find("BBox AP") != std::string::npos);
    CHECK(t.find("Segmentation AP") != std::string::npos);
    CHECK(t.find("Thin bridge") < t.find("Line collapse"));
    CHECK(t.find("Line collapse") < t.find("Total (mAP)"));
    CHECK(t.find("0.584") != std::string::npos);
    const std::string thr = format_threshold_table(&bbox, &segm);
    for (const char* row : {"IOU 0.5:0.95", "IOU 0.5", "IOU 0.75", "Medium area", "Large Area"}) {
        CHECK(thr.find(row) != std::string::npos);
    }
}

TEST_CASE("comparison prints the relative improvements") {
    ReportSummary bb, bs, nb, ns;
    bb.map = 0.584;
    bs.map = 0.542;
    nb.map = 0.653;
    ns.map = 0.617;
    bb.per_class = {{DefectClass::thin_bridge, 0.5}, {DefectClass::line_collapse, 0.7}};
    nb.per_class = {{DefectClass::thin_bridge, 0.6}};
    std::vector<std::string> warnings;
    const std::string out = format_comparison(&bb, &bs, &nb, &ns, warnings);
    CHECK(out.find("11.8%") != std::string::npos);
    CHECK(out.find("13.8%") != std::string::npos);
    CHECK(out.find("20.0%") != std::string::npos);
    CHECK(out.find("Line collapse") == std::string::npos);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("line_collapse") != std::string::npos);
}
