#include <doctest.h>

#include <algorithm>

#include "semirend/error.hpp"
#include "semirend/evaluation.hpp"
#include "semirend/synthetic.hpp"

using namespace semirend;

namespace {

SynthConfig small_config(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.image_size = 128;
    cfg.line_pitch = 16;
    cfg.line_width = 8;
    cfg.rng_seed = seed;
    return cfg;
}

std::size_t count_of(const std::map<DefectClass, std::size_t>& m, DefectClass c) {
    const auto it = m.find(c);
    return it == m.end() ? 0 : it->second;
}

}  // namespace

TEST_CASE("reference distribution matches the published table") {
    const auto& ref = reference_distribution();
    CHECK(ref.at(DefectClass::thin_bridge) == SplitCounts{240, 30, 30});
    CHECK(ref.at(DefectClass::single_bridge) == SplitCounts{240, 30, 30});
    CHECK(ref.at(DefectClass::multi_bridge_horizontal) == SplitCounts{160, 20, 20});
    CHECK(ref.at(DefectClass::multi_bridge_non_horizontal) == SplitCounts{80, 10, 10});
    CHECK(ref.at(DefectClass::line_collapse) == SplitCounts{200, 30, 30});
    std::size_t train = 0, val = 0, test = 0;
    for (const auto& [c, s] : ref) {
        train += s.train;
        val += s.val;
        test += s.test;
    }
    CHECK(train == 920);
    CHECK(val == 120);
    CHECK(test == 120);
}

TEST_CASE("116 images follow the table proportions scaled by 0.1") {
    const auto counts = proportional_class_counts(116);
    CHECK(count_of(counts, DefectClass::thin_bridge) == 30);
    CHECK(count_of(counts, DefectClass::single_bridge) == 30);
    CHECK(count_of(counts, DefectClass::multi_bridge_horizontal) == 20);
    CHECK(count_of(counts, DefectClass::multi_bridge_non_horizontal) == 10);
    CHECK(count_of(counts, DefectClass::line_collapse) == 26);

    SynthConfig cfg = small_config(1);
    const SyntheticDataset ds = generate_synthetic(cfg);
    CHECK(ds.samples.size() == 116);
    std::map<DefectClass, std::size_t> train;
    for (const SyntheticSample* s : ds.split(Split::train)) ++train[s->class_id];
    // Train column of the table, in table order, divided by ten.
    CHECK(train[DefectClass::thin_bridge] == 24);
    CHECK(train[DefectClass::single_bridge] == 24);
    CHECK(train[DefectClass::multi_bridge_horizontal] == 16);
    CHECK(train[DefectClass::multi_bridge_non_horizontal] == 8);
    CHECK(train[DefectClass::line_collapse] == 20);
    CHECK(ds.split(Split::train).size() == 92);
    CHECK(ds.split(Split::val).size() == 12);
    CHECK(ds.split(Split::test).size() == 12);
}

TEST_CASE("proportional counts always sum to the total") {
    for (std::size_t total = 0; total < 300; total += 7) {
        std::size_t sum = 0;
        for (const auto& [c, n] : proportional_class_counts(total)) {
            sum += n;
            CHECK(proportional_split(c, n).total() == n);
        }
        CHECK(sum == total);
    }
}

TEST_CASE("noise-free thin bridge has the analytic connector area") {
    SynthConfig cfg = small_config(3);
    cfg.noise_sigma = 0.0;
    for (std::size_t k = 0; k < 40; ++k) {
        const SyntheticSample s = generate_sample(cfg, DefectClass::thin_bridge, k, Split::train);
        const BBox b = s.instance.bbox;
        CHECK(b.w == static_cast<double>(cfg.line_pitch - cfg.line_width));
        CHECK((b.h == 1.0 || b.h == 2.0));
        CHECK(static_cast<double>(mask_area(s.instance.mask)) == b.h * (cfg.line_pitch - cfg.line_width));
    }
}

TEST_CASE("noise-free images use exactly three intensity levels") {
    SynthConfig cfg = small_config(4);
    cfg.noise_sigma = 0.0;
    const SyntheticSample s = generate_sample(cfg, DefectClass::line_collapse, 0, Split::test);
    const DenseMask m = rle_decode(s.instance.mask);
    for (std::size_t k = 0; k < s.image.pixels.size(); ++k) {
        const auto v = s.image.pixels[k];
        if (m.pixels[k]) {
            CHECK(v == 255);
        } else {
            CHECK((v == 51 || v == 204));
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    const SynthConfig cfg = small_config(7);
    const SyntheticDataset a = generate_synthetic(cfg);
    const SyntheticDataset b = generate_synthetic(cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k].image == b.samples[k].image);
        CHECK(a.samples[k].instance == b.samples[k].instance);
        CHECK(a.samples[k].polygon == b.samples[k].polygon);
        CHECK(std::equal(a.samples[k].coarse_logits.values().begin(), a.samples[k].coarse_logits.values().end(),
                         b.samples[k].coarse_logits.values().begin()));
    }
    const SyntheticDataset c = generate_synthetic(small_config(8));
    bool differs = false;
    for (std::size_t k = 0; k < c.samples.size(); ++k) differs = differs || !(c.samples[k].image == a.samples[k].image);
    CHECK(differs);
}

TEST_CASE("every instance's mask, polygon, bbox and area agree") {
    const SyntheticDataset ds = generate_synthetic(small_config(9));
    for (const SyntheticSample& s : ds.samples) {
        const std::size_t area = mask_area(s.instance.mask);
        CHECK(area > 0);
        CHECK(s.instance.bbox == mask_to_bbox(s.instance.mask));
        const DenseMask m = rle_decode(s.instance.mask);
        CHECK(static_cast<std::size_t>(std::count(m.pixels.begin(), m.pixels.end(), 1)) == area);
        CHECK(polygon_to_mask(s.polygon, 128, 128) == s.instance.mask);
        CHECK(s.image.height == 128);
        CHECK(s.features.channels() == 3);
        CHECK(s.coarse_logits.height() == 16);
    }
}

TEST_CASE("class geometry") {
    SynthConfig cfg = small_config(10);
    cfg.noise_sigma = 0.0;
    const double gap = static_cast<double>(cfg.line_pitch - cfg.line_width);
    for (std::size_t k = 0; k < 20; ++k) {
        const auto single = generate_sample(cfg, DefectClass::single_bridge, k, Split::train).instance.bbox;
        CHECK(single.w == gap);
        CHECK(single.h >= 3.0);
        CHECK(single.h <= 5.0);
        // Horizontal multi-bridges span at least three lines on one row band.
        const auto mbh = generate_sample(cfg, DefectClass::multi_bridge_horizontal, k, Split::train).instance.bbox;
        CHECK(mbh.w >= 2 * gap + static_cast<double>(cfg.line_width));
        CHECK(mbh.h <= 6.0);
        // Non-horizontal ones climb across rows.
        const auto mbnh = generate_sample(cfg, DefectClass::multi_bridge_non_horizontal, k, Split::train).instance.bbox;
        CHECK(mbnh.w >= 2 * gap + static_cast<double>(cfg.line_width));
        CHECK(mbnh.h > 7.0);
        const auto lc = generate_sample(cfg, DefectClass::line_collapse, k, Split::train).instance.bbox;
        CHECK(lc.w >= gap);
        CHECK(lc.h >= 128.0 / 6.0 - 1.0);
    }
}

TEST_CASE("self-evaluation of generated annotations saturates") {
    const SyntheticDataset ds = generate_synthetic(small_config(11));
    const AnnotationSet gt = ds.annotations();
    CHECK(gt.instances.size() == ds.samples.size());
    CHECK(gt.polygons.size() == gt.instances.size());
    for (const auto& inst : gt.instances) CHECK(gt.images.count(inst.image_id) == 1);
    for (EvalMode mode : {EvalMode::bbox, EvalMode::segmentation}) {
        EvalConfig ec;
        ec.mode = mode;
        const APReport r = evaluate(gt.instances, gt.instances, ec);
        std::size_t cells = 0;
        for (const auto& area : r.ap) {
            for (const auto& cls : area) {
                for (const auto& v : cls) {
                    if (!v) continue;
                    CHECK(*v == 1.0);
                    ++cells;
                }
            }
        }
        CHECK(cells > 0);
        CHECK(r.mean_ap() == 1.0);
    }
}

TEST_CASE("invalid configurations are rejected") {
    const auto bad = [](auto mutate) {
        SynthConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    };
    bad([](SynthConfig& c) { c.line_width = c.line_pitch; });
    bad([](SynthConfig& c) { c.line_width = 0; });
    bad([](SynthConfig& c) { c.line_width = c.line_pitch - 1; });
    bad([](SynthConfig& c) { c.image_size = 100; });
    bad([](SynthConfig& c) { c.image_size = 64; });
    bad([](SynthConfig& c) { c.noise_sigma = -1.0; });
    bad([](SynthConfig& c) { c.label_smoothing = 0.5; });
    bad([](SynthConfig& c) { c.defect_level = 2.0; });
    SynthConfig ok;
    CHECK_NOTHROW(ok.validate());
    SynthConfig big;
    big.line_pitch = 200;
    big.line_width = 100;
    CHECK_THROWS_AS(generate_synthetic(big), ConfigError);
}

TEST_CASE("empty dataset") {
    SynthConfig cfg = small_config(12);
    cfg.class_counts = proportional_class_counts(0);
    const SyntheticDataset ds = generate_synthetic(cfg);
    CHECK(ds.samples.empty());
    CHECK(ds.annotations().instances.empty());
}

TEST_CASE("480x480 default images") {
    SynthConfig cfg;
    cfg.rng_seed = 13;
    const SyntheticSample s = generate_sample(cfg, DefectClass::single_bridge, 0, Split::val);
    CHECK(s.image.height == 480);
    CHECK(s.image.width == 480);
    CHECK(s.coarse_logits.height() == 60);
}

TEST_CASE("coarse logits of a constant mask") {
    DenseMask m(16, 16);
    std::fill(m.pixels.begin(), m.pixels.end(), 1);
    const Grid2D g = coarse_logits_from_mask(m, 2, 0.05, 0.0, 0);
    CHECK(g.height() == 4);
    // p = 0.95 + 0.025
    CHECK(g.at(0, 0) == doctest::Approx(std::log(0.975 / 0.025)).epsilon(1e-12));
}

TEST_CASE("feature grid gradients") {
    GrayImage img{1, 3, 8, {0, 51, 255}};
    const Grid2D f = feature_grid(img);
    CHECK(f.at(0, 1, 0) == doctest::Approx(0.2));
    CHECK(f.at(0, 1, 1) == doctest::Approx(0.5));
    CHECK(f.at(0, 1, 2) == 0.0);
}
