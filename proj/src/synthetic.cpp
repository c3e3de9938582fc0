#include "semirend/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semirend/error.hpp"
#include "semirend/rng.hpp"

namespace semirend {

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

const std::map<DefectClass, SplitCounts>& reference_distribution() {
    static const std::map<DefectClass, SplitCounts> dist{
        {DefectClass::thin_bridge, {240, 30, 30}},
        {DefectClass::single_bridge, {240, 30, 30}},
        {DefectClass::line_collapse, {200, 30, 30}},
        {DefectClass::multi_bridge_horizontal, {160, 20, 20}},
        {DefectClass::multi_bridge_non_horizontal, {80, 10, 10}},
    };
    return dist;
}

namespace {

// Largest-remainder apportionment of `total` over `weights`; ties go to the
// earlier slot.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
    const std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
    std::vector<std::size_t> out(weights.size());
    std::vector<std::size_t> remainder(weights.size());
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        out[k] = total * weights[k] / sum;
        remainder[k] = total * weights[k] % sum;
        assigned += out[k];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % order.size()]];
    return out;
}

}  // namespace

std::map<DefectClass, std::size_t> proportional_class_counts(std::size_t total) {
    std::vector<std::size_t> weights;
    for (DefectClass c : kAllDefectClasses) weights.push_back(reference_distribution().at(c).total());
    const auto counts = apportion(total, weights);
    std::map<DefectClass, std::size_t> out;
    for (std::size_t k = 0; k < kAllDefectClasses.size(); ++k) out[kAllDefectClasses[k]] = counts[k];
    return out;
}

SplitCounts proportional_split(DefectClass c, std::size_t count) {
    const SplitCounts& ref = reference_distribution().at(c);
    const auto parts = apportion(count, {ref.train, ref.val, ref.test});
    return {parts[0], parts[1], parts[2]};
}

void SynthConfig::validate() const {
    if (line_width == 0 || line_width >= line_pitch) throw ConfigError("line_width must be in [1, line_pitch)");
    if (line_pitch - line_width < 2) throw ConfigError("the space between lines must be at least 2 px");
    if (coarse_steps > 10) throw ConfigError("coarse_steps is implausibly large");
    const std::size_t factor = std::size_t{1} << coarse_steps;
    if (image_size % factor != 0) {
        throw ConfigError("image_size " + std::to_string(image_size) + " is not divisible by 2^coarse_steps = " +
                          std::to_string(factor));
    }
    // Multi-line defects span three gaps plus the random line phase.
    if (image_size < 6 * line_pitch) {
        throw ConfigError("image_size " + std::to_string(image_size) + " cannot hold a multi-line defect at pitch " +
                          std::to_string(line_pitch) + " (need >= " + std::to_string(6 * line_pitch) + ")");
    }
    if (!(noise_sigma >= 0.0) || !(coarse_noise >= 0.0)) throw ConfigError("noise levels must be non-negative");
    if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) throw ConfigError("label_smoothing must be in [0, 0.5)");
    if (!(background_level >= 0.0 && background_level <= 1.0 && line_level >= 0.0 && line_level <= 1.0 &&
          defect_level >= 0.0 && defect_level <= 1.0)) {
        throw ConfigError("intensity levels must lie in [0, 1]");
    }
}

namespace {

constexpr double kMargin = 2.0;

struct Layout {
    double phase;  // left edge of line 0
    double pitch;
    double width;
    double size;

    double line_left(long k) const { return phase + static_cast<double>(k) * pitch; }
    double gap_left(long k) const { return line_left(k) + width; }
    double gap_right(long k) const { return line_left(k + 1); }

    // Indices k such that gaps k .. k+span-1 lie inside the margins.
    std::vector<long> gap_runs(long span) const {
        std::vector<long> out;
        for (long k = -2; line_left(k) < size; ++k) {
            if (gap_left(k) >= kMargin && gap_right(k + span - 1) <= size - kMargin) out.push_back(k);
        }
        return out;
    }
    std::vector<long> line_pairs() const {
        std::vector<long> out;
        for (long k = -2; line_left(k) < size; ++k) {
            if (line_left(k) >= kMargin && line_left(k + 1) + width <= size - kMargin) out.push_back(k);
        }
        return out;
    }
};

long pick(Rng& rng, const std::vector<long>& options) {
    if (options.empty()) throw ConfigError("defect does not fit inside the image");
    return options[rng.below(options.size())];
}

double pick_int(Rng& rng, long lo, long hi) {
    if (hi < lo) throw ConfigError("defect does not fit inside the image");
    return static_cast<double>(lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
}

Polygon rectangle(double x0, double y0, double x1, double y1) { return {{x0, x1, x1, x0}, {y0, y0, y1, y1}}; }

Polygon defect_polygon(const SynthConfig& cfg, DefectClass c, const Layout& lay, Rng& rng) {
    const auto size = static_cast<long>(cfg.image_size);
    const auto margin = static_cast<long>(kMargin);
    switch (c) {
        case DefectClass::thin_bridge:
        case DefectClass::single_bridge: {
            const double t = c == DefectClass::thin_bridge ? pick_int(rng, 1, 2) : pick_int(rng, 3, 5);
            const long k = pick(rng, lay.gap_runs(1));
            const double y0 = pick_int(rng, margin, size - margin - static_cast<long>(t));
            return rectangle(lay.gap_left(k), y0, lay.gap_right(k), y0 + t);
        }
        case DefectClass::multi_bridge_horizontal: {
            const long gaps = static_cast<long>(pick_int(rng, 2, 3));
            const double t = pick_int(rng, 3, 6);
            const auto runs = lay.gap_runs(gaps);
            const long k = pick(rng, runs.empty() ? lay.gap_runs(2) : runs);
            const long used = runs.empty() ? 2 : gaps;
            const double y0 = pick_int(rng, margin, size - margin - static_cast<long>(t));
            return rectangle(lay.gap_left(k), y0, lay.gap_right(k + used - 1), y0 + t);
        }
        case DefectClass::multi_bridge_non_horizontal: {
            const long gaps = static_cast<long>(pick_int(rng, 2, 3));
            const auto runs = lay.gap_runs(gaps);
            const long used = runs.empty() ? 2 : gaps;
            const long k = pick(rng, runs.empty() ? lay.gap_runs(2) : runs);
            const double t = pick_int(rng, 4, 7);
            const auto pitch = static_cast<long>(cfg.line_pitch);
            double dy = pick_int(rng, pitch / 2, pitch) * static_cast<double>(used);
            if (rng.below(2) == 1) dy = -dy;
            const double lo = std::min(0.0, dy);
            const double hi = std::max(0.0, dy) + t;
            const double y0 = pick_int(rng, margin - static_cast<long>(lo), size - margin - static_cast<long>(hi));
            const double x0 = lay.gap_left(k);
            const double x1 = lay.gap_right(k + used - 1);
            return {{x0, x1, x1, x0}, {y0, y0 + dy, y0 + dy + t, y0 + t}};
        }
        case DefectClass::line_collapse: {
            const long k = pick(rng, lay.line_pairs());
            const double span = pick_int(rng, size / 6, size / 3);
            const double taper = std::max(2.0, std::floor(static_cast<double>(cfg.line_pitch) / 2.0));
            const double y0 = pick_int(rng, margin, size - margin - static_cast<long>(span));
            const double y1 = y0 + span;
            const double xl = lay.line_left(k);
            const double xr = lay.line_left(k + 1) + lay.width;
            const double xm = std::floor((xl + xr) / 2.0);
            return {{xl, xm, xr, xr, xm, xl}, {y0 + taper, y0, y0 + taper, y1 - taper, y1, y1 - taper}};
        }
    }
    throw ConfigError("unknown defect class");
}

}  // namespace

Grid2D feature_grid(const GrayImage& image) {
    const std::size_t h = image.height;
    const std::size_t w = image.width;
    const double scale = 1.0 / static_cast<double>(image.max_value());
    const auto px = [&](std::size_t r, std::size_t c) { return image.pixels[r * w + c] * scale; };
    std::vector<double> values(h * w * 3);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t left = c > 0 ? c - 1 : 0;
            const std::size_t right = c + 1 < w ? c + 1 : w - 1;
            const std::size_t up = r > 0 ? r - 1 : 0;
            const std::size_t down = r + 1 < h ? r + 1 : h - 1;
            double* cell = values.data() + (r * w + c) * 3;
            cell[0] = px(r, c);
            cell[1] = (px(r, right) - px(r, left)) / 2.0;
            cell[2] = (px(down, c) - px(up, c)) / 2.0;
        }
    }
    return Grid2D(h, w, 3, std::move(values));
}

Grid2D coarse_logits_from_mask(const DenseMask& mask, std::size_t steps, double label_smoothing, double noise,
                               std::uint64_t seed) {
    const std::size_t f = std::size_t{1} << steps;
    if (mask.height % f != 0 || mask.width % f != 0) {
        throw ConfigError("mask size is not divisible by the coarse factor " + std::to_string(f));
    }
    const std::size_t ch = mask.height / f;
    const std::size_t cw = mask.width / f;
    Rng rng(seed);
    std::vector<double> logits(ch * cw);
    for (std::size_t i = 0; i < ch; ++i) {
        for (std::size_t j = 0; j < cw; ++j) {
            std::size_t on = 0;
            for (std::size_t r = i * f; r < (i + 1) * f; ++r) {
                for (std::size_t c = j * f; c < (j + 1) * f; ++c) on += mask.at(r, c);
            }
            const double frac = static_cast<double>(on) / static_cast<double>(f * f);
            const double p = (1.0 - label_smoothing) * frac + label_smoothing / 2.0;
            double z = std::log(p) - std::log1p(-p);
            if (noise > 0.0) z += noise * rng.normal();
            logits[i * cw + j] = z;
        }
    }
    return Grid2D(ch, cw, 1, std::move(logits));
}

SyntheticSample generate_sample(const SynthConfig& cfg, DefectClass c, std::size_t index, Split split) {
    cfg.validate();
    Rng rng(mix_seed(cfg.rng_seed) ^ index);
    const std::size_t n = cfg.image_size;
    const Layout lay{pick_int(rng, 0, static_cast<long>(cfg.line_pitch) - 1), static_cast<double>(cfg.line_pitch),
                     static_cast<double>(cfg.line_width), static_cast<double>(n)};

    SyntheticSample s;
    char id[32];
    std::snprintf(id, sizeof id, "img_%04zu", index);
    s.image_id = std::string(id) + ".pgm";
    s.class_id = c;
    s.split = split;
    s.polygon = defect_polygon(cfg, c, lay, rng);
    const DenseMask mask = rasterize_polygon(s.polygon.xs, s.polygon.ys, n, n);

    std::vector<double> intensity(n * n);
    const auto phase = static_cast<long>(lay.phase);
    const auto pitch = static_cast<long>(cfg.line_pitch);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t col = 0; col < n; ++col) {
            const long rel = ((static_cast<long>(col) - phase) % pitch + pitch) % pitch;
            const bool line = rel < static_cast<long>(cfg.line_width);
            intensity[r * n + col] =
                mask.at(r, col) ? cfg.defect_level : (line ? cfg.line_level : cfg.background_level);
        }
    }
    s.image.height = n;
    s.image.width = n;
    s.image.bit_depth = 8;
    s.image.pixels.resize(n * n);
    for (std::size_t k = 0; k < n * n; ++k) {
        double v = intensity[k];
        if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * rng.normal();
        s.image.pixels[k] = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    s.features = feature_grid(s.image);
    s.coarse_logits = coarse_logits_from_mask(mask, cfg.coarse_steps, cfg.label_smoothing, cfg.coarse_noise,
                                              rng.next_u64());
    s.instance = make_instance(s.image_id, c, 1.0, rle_encode(mask));
    return s;
}

SyntheticDataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    SyntheticDataset ds;
    ds.config = cfg;
    std::size_t index = 0;
    for (DefectClass c : kAllDefectClasses) {
        const auto it = cfg.class_counts.find(c);
        const std::size_t count = it == cfg.class_counts.end() ? 0 : it->second;
        const SplitCounts parts = proportional_split(c, count);
        const std::pair<Split, std::size_t> plan[] = {
            {Split::train, parts.train}, {Split::val, parts.val}, {Split::test, parts.test}};
        for (const auto& [split, k] : plan) {
            for (std::size_t i = 0; i < k; ++i) ds.samples.push_back(generate_sample(cfg, c, index++, split));
        }
    }
    return ds;
}

AnnotationSet SyntheticDataset::annotations() const {
    AnnotationSet set;
    for (const SyntheticSample& s : samples) {
        set.images[s.image_id] = {s.image.height, s.image.width, "images/" + s.image_id};
        set.instances.push_back(s.instance);
        set.polygons.emplace_back(s.polygon);
    }
    return set;
}

std::vector<const SyntheticSample*> SyntheticDataset::split(Split s) const {
    std::vector<const SyntheticSample*> out;
    for (const SyntheticSample& sample : samples) {
        if (sample.split == s) out.push_back(&sample);
    }
    return out;
}

}  // namespace semirend
