#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semirend/annotations.hpp"
#include "semirend/grid.hpp"
#include "semirend/image_io.hpp"
#include "semirend/mask.hpp"

namespace semirend {

enum class Split { train, val, test };
std::string_view split_name(Split s);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;

    std::size_t total() const { return train + val + test; }
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

// Per-class image counts of the reference SEM dataset (train, val, test).
const std::map<DefectClass, SplitCounts>& reference_distribution();

// `total` images spread over classes in reference proportions (largest
// remainder rounding). 116 gives {30, 30, 26, 20, 10}.
std::map<DefectClass, std::size_t> proportional_class_counts(std::size_t total);

// Splits one class count in the reference train/val/test proportions.
SplitCounts proportional_split(DefectClass c, std::size_t count);

struct SynthConfig {
    std::size_t image_size = 480;
    std::size_t line_pitch = 24;
    std::size_t line_width = 12;
    double noise_sigma = 0.05;  // on the [0, 1] intensity scale
    std::map<DefectClass, std::size_t> class_counts = proportional_class_counts(116);
    std::uint64_t rng_seed = 0;
    std::size_t coarse_steps = 3;  // coarse logits are image_size / 2^coarse_steps
    double label_smoothing = 0.05;
    double coarse_noise = 0.0;  // std of Gaussian noise added to coarse logits
    double background_level = 0.2;
    double line_level = 0.8;
    double defect_level = 1.0;

    // Throws ConfigError for infeasible geometry.
    void validate() const;
};

struct SyntheticSample {
    std::string image_id;
    DefectClass class_id = DefectClass::thin_bridge;
    Split split = Split::train;
    GrayImage image;
    Grid2D features{1, 1, 3};       // intensity, d/dx, d/dy at image resolution
    Grid2D coarse_logits{1, 1, 1};  // image_size / 2^coarse_steps per side
    Polygon polygon;
    MaskInstance instance;
};

struct SyntheticDataset {
    SynthConfig config;
    std::vector<SyntheticSample> samples;

    AnnotationSet annotations() const;
    std::vector<const SyntheticSample*> split(Split s) const;
};

// Deterministic per seed; image k uses a seed derived from (rng_seed, k).
SyntheticDataset generate_synthetic(const SynthConfig& cfg);

// One image with one defect of class `c`.
SyntheticSample generate_sample(const SynthConfig& cfg, DefectClass c, std::size_t index, Split split);

// {intensity / max, central-difference d/dx, d/dy} with clamped borders.
Grid2D feature_grid(const GrayImage& image);

// Block-average `mask` by 2^steps, map p -> (1 - eps) p + eps / 2 to logits,
// add N(0, noise^2). `seed` feeds the noise only.
Grid2D coarse_logits_from_mask(const DenseMask& mask, std::size_t steps, double label_smoothing, double noise,
                               std::uint64_t seed);

}  // namespace semirend
