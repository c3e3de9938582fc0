#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "semirend/grid.hpp"
#include "semirend/mask.hpp"
#include "semirend/point_head.hpp"
#include "semirend/renderer.hpp"
#include "semirend/sampling.hpp"

namespace semirend {

// Label of the ground-truth pixel whose center is nearest to `p`.
int label_at(const DenseMask& gt, Point p);

// Head input at `p`: bilinear samples of the coarse logits and the features.
PointFeature point_feature(const Grid2D& coarse, const Grid2D& features, Point p);

// Training points for one instance, biased towards the coarse boundary
// (uncertainty = -|bilinear coarse logit|).
std::vector<LabeledPoint> sample_labeled_points(const Grid2D& coarse, const Grid2D& features, const DenseMask& gt,
                                                const TrainSamplerConfig& cfg);

// Every head input visited by refine() with `head`, labelled from `gt`.
std::vector<LabeledPoint> trajectory_points(const Grid2D& coarse, const Grid2D& features, const DenseMask& gt,
                                            const PointHeadParams& head, const RenderConfig& cfg);

struct TrainingInstance {
    const Grid2D* coarse = nullptr;
    const Grid2D* features = nullptr;
    const DenseMask* gt = nullptr;
};

struct HeadTrainingConfig {
    PointHeadLayout layout;
    std::size_t points_per_instance = 14 * 14;
    double oversample_factor = 3.0;
    double importance_ratio = 0.75;
    TrainConfig train;
    // Extra rounds that add the points refine() visits with the current head
    // and train another `train.steps` steps on the grown set.
    std::size_t trajectory_rounds = 0;
    RenderConfig render;
    std::uint64_t rng_seed = 0;
};

struct HeadTrainingResult {
    PointHeadParams head;
    std::vector<double> losses;  // per step, all rounds
    double initial_probe_loss = 0.0;
    double final_probe_loss = 0.0;
    std::size_t training_points = 0;
};

// Initializes a head from the seed, then trains it on sampled points. The
// probe set is sampled like the training set under an independent seed.
HeadTrainingResult train_point_head(std::span<const TrainingInstance> instances, const HeadTrainingConfig& cfg,
                                    const TrainObserver& observer = {});

}  // namespace semirend
