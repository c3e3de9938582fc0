#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "semirend/grid.hpp"

namespace semirend {

// Single-channel grid where larger means "more likely to sit on a mask border".
struct UncertaintyMap {
    Grid2D grid;
};

// Binary logits (C = 1): u = -|logit|. Per-class scores (C >= 2): u = -(top1 - top2).
UncertaintyMap uncertainty_from_logits(const Grid2D& logits);

// Cells of the N largest uncertainties, ordered by (uncertainty desc, row, col).
std::vector<CellIndex> select_top_uncertain_cells(const UncertaintyMap& u, std::size_t n);

// Same selection returned as cell-center coordinates.
PointSet select_top_uncertain(const UncertaintyMap& u, std::size_t n);

struct TrainSamplerConfig {
    std::size_t num_points = 14 * 14;
    double oversample_factor = 3.0;
    double importance_ratio = 0.75;
    std::uint64_t rng_seed = 0;

    void validate() const;
    std::size_t candidate_count() const;
    std::size_t important_count() const;
};

using UncertaintyFn = std::function<double(Point)>;

struct TrainingDraw {
    PointSet points;      // final N points: retained candidates first, then fresh uniform points
    PointSet candidates;  // the ceil(k*N) oversampled candidates (empty when nothing is retained)
};

// Importance sampling biased towards uncertain points: draw ceil(k*N)
// candidates, keep the floor(beta*N) most uncertain (in draw order), fill the
// rest uniformly.
TrainingDraw sample_training_points_traced(const UncertaintyFn& u_eval, const TrainSamplerConfig& cfg);

PointSet sample_training_points(const UncertaintyFn& u_eval, const TrainSamplerConfig& cfg);

}  // namespace semirend
