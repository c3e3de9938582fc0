#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "semirend/grid.hpp"
#include "semirend/mask.hpp"
#include "semirend/point_head.hpp"

namespace semirend {

struct RenderConfig {
    std::size_t subdivision_steps = 5;
    // Points relabeled per step; unset means (output width)^2 / 16.
    std::optional<std::size_t> points_per_step;
    double binarize_threshold = 0.5;

    std::size_t resolved_points(std::size_t coarse_height, std::size_t coarse_width) const;
};

// Optional bookkeeping filled in by refine().
struct RenderTrace {
    std::size_t head_evaluations = 0;
    std::vector<std::vector<CellIndex>> selected;  // per step, in grid coordinates of that step
    // When set, every head input and its location are appended below.
    bool record_inputs = false;
    PointSet input_points;
    std::vector<PointFeature> inputs;
};

// Adaptive subdivision: per step upsample 2x, pick the most uncertain cells,
// relabel them with the point head from [current logit, fine features].
// Each step relabels min(N, cells at that step) points.
Grid2D refine(const Grid2D& coarse_logits, const Grid2D& features, const PointHeadParams& head,
              const RenderConfig& cfg, RenderTrace* trace = nullptr);

// Bilinear baseline: `steps` applications of upsample2x.
Grid2D upsample_repeated(const Grid2D& grid, std::size_t steps);

// Foreground iff sigmoid(logit) >= threshold (threshold 0.5: logit >= 0).
DenseMask binarize(const Grid2D& logits, double threshold = 0.5);

}  // namespace semirend
