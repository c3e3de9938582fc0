#include "semirend/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semirend/error.hpp"
#include "semirend/sampling.hpp"

namespace semirend {

std::size_t RenderConfig::resolved_points(std::size_t coarse_height, std::size_t coarse_width) const {
    if (points_per_step) return *points_per_step;
    (void)coarse_height;
    const std::size_t out_w = coarse_width << subdivision_steps;
    return out_w * out_w / 16;
}

Grid2D upsample_repeated(const Grid2D& grid, std::size_t steps) {
    Grid2D current = grid;
    for (std::size_t s = 0; s < steps; ++s) current = upsample2x(current);
    return current;
}

Grid2D refine(const Grid2D& coarse_logits, const Grid2D& features, const PointHeadParams& head,
              const RenderConfig& cfg, RenderTrace* trace) {
    if (coarse_logits.channels() != 1) throw InvalidInput("refine expects single-channel coarse logits");
    if (cfg.subdivision_steps == 0) throw InvalidInput("subdivision_steps must be positive");
    if (cfg.subdivision_steps > 16) throw InvalidInput("subdivision_steps is implausibly large");
    const PointHeadLayout& layout = head.layout();
    if (layout.coarse_dim != 1 || layout.fine_dim != features.channels()) {
        throw InvalidInput("point head expects input (" + std::to_string(layout.coarse_dim) + " + " +
                           std::to_string(layout.fine_dim) + "), refine supplies (1 + " +
                           std::to_string(features.channels()) + ")");
    }
    const std::size_t n = cfg.resolved_points(coarse_logits.height(), coarse_logits.width());
    const std::size_t out_cells = (coarse_logits.height() << cfg.subdivision_steps) *
                                  (coarse_logits.width() << cfg.subdivision_steps);
    if (n > out_cells) {
        throw InvalidInput("points_per_step " + std::to_string(n) + " exceeds output cell count " +
                           std::to_string(out_cells));
    }

    if (trace) {
        const bool record = trace->record_inputs;
        *trace = RenderTrace{};
        trace->record_inputs = record;
    }
    Grid2D current = coarse_logits;
    std::vector<double> fine(features.channels());
    for (std::size_t step = 0; step < cfg.subdivision_steps; ++step) {
        current = upsample2x(current);
        const std::size_t take = std::min(n, current.cell_count());
        if (take == 0) {
            if (trace) trace->selected.emplace_back();
            continue;
        }
        const auto cells = select_top_uncertain_cells(uncertainty_from_logits(current), take);
        PointSet points;
        ChannelVectors labels;
        points.reserve(take);
        labels.reserve(take);
        for (const CellIndex& c : cells) {
            const Point p = cell_center(c.row, c.col, current.height(), current.width());
            const double coarse = current.at(c.row, c.col);
            bilinear_sample_into(features, p, fine);
            points.push_back(p);
            if (trace && trace->record_inputs) {
                trace->input_points.push_back(p);
                trace->inputs.push_back({{coarse}, fine});
            }
            labels.push_back({forward(head, std::span<const double>(&coarse, 1), fine)});
        }
        current = scatter_points(std::move(current), points, labels);
        if (trace) {
            trace->head_evaluations += take;
            trace->selected.push_back(cells);
        }
    }
    return current;
}

DenseMask binarize(const Grid2D& logits, double threshold) {
    if (logits.channels() != 1) throw InvalidInput("binarize expects a single-channel grid");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidInput("threshold must lie in [0, 1]");
    // sigmoid(z) >= t  <=>  z >= log(t) - log(1 - t); exactly 0 for t = 0.5.
    const double cut = std::log(threshold) - std::log1p(-threshold);
    DenseMask mask(logits.height(), logits.width());
    const auto values = logits.values();
    for (std::size_t k = 0; k < values.size(); ++k) mask.pixels[k] = values[k] >= cut ? 1 : 0;
    return mask;
}

}  // namespace semirend
