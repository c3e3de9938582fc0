#include "semirend/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "semirend/error.hpp"
#include "semirend/rng.hpp"

namespace semirend {

UncertaintyMap uncertainty_from_logits(const Grid2D& logits) {
    const std::size_t c = logits.channels();
    std::vector<double> u(logits.cell_count());
    const auto values = logits.values();
    for (std::size_t n = 0; n < u.size(); ++n) {
        const auto cell = values.subspan(n * c, c);
        if (c == 1) {
            u[n] = -std::abs(cell[0]);
        } else {
            double top1 = cell[0] >= cell[1] ? cell[0] : cell[1];
            double top2 = cell[0] >= cell[1] ? cell[1] : cell[0];
            for (std::size_t k = 2; k < c; ++k) {
                if (cell[k] > top1) {
                    top2 = top1;
                    top1 = cell[k];
                } else if (cell[k] > top2) {
                    top2 = cell[k];
                }
            }
            u[n] = -(top1 - top2);
        }
    }
    return {Grid2D(logits.height(), logits.width(), 1, std::move(u))};
}

std::vector<CellIndex> select_top_uncertain_cells(const UncertaintyMap& u, std::size_t n) {
    const Grid2D& g = u.grid;
    if (g.channels() != 1) throw InvalidInput("uncertainty map must have one channel");
    if (n > g.cell_count()) {
        throw InvalidInput("cannot select " + std::to_string(n) + " points from " +
                           std::to_string(g.cell_count()) + " cells");
    }
    const auto values = g.values();
    std::vector<std::size_t> order(g.cell_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (values[a] != values[b]) return values[a] > values[b];
                          return a < b;
                      });
    std::vector<CellIndex> cells(n);
    for (std::size_t k = 0; k < n; ++k) {
        cells[k] = {order[k] / g.width(), order[k] % g.width()};
    }
    return cells;
}

PointSet select_top_uncertain(const UncertaintyMap& u, std::size_t n) {
    const auto cells = select_top_uncertain_cells(u, n);
    PointSet points;
    points.reserve(cells.size());
    for (const CellIndex& c : cells) {
        points.push_back(cell_center(c.row, c.col, u.grid.height(), u.grid.width()));
    }
    return points;
}

void TrainSamplerConfig::validate() const {
    if (num_points == 0) throw InvalidInput("num_points must be positive");
    if (!std::isfinite(oversample_factor) || oversample_factor < 1.0) {
        throw InvalidInput("oversample_factor must be >= 1");
    }
    if (!(importance_ratio >= 0.0 && importance_ratio <= 1.0)) {
        throw InvalidInput("importance_ratio must lie in [0, 1]");
    }
}

std::size_t TrainSamplerConfig::candidate_count() const {
    return static_cast<std::size_t>(std::ceil(oversample_factor * static_cast<double>(num_points)));
}

std::size_t TrainSamplerConfig::important_count() const {
    return static_cast<std::size_t>(std::floor(importance_ratio * static_cast<double>(num_points)));
}

TrainingDraw sample_training_points_traced(const UncertaintyFn& u_eval, const TrainSamplerConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.rng_seed);
    const auto draw = [&rng] {
        const double x = rng.uniform();
        const double y = rng.uniform();
        return Point{x, y};
    };

    TrainingDraw out;
    const std::size_t keep = cfg.important_count();
    out.points.reserve(cfg.num_points);
    if (keep > 0) {
        const std::size_t m = cfg.candidate_count();
        out.candidates.reserve(m);
        std::vector<double> scores(m);
        for (std::size_t k = 0; k < m; ++k) {
            out.candidates.push_back(draw());
            scores[k] = u_eval(out.candidates.back());
        }
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (scores[a] != scores[b]) return scores[a] > scores[b];
                              return a < b;
                          });
        order.resize(keep);
        std::sort(order.begin(), order.end());
        for (std::size_t idx : order) out.points.push_back(out.candidates[idx]);
    }
    while (out.points.size() < cfg.num_points) out.points.push_back(draw());
    return out;
}

PointSet sample_training_points(const UncertaintyFn& u_eval, const TrainSamplerConfig& cfg) {
    return sample_training_points_traced(u_eval, cfg).points;
}

}  // namespace semirend
