#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "semirend/error.hpp"
#include "semirend/grid.hpp"
#include "semirend/rng.hpp"
#include "semirend/sampling.hpp"

using namespace semirend;

namespace {

UncertaintyMap map_of(std::size_t h, std::size_t w, std::vector<double> v) {
    return {Grid2D(h, w, 1, std::move(v))};
}

// Full stable sort of all cells: uncertainty descending, then row-major index.
std::vector<std::size_t> oracle_top(const std::vector<double>& u, std::size_t n) {
    std::vector<std::size_t> idx(u.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    idx.resize(n);
    return idx;
}

}  // namespace

TEST_CASE("binary uncertainty is the negated absolute logit") {
    const UncertaintyMap u = uncertainty_from_logits(Grid2D(1, 3, 1, std::vector<double>{0.0, -3.0, 3.0}));
    CHECK(u.grid.at(0, 0) == 0.0);
    CHECK(u.grid.at(0, 1) == -3.0);
    CHECK(u.grid.at(0, 2) == -3.0);
    CHECK(u.grid.max_value() <= 0.0);
}

TEST_CASE("multi-class uncertainty is the negated top-two margin") {
    const UncertaintyMap u =
        uncertainty_from_logits(Grid2D(1, 3, 2, std::vector<double>{2.0, 1.5, 1.5, 2.0, -1.0, -1.0}));
    CHECK(u.grid.at(0, 0) == -0.5);
    CHECK(u.grid.at(0, 1) == -0.5);
    CHECK(u.grid.at(0, 2) == 0.0);
    const UncertaintyMap k4 = uncertainty_from_logits(Grid2D(1, 1, 4, std::vector<double>{0.0, 5.0, 1.0, 4.5}));
    CHECK(k4.grid.at(0, 0) == -0.5);
}

TEST_CASE("|logit| and |p - 0.5| select the same cells") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> logits(64);
        for (double& z : logits) z = rng.uniform(-6, 6);
        std::vector<double> via_prob(64);
        for (std::size_t k = 0; k < 64; ++k) via_prob[k] = -std::abs(1.0 / (1.0 + std::exp(-logits[k])) - 0.5);
        const std::size_t n = 1 + rng.below(64);
        const auto a = select_top_uncertain_cells(uncertainty_from_logits(Grid2D(8, 8, 1, logits)), n);
        const auto expected = oracle_top(via_prob, n);
        std::vector<std::size_t> got;
        for (const auto& c : a) got.push_back(c.row * 8 + c.col);
        std::sort(got.begin(), got.end());
        std::vector<std::size_t> want = expected;
        std::sort(want.begin(), want.end());
        CHECK(got == want);
    }
}

TEST_CASE("top-N selection tie-breaks in row-major order") {
    const auto pts = select_top_uncertain(map_of(3, 3, std::vector<double>(9, -1.0)), 3);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0] == cell_center(0, 0, 3, 3));
    CHECK(pts[1] == cell_center(0, 1, 3, 3));
    CHECK(pts[2] == cell_center(0, 2, 3, 3));
    const auto all = select_top_uncertain(map_of(2, 3, std::vector<double>(6, 0.0)), 6);
    CHECK(all.size() == 6);
    CHECK_THROWS_AS(select_top_uncertain(map_of(2, 2, std::vector<double>(4, 0.0)), 5), InvalidInput);
    CHECK(select_top_uncertain(map_of(2, 2, std::vector<double>(4, 0.0)), 0).empty());
}

TEST_CASE("top-N selection matches a full-sort oracle") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> u(64);
        // Coarse values force plenty of ties.
        for (double& v : u) v = -static_cast<double>(rng.below(6));
        const std::size_t n = trial == 0 ? 5 : 1 + rng.below(64);
        const auto cells = select_top_uncertain_cells(map_of(8, 8, u), n);
        const auto expected = oracle_top(u, n);
        REQUIRE(cells.size() == n);
        for (std::size_t k = 0; k < n; ++k) CHECK(cells[k].row * 8 + cells[k].col == expected[k]);
        double min_sel = 1e300, max_unsel = -1e300;
        std::vector<bool> picked(64, false);
        for (const auto& c : cells) picked[c.row * 8 + c.col] = true;
        for (std::size_t k = 0; k < 64; ++k) {
            if (picked[k]) min_sel = std::min(min_sel, u[k]);
            else max_unsel = std::max(max_unsel, u[k]);
        }
        if (n < 64) CHECK(min_sel >= max_unsel);
    }
}

TEST_CASE("adding a constant leaves the selection unchanged") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> u(48), shifted(48);
        // Dyadic values and shifts keep the sums exact.
        const double c = std::round(rng.uniform(-10, 10) * 8.0) / 8.0;
        for (std::size_t k = 0; k < 48; ++k) {
            u[k] = -static_cast<double>(rng.below(1000)) / 8.0;
            shifted[k] = u[k] + c;
        }
        const std::size_t n = 1 + rng.below(48);
        CHECK(select_top_uncertain_cells(map_of(6, 8, u), n) == select_top_uncertain_cells(map_of(6, 8, shifted), n));
    }
}

TEST_CASE("sampler config validation and counts") {
    TrainSamplerConfig cfg;
    CHECK(cfg.num_points == 196);
    CHECK(cfg.oversample_factor == 3.0);
    CHECK(cfg.importance_ratio == 0.75);
    CHECK(cfg.candidate_count() == 588);
    CHECK(cfg.important_count() == 147);
    cfg.num_points = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.oversample_factor = 0.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.importance_ratio = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("beta = 0 never consults the uncertainty function") {
    TrainSamplerConfig cfg{37, 3.0, 0.0, 99};
    int calls = 0;
    const auto pts = sample_training_points([&](Point) { ++calls; return 0.0; }, cfg);
    CHECK(calls == 0);
    CHECK(pts.size() == 37);
    for (const Point& p : pts) {
        CHECK(p.x >= 0.0);
        CHECK(p.x < 1.0);
        CHECK(p.y >= 0.0);
        CHECK(p.y < 1.0);
    }
}

TEST_CASE("beta = 1 and k = 1 return the drawn candidates unchanged") {
    TrainSamplerConfig cfg{20, 1.0, 1.0, 5};
    const TrainingDraw d = sample_training_points_traced([](Point p) { return -std::abs(p.x - 0.3); }, cfg);
    CHECK(d.candidates.size() == 20);
    CHECK(d.points == d.candidates);
}

TEST_CASE("retained points are the most uncertain candidates") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TrainSamplerConfig cfg{8, 3.0, 0.75, seed};
        const UncertaintyFn u = [](Point p) { return -std::abs(p.x + 0.5 * p.y - 0.6); };
        const TrainingDraw d = sample_training_points_traced(u, cfg);
        REQUIRE(d.candidates.size() == 24);
        REQUIRE(d.points.size() == 8);
        std::vector<double> scores;
        for (const Point& p : d.candidates) scores.push_back(u(p));
        auto top = oracle_top(scores, 6);
        std::sort(top.begin(), top.end());
        for (std::size_t k = 0; k < 6; ++k) CHECK(d.points[k] == d.candidates[top[k]]);
    }
}

TEST_CASE("sampler is deterministic per seed") {
    const UncertaintyFn u = [](Point p) { return -std::abs(p.y - 0.5); };
    TrainSamplerConfig a{50, 2.5, 0.6, 42};
    CHECK(sample_training_points(u, a) == sample_training_points(u, a));
    TrainSamplerConfig b = a;
    b.rng_seed = 43;
    CHECK(sample_training_points(u, a) != sample_training_points(u, b));
}

TEST_CASE("importance sampling concentrates points near a half-plane boundary") {
    // Logit grid encoding the boundary x = 0.5.
    std::vector<double> logits(16 * 16);
    for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t j = 0; j < 16; ++j) logits[i * 16 + j] = 8.0 * ((j + 0.5) / 16.0 - 0.5);
    }
    const Grid2D g(16, 16, 1, logits);
    const UncertaintyFn u = [&](Point p) { return -std::abs(bilinear_sample(g, {p})[0][0]); };
    const double betas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> mean_dist;
    for (double beta : betas) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            for (const Point& p : sample_training_points(u, {32, 3.0, beta, seed})) {
                total += std::abs(p.x - 0.5);
                ++count;
            }
        }
        mean_dist.push_back(total / static_cast<double>(count));
    }
    for (std::size_t k = 1; k < mean_dist.size(); ++k) CHECK(mean_dist[k] <= mean_dist[k - 1]);
    CHECK(mean_dist.back() < 0.5 * mean_dist.front());
}
