#include "semirend/pipeline.hpp"

#include <cmath>

#include "semirend/error.hpp"
#include "semirend/rng.hpp"

namespace semirend {

int label_at(const DenseMask& gt, Point p) {
    const CellIndex c = nearest_cell(p, gt.height, gt.width);
    return gt.at(c.row, c.col) ? 1 : 0;
}

PointFeature point_feature(const Grid2D& coarse, const Grid2D& features, Point p) {
    PointFeature f;
    f.coarse.resize(coarse.channels());
    f.fine.resize(features.channels());
    bilinear_sample_into(coarse, p, f.coarse);
    bilinear_sample_into(features, p, f.fine);
    return f;
}

std::vector<LabeledPoint> sample_labeled_points(const Grid2D& coarse, const Grid2D& features, const DenseMask& gt,
                                                const TrainSamplerConfig& cfg) {
    if (coarse.channels() != 1) throw InvalidInput("coarse logits must have one channel");
    if (gt.height == 0 || gt.width == 0) throw InvalidInput("ground-truth mask is empty");
    double value = 0.0;
    const UncertaintyFn u = [&](Point p) {
        bilinear_sample_into(coarse, p, std::span<double>(&value, 1));
        return -std::abs(value);
    };
    const PointSet points = sample_training_points(u, cfg);
    std::vector<LabeledPoint> out;
    out.reserve(points.size());
    for (const Point& p : points) out.push_back({point_feature(coarse, features, p), label_at(gt, p)});
    return out;
}

std::vector<LabeledPoint> trajectory_points(const Grid2D& coarse, const Grid2D& features, const DenseMask& gt,
                                            const PointHeadParams& head, const RenderConfig& cfg) {
    RenderTrace trace;
    trace.record_inputs = true;
    refine(coarse, features, head, cfg, &trace);
    std::vector<LabeledPoint> out;
    out.reserve(trace.inputs.size());
    for (std::size_t k = 0; k < trace.inputs.size(); ++k) {
        out.push_back({std::move(trace.inputs[k]), label_at(gt, trace.input_points[k])});
    }
    return out;
}

namespace {

std::vector<LabeledPoint> sample_all(std::span<const TrainingInstance> instances, const HeadTrainingConfig& cfg,
                                     std::uint64_t stream) {
    std::vector<LabeledPoint> out;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const TrainingInstance& inst = instances[k];
        TrainSamplerConfig sampler{cfg.points_per_instance, cfg.oversample_factor, cfg.importance_ratio,
                                   mix_seed(cfg.rng_seed ^ stream) ^ k};
        auto points = sample_labeled_points(*inst.coarse, *inst.features, *inst.gt, sampler);
        out.insert(out.end(), std::make_move_iterator(points.begin()), std::make_move_iterator(points.end()));
    }
    return out;
}

}  // namespace

HeadTrainingResult train_point_head(std::span<const TrainingInstance> instances, const HeadTrainingConfig& cfg,
                                    const TrainObserver& observer) {
    for (const TrainingInstance& inst : instances) {
        if (!inst.coarse || !inst.features || !inst.gt) throw InvalidInput("training instance is incomplete");
    }
    cfg.train.validate();
    HeadTrainingResult result{PointHeadParams::initialize(cfg.layout, cfg.rng_seed), {}, 0.0, 0.0, 0};
    std::vector<LabeledPoint> data = sample_all(instances, cfg, 0x7261696eULL);
    const std::vector<LabeledPoint> probe = sample_all(instances, cfg, 0x70726f62ULL);
    if (data.empty() || cfg.train.steps == 0) {
        result.training_points = data.size();
        if (!probe.empty()) result.initial_probe_loss = result.final_probe_loss = mean_loss(result.head, probe);
        return result;
    }
    if (!probe.empty()) result.initial_probe_loss = mean_loss(result.head, probe);

    std::size_t offset = 0;
    const TrainObserver record = [&](std::size_t step, double loss) {
        result.losses.push_back(loss);
        if (observer) observer(offset + step, loss);
    };
    for (std::size_t round = 0; round <= cfg.trajectory_rounds; ++round) {
        if (round > 0) {
            for (const TrainingInstance& inst : instances) {
                auto more = trajectory_points(*inst.coarse, *inst.features, *inst.gt, result.head, cfg.render);
                data.insert(data.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
            }
        }
        TrainConfig tc = cfg.train;
        tc.rng_seed = mix_seed(cfg.train.rng_seed) ^ round;
        result.head = train(std::move(result.head), data, tc, record);
        offset += tc.steps;
    }
    result.training_points = data.size();
    if (!probe.empty()) result.final_probe_loss = mean_loss(result.head, probe);
    return result;
}

}  // namespace semirend
