#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace semirend {

// Per-point input: the coarse prediction and the fine features, each sampled
// bilinearly at the same point.
struct PointFeature {
    std::vector<double> coarse;
    std::vector<double> fine;
};

struct LabeledPoint {
    PointFeature feature;
    int label = 0;  // 0 or 1
};

// Shape of the point head. Layer 0 sees [coarse, fine]; when
// `reconcat_coarse` is set every later layer sees [previous activation, coarse].
struct PointHeadLayout {
    std::size_t coarse_dim = 1;
    std::size_t fine_dim = 3;
    std::vector<std::size_t> hidden = {64, 64, 64};
    bool reconcat_coarse = true;

    std::size_t input_dim() const { return coarse_dim + fine_dim; }
    std::size_t layer_count() const { return hidden.size() + 1; }
    std::size_t layer_inputs(std::size_t layer) const;
    std::size_t layer_outputs(std::size_t layer) const;

    friend bool operator==(const PointHeadLayout&, const PointHeadLayout&) = default;
};

// Fully connected layer, weights row-major (outputs x inputs).
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Weights of the point-labeling MLP: ReLU on hidden layers, identity output.
class PointHeadParams {
public:
    // All-zero parameters.
    explicit PointHeadParams(PointHeadLayout layout);

    // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    static PointHeadParams initialize(const PointHeadLayout& layout, std::uint64_t seed);

    const PointHeadLayout& layout() const noexcept { return layout_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    std::size_t parameter_count() const;
    // Flat view in layer order, weights then bias per layer.
    std::vector<double> flatten() const;
    void assign_flat(std::span<const double> flat);

    // Throws InvalidInput on incompatible layer shapes or non-finite values.
    void validate() const;

    friend bool operator==(const PointHeadParams&, const PointHeadParams&) = default;

private:
    PointHeadLayout layout_;
    std::vector<DenseLayer> layers_;
};

double forward(const PointHeadParams& params, const PointFeature& feature);

// Convenience overload with the coarse/fine split already concatenated.
double forward(const PointHeadParams& params, std::span<const double> coarse, std::span<const double> fine);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<DenseLayer> grads;  // same shapes as the parameters
};

// Mean binary cross-entropy with logits and its exact gradient.
LossAndGrad loss_and_grad(const PointHeadParams& params, std::span<const LabeledPoint> batch);

// Mean loss only, no gradient.
double mean_loss(const PointHeadParams& params, std::span<const LabeledPoint> batch);

// Numerically stable BCE-with-logits for one example.
double bce_with_logits(double logit, int label);

struct TrainConfig {
    double learning_rate = 0.00025;
    std::size_t batch_size = 2;
    std::size_t steps = 5000;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Called after each step with (step index, batch loss).
using TrainObserver = std::function<void(std::size_t, double)>;

// Plain SGD on seeded mini-batches drawn with replacement from `dataset`.
// Throws TrainingDiverged when a batch loss is non-finite.
PointHeadParams train(PointHeadParams params, std::span<const LabeledPoint> dataset, const TrainConfig& cfg,
                      const TrainObserver& observer = {});

// Versioned little-endian binary format, see docs/formats.md.
void save_point_head(const PointHeadParams& params, std::ostream& out);
PointHeadParams load_point_head(std::istream& in);
void save_point_head(const PointHeadParams& params, const std::string& path);
PointHeadParams load_point_head(const std::string& path);

}  // namespace semirend
