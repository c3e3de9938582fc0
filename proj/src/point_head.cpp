#include "semirend/point_head.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "semirend/error.hpp"
#include "semirend/rng.hpp"

namespace semirend {

std::size_t PointHeadLayout::layer_inputs(std::size_t layer) const {
    if (layer == 0) return input_dim();
    return hidden.at(layer - 1) + (reconcat_coarse ? coarse_dim : 0);
}

std::size_t PointHeadLayout::layer_outputs(std::size_t layer) const {
    return layer < hidden.size() ? hidden[layer] : 1;
}

PointHeadParams::PointHeadParams(PointHeadLayout layout) : layout_(std::move(layout)) {
    if (layout_.input_dim() == 0) throw InvalidInput("point head needs a non-empty input");
    for (std::size_t width : layout_.hidden) {
        if (width == 0) throw InvalidInput("hidden layer width must be positive");
    }
    layers_.resize(layout_.layer_count());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        DenseLayer& layer = layers_[l];
        layer.inputs = layout_.layer_inputs(l);
        layer.outputs = layout_.layer_outputs(l);
        layer.weights.assign(layer.inputs * layer.outputs, 0.0);
        layer.bias.assign(layer.outputs, 0.0);
    }
}

PointHeadParams PointHeadParams::initialize(const PointHeadLayout& layout, std::uint64_t seed) {
    PointHeadParams params(layout);
    Rng rng(seed);
    for (DenseLayer& layer : params.layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    }
    return params;
}

std::size_t PointHeadParams::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& layer : layers_) n += layer.weights.size() + layer.bias.size();
    return n;
}

std::vector<double> PointHeadParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const DenseLayer& layer : layers_) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void PointHeadParams::assign_flat(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw InvalidInput("flat parameter vector has wrong size");
    std::size_t k = 0;
    for (DenseLayer& layer : layers_) {
        for (double& w : layer.weights) w = flat[k++];
        for (double& b : layer.bias) b = flat[k++];
    }
}

void PointHeadParams::validate() const {
    if (layers_.size() != layout_.layer_count()) throw InvalidInput("layer count does not match layout");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        if (layer.inputs != layout_.layer_inputs(l) || layer.outputs != layout_.layer_outputs(l) ||
            layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
            throw InvalidInput("layer " + std::to_string(l) + " has incompatible dimensions");
        }
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
            !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
            throw InvalidInput("layer " + std::to_string(l) + " has non-finite parameters");
        }
    }
}

namespace {

// Activations recorded for backprop: per layer, its input vector and its
// pre-activation output.
struct ForwardTrace {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> pre;
};

void check_dims(const PointHeadLayout& layout, std::size_t coarse, std::size_t fine) {
    if (coarse != layout.coarse_dim || fine != layout.fine_dim) {
        throw InvalidInput("point feature has dims (" + std::to_string(coarse) + ", " + std::to_string(fine) +
                           "), head expects (" + std::to_string(layout.coarse_dim) + ", " +
                           std::to_string(layout.fine_dim) + ")");
    }
}

double run_forward(const PointHeadParams& params, std::span<const double> coarse, std::span<const double> fine,
                   ForwardTrace* trace) {
    const PointHeadLayout& layout = params.layout();
    check_dims(layout, coarse.size(), fine.size());

    std::vector<double> x;
    x.reserve(layout.input_dim());
    x.insert(x.end(), coarse.begin(), coarse.end());
    x.insert(x.end(), fine.begin(), fine.end());

    const auto& layers = params.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        std::vector<double> z(layer.bias);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double* w = layer.weights.data() + o * layer.inputs;
            double acc = 0.0;
            for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * x[i];
            z[o] += acc;
        }
        if (trace) {
            trace->inputs.push_back(x);
            trace->pre.push_back(z);
        }
        if (l + 1 == layers.size()) return z[0];

        x.assign(z.size(), 0.0);
        for (std::size_t o = 0; o < z.size(); ++o) x[o] = z[o] > 0.0 ? z[o] : 0.0;
        if (layout.reconcat_coarse) x.insert(x.end(), coarse.begin(), coarse.end());
    }
    return 0.0;  // unreachable: the output layer always returns above
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<DenseLayer> zero_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> out(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        out[l].inputs = layers[l].inputs;
        out[l].outputs = layers[l].outputs;
        out[l].weights.assign(layers[l].weights.size(), 0.0);
        out[l].bias.assign(layers[l].bias.size(), 0.0);
    }
    return out;
}

}  // namespace

double forward(const PointHeadParams& params, std::span<const double> coarse, std::span<const double> fine) {
    return run_forward(params, coarse, fine, nullptr);
}

double forward(const PointHeadParams& params, const PointFeature& feature) {
    return forward(params, feature.coarse, feature.fine);
}

double bce_with_logits(double logit, int label) {
    return std::max(logit, 0.0) - logit * static_cast<double>(label) + std::log1p(std::exp(-std::abs(logit)));
}

double mean_loss(const PointHeadParams& params, std::span<const LabeledPoint> batch) {
    if (batch.empty()) throw InvalidInput("loss over an empty batch");
    double total = 0.0;
    for (const LabeledPoint& ex : batch) total += bce_with_logits(forward(params, ex.feature), ex.label);
    return total / static_cast<double>(batch.size());
}

LossAndGrad loss_and_grad(const PointHeadParams& params, std::span<const LabeledPoint> batch) {
    if (batch.empty()) throw InvalidInput("loss over an empty batch");
    const auto& layers = params.layers();
    const std::size_t coarse_dim = params.layout().coarse_dim;
    const double scale = 1.0 / static_cast<double>(batch.size());

    LossAndGrad out;
    out.grads = zero_like(layers);
    ForwardTrace trace;
    for (const LabeledPoint& ex : batch) {
        if (ex.label != 0 && ex.label != 1) throw InvalidInput("labels must be 0 or 1");
        trace.inputs.clear();
        trace.pre.clear();
        const double logit = run_forward(params, ex.feature.coarse, ex.feature.fine, &trace);
        out.loss += bce_with_logits(logit, ex.label) * scale;

        std::vector<double> delta{(sigmoid(logit) - static_cast<double>(ex.label)) * scale};
        for (std::size_t l = layers.size(); l-- > 0;) {
            const DenseLayer& layer = layers[l];
            DenseLayer& g = out.grads[l];
            const std::vector<double>& x = trace.inputs[l];
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                g.bias[o] += delta[o];
                double* gw = g.weights.data() + o * layer.inputs;
                for (std::size_t i = 0; i < layer.inputs; ++i) gw[i] += delta[o] * x[i];
            }
            if (l == 0) break;

            // Back through the weights into the previous activation; the
            // re-concatenated coarse tail carries no parameters.
            const std::size_t prev = layer.inputs - (params.layout().reconcat_coarse ? coarse_dim : 0);
            const std::vector<double>& z_prev = trace.pre[l - 1];
            std::vector<double> next(prev, 0.0);
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                const double* w = layer.weights.data() + o * layer.inputs;
                for (std::size_t i = 0; i < prev; ++i) next[i] += w[i] * delta[o];
            }
            for (std::size_t i = 0; i < prev; ++i) {
                if (z_prev[i] <= 0.0) next[i] = 0.0;
            }
            delta = std::move(next);
        }
    }
    return out;
}

void TrainConfig::validate() const {
    if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
        throw InvalidInput("learning_rate must be a non-negative finite number");
    }
    if (batch_size == 0) throw InvalidInput("batch_size must be positive");
}

PointHeadParams train(PointHeadParams params, std::span<const LabeledPoint> dataset, const TrainConfig& cfg,
                      const TrainObserver& observer) {
    cfg.validate();
    params.validate();
    if (dataset.empty()) throw InvalidInput("training needs at least one example");

    Rng rng(cfg.rng_seed);
    std::vector<LabeledPoint> batch(cfg.batch_size);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (LabeledPoint& slot : batch) slot = dataset[rng.below(dataset.size())];
        LossAndGrad lg = loss_and_grad(params, batch);
        if (!std::isfinite(lg.loss)) throw TrainingDiverged(step);
        auto& layers = params.layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (std::size_t k = 0; k < layers[l].weights.size(); ++k) {
                layers[l].weights[k] -= cfg.learning_rate * lg.grads[l].weights[k];
            }
            for (std::size_t k = 0; k < layers[l].bias.size(); ++k) {
                layers[l].bias[k] -= cfg.learning_rate * lg.grads[l].bias[k];
            }
        }
        if (observer) observer(step, lg.loss);
    }
    return params;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::array<char, 4> kHeadMagic{'S', 'R', 'P', 'H'};
constexpr std::uint32_t kHeadVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes;
    in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    if (!in) throw ParseError("point head", "unexpected end of file");
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace

void save_point_head(const PointHeadParams& params, std::ostream& out) {
    const PointHeadLayout& layout = params.layout();
    out.write(kHeadMagic.data(), kHeadMagic.size());
    put_le<std::uint32_t>(out, kHeadVersion);
    put_le<std::uint64_t>(out, layout.coarse_dim);
    put_le<std::uint64_t>(out, layout.fine_dim);
    put_le<std::uint8_t>(out, layout.reconcat_coarse ? 1 : 0);
    put_le<std::uint64_t>(out, layout.hidden.size());
    for (std::size_t width : layout.hidden) put_le<std::uint64_t>(out, width);
    for (const DenseLayer& layer : params.layers()) {
        for (double w : layer.weights) put_f64(out, w);
        for (double b : layer.bias) put_f64(out, b);
    }
    if (!out) throw Error("failed to write point head");
}

PointHeadParams load_point_head(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kHeadMagic) throw ParseError("point head", "bad magic, expected SRPH");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kHeadVersion) {
        throw ParseError("point head", "unsupported version " + std::to_string(version));
    }
    PointHeadLayout layout;
    layout.coarse_dim = get_le<std::uint64_t>(in);
    layout.fine_dim = get_le<std::uint64_t>(in);
    layout.reconcat_coarse = get_le<std::uint8_t>(in) != 0;
    const auto hidden = get_le<std::uint64_t>(in);
    if (hidden > 1024) throw ParseError("point head", "implausible hidden layer count");
    layout.hidden.resize(hidden);
    for (auto& width : layout.hidden) {
        width = get_le<std::uint64_t>(in);
        if (width == 0 || width > (1u << 20)) throw ParseError("point head", "implausible layer width");
    }
    if (layout.coarse_dim > (1u << 20) || layout.fine_dim > (1u << 20)) {
        throw ParseError("point head", "implausible input dimensions");
    }
    PointHeadParams params(layout);
    for (DenseLayer& layer : params.layers()) {
        for (double& w : layer.weights) w = get_f64(in);
        for (double& b : layer.bias) b = get_f64(in);
    }
    params.validate();
    return params;
}

void save_point_head(const PointHeadParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    save_point_head(params, out);
}

PointHeadParams load_point_head(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return load_point_head(in);
}

}  // namespace semirend
