#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gencs/autodiff.hpp"
#include "gencs/errors.hpp"
#include "gencs/rng.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

enum class Activation { relu, tanh, sigmoid, linear };

inline const char* activation_name(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "linear") return Activation::linear;
    throw ParameterError("unknown activation '" + s + "'");
}

/// Fully-connected network shape: layer_widths = [in, h1, ..., out] and one
/// activation per layer.
struct MlpSpec {
    std::vector<int> layer_widths;
    std::vector<Activation> activations;

    int layers() const { return static_cast<int>(activations.size()); }
    int input_width() const { return layer_widths.front(); }
    int output_width() const { return layer_widths.back(); }
};

inline void validate_spec(const MlpSpec& spec) {
    if (spec.layer_widths.size() < 2) {
        throw ParameterError("mlp spec: need at least one layer (>= 2 widths)");
    }
    for (int w : spec.layer_widths) {
        if (w <= 0) throw ParameterError("mlp spec: non-positive layer width " + std::to_string(w));
    }
    if (spec.activations.size() + 1 != spec.layer_widths.size()) {
        throw ParameterError("mlp spec: " + std::to_string(spec.layer_widths.size() - 1) +
                             " layers need " + std::to_string(spec.layer_widths.size() - 1) +
                             " activations, got " + std::to_string(spec.activations.size()));
    }
}

/// All weights and biases of an MLP flattened in layer order:
/// W1 (row-major), b1, W2, b2, ...
struct ParamVec {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const ParamVec& o) const { return values == o.values; }
};

inline std::size_t param_count(const MlpSpec& spec) {
    std::size_t n = 0;
    for (int l = 0; l < spec.layers(); ++l) {
        n += static_cast<std::size_t>(spec.layer_widths[l + 1]) * spec.layer_widths[l] +
             spec.layer_widths[l + 1];
    }
    return n;
}

/// He initialization for relu layers, 1/fan_in variance otherwise; biases zero.
inline ParamVec init_params(const MlpSpec& spec, RngStream& rng) {
    validate_spec(spec);
    ParamVec p;
    p.values.reserve(param_count(spec));
    for (int l = 0; l < spec.layers(); ++l) {
        const int fan_in = spec.layer_widths[l];
        const int fan_out = spec.layer_widths[l + 1];
        const double gain = spec.activations[l] == Activation::relu ? 2.0 : 1.0;
        const double std = std::sqrt(gain / fan_in);
        for (int i = 0; i < fan_out * fan_in; ++i) p.values.push_back(rng.normal(0.0, std));
        for (int i = 0; i < fan_out; ++i) p.values.push_back(0.0);
    }
    return p;
}

namespace detail {

inline void apply_activation(Activation a, Tensor& h) {
    switch (a) {
    case Activation::relu:
        for (std::size_t i = 0; i < h.numel(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < h.numel(); ++i) h[i] = std::tanh(h[i]);
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < h.numel(); ++i) h[i] = 1.0 / (1.0 + std::exp(-h[i]));
        break;
    case Activation::linear:
        break;
    }
}

} // namespace detail

/// Plain forward pass (no tape).
inline Tensor mlp_forward(const MlpSpec& spec, const ParamVec& params, const Tensor& input) {
    require_vector(input, "mlp_forward");
    if (static_cast<int>(input.numel()) != spec.input_width()) {
        throw DimensionError("mlp_forward: input width " + std::to_string(input.numel()) +
                             " != spec width " + std::to_string(spec.input_width()));
    }
    if (params.size() != param_count(spec)) {
        throw ContractError("mlp_forward: param vector size mismatch");
    }
    Tensor h = input;
    std::size_t off = 0;
    for (int l = 0; l < spec.layers(); ++l) {
        const std::size_t rows = spec.layer_widths[l + 1];
        const std::size_t cols = spec.layer_widths[l];
        Tensor z({rows});
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            const double* w = params.values.data() + off + i * cols;
            for (std::size_t j = 0; j < cols; ++j) acc += w[j] * h[j];
            z[i] = acc;
        }
        off += rows * cols;
        for (std::size_t i = 0; i < rows; ++i) z[i] += params.values[off + i];
        off += rows;
        detail::apply_activation(spec.activations[l], z);
        h = std::move(z);
    }
    require_finite(h, "mlp_forward");
    return h;
}

/// Per-layer weight/bias node ids on a tape (leaves when the pass must produce
/// parameter gradients, constants otherwise).
struct MlpTapeParams {
    std::vector<Tape::NodeId> weights;
    std::vector<Tape::NodeId> biases;
};

inline MlpTapeParams tape_params(Tape& tape, const MlpSpec& spec, const ParamVec& params,
                                 bool as_leaves) {
    if (params.size() != param_count(spec)) {
        throw ContractError("tape_params: param vector size mismatch");
    }
    MlpTapeParams out;
    std::size_t off = 0;
    for (int l = 0; l < spec.layers(); ++l) {
        const std::size_t rows = spec.layer_widths[l + 1];
        const std::size_t cols = spec.layer_widths[l];
        Tensor W({rows, cols});
        for (std::size_t i = 0; i < rows * cols; ++i) W[i] = params.values[off + i];
        off += rows * cols;
        Tensor b({rows});
        for (std::size_t i = 0; i < rows; ++i) b[i] = params.values[off + i];
        off += rows;
        out.weights.push_back(as_leaves ? tape.leaf(std::move(W)) : tape.constant(std::move(W)));
        out.biases.push_back(as_leaves ? tape.leaf(std::move(b)) : tape.constant(std::move(b)));
    }
    return out;
}

inline Tape::NodeId mlp_forward_tape(Tape& tape, const MlpSpec& spec, const MlpTapeParams& p,
                                     Tape::NodeId input) {
    Tape::NodeId h = input;
    for (int l = 0; l < spec.layers(); ++l) {
        h = tape.add(tape.matvec(p.weights[l], h), p.biases[l]);
        switch (spec.activations[l]) {
        case Activation::relu: h = tape.relu(h); break;
        case Activation::tanh: h = tape.tanh_fn(h); break;
        case Activation::sigmoid: h = tape.sigmoid(h); break;
        case Activation::linear: break;
        }
    }
    return h;
}

/// Flatten per-layer tape gradients back into ParamVec layout.
inline ParamVec collect_param_grads(const Tape& tape, const MlpSpec& spec, const MlpTapeParams& p,
                                    const std::unordered_map<Tape::NodeId, Tensor>& grads) {
    ParamVec g;
    g.values.reserve(param_count(spec));
    for (int l = 0; l < spec.layers(); ++l) {
        const Tensor& gw = grads.at(p.weights[l]);
        g.values.insert(g.values.end(), gw.data().begin(), gw.data().end());
        const Tensor& gb = grads.at(p.biases[l]);
        g.values.insert(g.values.end(), gb.data().begin(), gb.data().end());
    }
    return g;
}

inline void axpy_params(ParamVec& params, const ParamVec& grad, double step) {
    if (params.size() != grad.size()) throw ContractError("axpy_params: size mismatch");
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        params.values[i] += step * grad.values[i];
    }
}

/// Generator network G(z) or, with cond_dim = m > 0, G(z, y) with y
/// concatenated to z at the input layer.
struct GeneratorNet {
    MlpSpec spec;
    ParamVec params;
    int latent_dim = 0;
    int cond_dim = 0;

    int output_dim() const { return spec.output_width(); }

    void validate() const {
        validate_spec(spec);
        if (latent_dim <= 0) throw ParameterError("generator: latent_dim must be positive");
        if (cond_dim < 0) throw ParameterError("generator: cond_dim must be >= 0");
        if (spec.input_width() != latent_dim + cond_dim) {
            throw ParameterError("generator: input width " + std::to_string(spec.input_width()) +
                                 " != latent_dim + cond_dim = " +
                                 std::to_string(latent_dim + cond_dim));
        }
        if (params.size() != param_count(spec)) {
            throw ContractError("generator: param count mismatch");
        }
    }

    Tensor input_for(const Tensor& z, const Tensor* y) const {
        if (static_cast<int>(z.numel()) != latent_dim) {
            throw DimensionError("generator: z has length " + std::to_string(z.numel()) +
                                 ", expected " + std::to_string(latent_dim));
        }
        if (cond_dim == 0) {
            if (y != nullptr) throw ContractError("generator: conditioning passed to marginal net");
            return z;
        }
        if (y == nullptr) throw ContractError("generator: conditional net needs a measurement");
        if (static_cast<int>(y->numel()) != cond_dim) {
            throw DimensionError("generator: y has length " + std::to_string(y->numel()) +
                                 ", expected " + std::to_string(cond_dim));
        }
        return concat(z, *y);
    }

    Tensor forward(const Tensor& z, const Tensor* y = nullptr) const {
        return mlp_forward(spec, params, input_for(z, y));
    }

    /// z (and optionally y) already live on the tape; conditioning is
    /// concatenated on-tape so gradients flow to both.
    Tape::NodeId forward_tape(Tape& tape, const MlpTapeParams& p, Tape::NodeId z,
                              std::optional<Tape::NodeId> y = std::nullopt) const {
        if (cond_dim == 0) {
            if (y.has_value()) throw ContractError("generator: conditioning passed to marginal net");
            return mlp_forward_tape(tape, spec, p, z);
        }
        if (!y.has_value()) throw ContractError("generator: conditional net needs a measurement");
        return mlp_forward_tape(tape, spec, p, tape.concat(z, *y));
    }
};

enum class DiscShape { scalar, autoencoder };

/// Discriminator, either a scalar-probability head (sigmoid output in (0,1))
/// or an autoencoder that reconstructs its d-dimensional input.
struct DiscriminatorNet {
    MlpSpec spec;
    ParamVec params;
    DiscShape shape = DiscShape::scalar;
    int signal_dim = 0;
    int cond_dim = 0;

    void validate() const {
        validate_spec(spec);
        if (signal_dim <= 0) throw ParameterError("discriminator: signal_dim must be positive");
        if (cond_dim < 0) throw ParameterError("discriminator: cond_dim must be >= 0");
        if (spec.input_width() != signal_dim + cond_dim) {
            throw ParameterError("discriminator: input width " +
                                 std::to_string(spec.input_width()) + " != signal_dim + cond_dim");
        }
        if (shape == DiscShape::scalar) {
            if (spec.output_width() != 1 || spec.activations.back() != Activation::sigmoid) {
                throw ParameterError("discriminator: scalar shape needs width-1 sigmoid output");
            }
        } else if (spec.output_width() != signal_dim) {
            throw ParameterError("discriminator: autoencoder output width " +
                                 std::to_string(spec.output_width()) + " != signal_dim " +
                                 std::to_string(signal_dim));
        }
        if (params.size() != param_count(spec)) {
            throw ContractError("discriminator: param count mismatch");
        }
    }

    Tensor input_for(const Tensor& x, const Tensor* y) const {
        if (static_cast<int>(x.numel()) != signal_dim) {
            throw DimensionError("discriminator: input has length " + std::to_string(x.numel()) +
                                 ", expected " + std::to_string(signal_dim));
        }
        if (cond_dim == 0) {
            if (y != nullptr) throw ContractError("discriminator: conditioning passed to marginal net");
            return x;
        }
        if (y == nullptr) throw ContractError("discriminator: conditional net needs a measurement");
        if (static_cast<int>(y->numel()) != cond_dim) {
            throw DimensionError("discriminator: y has length " + std::to_string(y->numel()) +
                                 ", expected " + std::to_string(cond_dim));
        }
        return concat(x, *y);
    }

    Tensor forward(const Tensor& x, const Tensor* y = nullptr) const {
        return mlp_forward(spec, params, input_for(x, y));
    }

    Tape::NodeId forward_tape(Tape& tape, const MlpTapeParams& p, Tape::NodeId x,
                              std::optional<Tape::NodeId> y = std::nullopt) const {
        if (cond_dim == 0) {
            if (y.has_value()) throw ContractError("discriminator: conditioning passed to marginal net");
            return mlp_forward_tape(tape, spec, p, x);
        }
        if (!y.has_value()) throw ContractError("discriminator: conditional net needs a measurement");
        return mlp_forward_tape(tape, spec, p, tape.concat(x, *y));
    }
};

/// Convenience builders with the default activation policy: relu hidden
/// layers; tanh (or linear) generator output; sigmoid scalar discriminator.
inline GeneratorNet make_generator(int latent_dim, int cond_dim, std::vector<int> hidden,
                                   int signal_dim, Activation output_activation, RngStream& rng) {
    GeneratorNet g;
    g.latent_dim = latent_dim;
    g.cond_dim = cond_dim;
    g.spec.layer_widths.push_back(latent_dim + cond_dim);
    for (int h : hidden) g.spec.layer_widths.push_back(h);
    g.spec.layer_widths.push_back(signal_dim);
    for (std::size_t l = 0; l + 1 < g.spec.layer_widths.size(); ++l) {
        g.spec.activations.push_back(l + 2 == g.spec.layer_widths.size() ? output_activation
                                                                         : Activation::relu);
    }
    g.params = init_params(g.spec, rng);
    g.validate();
    return g;
}

inline DiscriminatorNet make_discriminator(int signal_dim, int cond_dim, std::vector<int> hidden,
                                           DiscShape shape, RngStream& rng) {
    DiscriminatorNet d;
    d.signal_dim = signal_dim;
    d.cond_dim = cond_dim;
    d.shape = shape;
    d.spec.layer_widths.push_back(signal_dim + cond_dim);
    for (int h : hidden) d.spec.layer_widths.push_back(h);
    d.spec.layer_widths.push_back(shape == DiscShape::scalar ? 1 : signal_dim);
    for (std::size_t l = 0; l + 1 < d.spec.layer_widths.size(); ++l) {
        const bool last = l + 2 == d.spec.layer_widths.size();
        if (!last) {
            d.spec.activations.push_back(Activation::relu);
        } else {
            d.spec.activations.push_back(shape == DiscShape::scalar ? Activation::sigmoid
                                                                    : Activation::linear);
        }
    }
    d.params = init_params(d.spec, rng);
    d.validate();
    return d;
}

} // namespace gencs
