#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fae/linalg.hpp"

namespace fae {

enum class Activation { Identity, Sigmoid, Softplus };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softplus: return "softplus";
    }
    return "identity";
}

inline Activation parse_activation(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "softplus") return Activation::Softplus;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

// Stable for |z| up to ~700: sigmoid via exp of a negative argument,
// softplus via max(z,0) + log1p(exp(-|z|)).
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double activate(Activation a, double z) {
    switch (a) {
        case Activation::Identity: return z;
        case Activation::Sigmoid: return sigmoid(z);
        case Activation::Softplus: return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    }
    return z;
}

/// d activation / dz at preactivation z.
inline double activate_derivative(Activation a, double z) {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Sigmoid: {
            const double s = sigmoid(z);
            return s * (1.0 - s);
        }
        case Activation::Softplus: return sigmoid(z);
    }
    return 1.0;
}

struct DenseLayer {
    Matrix weight;   // out x in
    Vector bias;     // empty when has_bias is false
    bool has_bias = true;
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
};

using LayerStack = std::vector<DenseLayer>;

/// Weights drawn from N(0, init_sd), biases start at zero.
inline DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, bool with_bias,
                             std::mt19937_64& rng, double init_sd) {
    DenseLayer layer;
    layer.weight = Matrix(out, in);
    layer.has_bias = with_bias;
    layer.activation = act;
    std::normal_distribution<double> gauss(0.0, init_sd);
    for (std::size_t i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = gauss(rng);
    if (with_bias) layer.bias.assign(out, 0.0);
    return layer;
}

/// Raised when a forward pass produces a non-finite value; names the layer.
class EvaluationError : public std::runtime_error {
public:
    explicit EvaluationError(const std::string& msg) : std::runtime_error(msg) {}
};

inline Vector dense_forward(const DenseLayer& layer, const Vector& input) {
    if (input.size() != layer.in_dim())
        throw std::invalid_argument("dense_forward: input length " + std::to_string(input.size()) +
                                    " != layer in-dimension " + std::to_string(layer.in_dim()));
    Vector out = matvec(layer.weight, input);
    if (layer.has_bias)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += layer.bias[i];
    for (double& v : out) v = activate(layer.activation, v);
    return out;
}

/// Record of one forward pass through a layer stack: per-layer inputs and
/// preactivations, enough to replay the backward pass.
struct ChainTape {
    std::vector<Vector> inputs;
    std::vector<Vector> preacts;
    Vector output;
    bool recorded = false;
};

inline Vector chain_forward(const LayerStack& net, const Vector& x, ChainTape* tape = nullptr) {
    if (tape) {
        tape->inputs.assign(net.size(), {});
        tape->preacts.assign(net.size(), {});
        tape->recorded = false;
    }
    Vector cur = x;
    for (std::size_t l = 0; l < net.size(); ++l) {
        const DenseLayer& layer = net[l];
        if (cur.size() != layer.in_dim())
            throw std::invalid_argument("chain_forward: layer " + std::to_string(l) +
                                        " expects input of length " + std::to_string(layer.in_dim()));
        Vector z = matvec(layer.weight, cur);
        if (layer.has_bias)
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
        if (tape) tape->inputs[l] = std::move(cur);
        Vector a(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            a[i] = activate(layer.activation, z[i]);
            if (!std::isfinite(a[i]))
                throw EvaluationError("chain_forward: non-finite output in layer " + std::to_string(l));
        }
        if (tape) tape->preacts[l] = std::move(z);
        cur = std::move(a);
    }
    if (tape) {
        tape->output = cur;
        tape->recorded = true;
    }
    return cur;
}

struct LayerGrads {
    Matrix weight;
    Vector bias;
};

struct ChainGrads {
    std::vector<LayerGrads> layers;
    Vector input;  // dLoss/dx of the stack input
};

inline ChainGrads make_zero_grads(const LayerStack& net) {
    ChainGrads g;
    g.layers.resize(net.size());
    for (std::size_t l = 0; l < net.size(); ++l) {
        g.layers[l].weight = Matrix(net[l].out_dim(), net[l].in_dim(), 0.0);
        if (net[l].has_bias) g.layers[l].bias.assign(net[l].out_dim(), 0.0);
    }
    return g;
}

/// Replays the recorded forward pass backwards, accumulating parameter
/// gradients into `acc` (+=). `output_grad` is dLoss/d(stack output).
inline void chain_backward_accumulate(const LayerStack& net, const ChainTape& tape,
                                      Vector output_grad, ChainGrads& acc) {
    if (!tape.recorded) throw std::logic_error("chain_backward: no forward pass recorded on tape");
    if (output_grad.size() != tape.output.size())
        throw std::invalid_argument("chain_backward: output gradient has wrong length");
    Vector delta = std::move(output_grad);
    for (std::size_t li = net.size(); li-- > 0;) {
        const DenseLayer& layer = net[li];
        const Vector& z = tape.preacts[li];
        const Vector& in = tape.inputs[li];
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] *= activate_derivative(layer.activation, z[i]);
        LayerGrads& lg = acc.layers[li];
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            const double di = delta[i];
            if (layer.has_bias) lg.bias[i] += di;
            if (di == 0.0) continue;
            double* wrow = lg.weight.row(i);
            for (std::size_t j = 0; j < layer.in_dim(); ++j) wrow[j] += di * in[j];
        }
        delta = matvec_t(layer.weight, delta);
    }
    acc.input = std::move(delta);
}

/// One-shot convenience: gradients of a single forward pass, scaled by
/// `seed` (dL/dL of the downstream scalar).
inline ChainGrads chain_backward(const LayerStack& net, const ChainTape& tape,
                                 const Vector& output_grad, double seed = 1.0) {
    ChainGrads acc = make_zero_grads(net);
    Vector g = output_grad;
    for (double& v : g) v *= seed;
    chain_backward_accumulate(net, tape, std::move(g), acc);
    return acc;
}

// Canonical flat parameter order: per layer, weight entries row-major,
// then bias. Optimizers, serialization and gradient checks all use it.
inline std::size_t param_count(const LayerStack& net) {
    std::size_t n = 0;
    for (const DenseLayer& l : net) n += l.weight.size() + l.bias.size();
    return n;
}

inline std::vector<double*> param_pointers(LayerStack& net) {
    std::vector<double*> p;
    p.reserve(param_count(net));
    for (DenseLayer& l : net) {
        for (std::size_t i = 0; i < l.weight.size(); ++i) p.push_back(l.weight.data() + i);
        for (std::size_t i = 0; i < l.bias.size(); ++i) p.push_back(l.bias.data() + i);
    }
    return p;
}

inline Vector flatten_grads(const ChainGrads& grads) {
    Vector g;
    for (const LayerGrads& lg : grads.layers) {
        g.insert(g.end(), lg.weight.storage().begin(), lg.weight.storage().end());
        g.insert(g.end(), lg.bias.begin(), lg.bias.end());
    }
    return g;
}

/// Training diverged (non-finite loss or gradient); carries the epoch.
class TrainingFailure : public std::runtime_error {
public:
    TrainingFailure(const std::string& msg, long epoch)
        : std::runtime_error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    long epoch() const { return epoch_; }

private:
    long epoch_;
};

struct OptimizerConfig {
    std::string kind = "adam";  // "adam" or "sgd"
    double learning_rate = 0.001;
    double momentum = 0.0;  // sgd only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline void sgd_step(std::span<double> params, std::span<const double> grads,
                     std::span<double> velocity, double lr, double momentum = 0.0) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw std::invalid_argument("sgd_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] + grads[i];
        params[i] -= lr * velocity[i];
    }
}

inline void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                      std::span<double> v, long t, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
        throw std::invalid_argument("adam_step: size mismatch");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
        params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

/// First-order optimizer over a layer stack's flat parameter view.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::size_t n_params) : cfg_(std::move(config)) {
        if (cfg_.kind != "adam" && cfg_.kind != "sgd")
            throw std::invalid_argument("optimizer: unknown kind '" + cfg_.kind + "'");
        state1_.assign(n_params, 0.0);
        if (cfg_.kind == "adam") state2_.assign(n_params, 0.0);
    }

    void step(const std::vector<double*>& params, const Vector& grads, long epoch) {
        if (params.size() != grads.size() || params.size() != state1_.size())
            throw std::invalid_argument("optimizer: gradient/parameter size mismatch");
        for (double g : grads)
            if (!std::isfinite(g)) throw TrainingFailure("optimizer: non-finite gradient", epoch);
        ++t_;
        if (cfg_.kind == "sgd") {
            for (std::size_t i = 0; i < params.size(); ++i) {
                state1_[i] = cfg_.momentum * state1_[i] + grads[i];
                *params[i] -= cfg_.learning_rate * state1_[i];
            }
        } else {
            const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
            for (std::size_t i = 0; i < params.size(); ++i) {
                const double g = grads[i];
                state1_[i] = cfg_.beta1 * state1_[i] + (1.0 - cfg_.beta1) * g;
                state2_[i] = cfg_.beta2 * state2_[i] + (1.0 - cfg_.beta2) * g * g;
                *params[i] -= cfg_.learning_rate * (state1_[i] / bc1) /
                              (std::sqrt(state2_[i] / bc2) + cfg_.epsilon);
            }
        }
    }

private:
    OptimizerConfig cfg_;
    Vector state1_;  // momentum / first moment
    Vector state2_;  // second moment (adam)
    long t_ = 0;
};

inline double sum_squared_error(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sum_squared_error: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace fae
