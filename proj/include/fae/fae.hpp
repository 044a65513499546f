#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fae/basis.hpp"
#include "fae/dataset.hpp"
#include "fae/nncore.hpp"

namespace fae {

/// Functional autoencoder configuration. The trainable stack runs
/// feature layer (M_I) -> hidden sizes K_1..K_L -> coefficient layer
/// (M_O); the representation is read off the bottleneck hidden layer.
struct FaeConfig {
    BasisSystem input_basis;
    BasisSystem output_basis;
    std::vector<int> hidden_sizes;
    Activation activation = Activation::Sigmoid;
    int bottleneck_index = -1;  // -1: middle layer of an odd-length stack
    double lambda = 0.0;        // roughness penalty on coefficient-layer outputs
    int epochs = 500;
    int batch_size = 0;  // 0 = full batch
    OptimizerConfig optimizer{};
    double init_sd = 0.1;
    std::uint64_t seed = 0;
};

/// Index into hidden_sizes of the representation layer.
inline int resolve_bottleneck(const FaeConfig& config) {
    if (config.hidden_sizes.empty())
        throw std::invalid_argument("fae: hidden_sizes must be non-empty");
    if (config.bottleneck_index >= 0) {
        if (config.bottleneck_index >= static_cast<int>(config.hidden_sizes.size()))
            throw std::invalid_argument("fae: bottleneck_index out of range");
        return config.bottleneck_index;
    }
    if (config.hidden_sizes.size() % 2 == 0)
        throw std::invalid_argument(
            "fae: even-length hidden stack needs an explicit bottleneck_index");
    return static_cast<int>(config.hidden_sizes.size()) / 2;
}

inline void validate_fae_config(const FaeConfig& config) {
    resolve_bottleneck(config);
    for (int k : config.hidden_sizes)
        if (k < 1) throw std::invalid_argument("fae: hidden sizes must be positive");
    if (config.lambda < 0.0) throw std::invalid_argument("fae: lambda must be nonnegative");
    if (config.lambda > 0.0 && config.output_basis.num_basis < 3)
        throw std::invalid_argument("fae: lambda > 0 needs at least 3 output basis functions");
    if (config.epochs < 0) throw std::invalid_argument("fae: epochs must be nonnegative");
    if (config.batch_size < 0) throw std::invalid_argument("fae: batch_size must be nonnegative");
}

/// Trainable model. layers[0] maps features to the first hidden layer
/// (the input weight coefficients, no bias), interior layers are ordinary
/// dense layers with bias, and the last layer maps the final hidden layer
/// to basis coefficients (linear, no bias).
struct FaeModel {
    FaeConfig config;
    LayerStack layers;
    int bottleneck = 0;  // index into layers whose output is the representation

    int representation_dim() const { return config.hidden_sizes[static_cast<std::size_t>(bottleneck)]; }

    /// Continuous input weight function w_k(t) of hidden unit k, evaluated at t.
    double input_weight_at(std::size_t k, double t) const {
        const Vector phi = evaluate(config.input_basis, t);
        double s = 0.0;
        for (std::size_t m = 0; m < phi.size(); ++m) s += layers.front().weight(k, m) * phi[m];
        return s;
    }
};

inline FaeModel make_fae_model(const FaeConfig& config) {
    validate_fae_config(config);
    FaeModel model;
    model.config = config;
    model.bottleneck = resolve_bottleneck(config);
    std::mt19937_64 rng(mix_seed(config.seed, 0x11));
    const std::size_t m_in = static_cast<std::size_t>(config.input_basis.num_basis);
    const std::size_t m_out = static_cast<std::size_t>(config.output_basis.num_basis);
    std::size_t prev = m_in;
    for (std::size_t l = 0; l < config.hidden_sizes.size(); ++l) {
        const std::size_t width = static_cast<std::size_t>(config.hidden_sizes[l]);
        // first layer carries the input weight coefficients and no bias
        model.layers.push_back(make_dense(prev, width, config.activation, l > 0, rng, config.init_sd));
        prev = width;
    }
    model.layers.push_back(make_dense(prev, m_out, Activation::Identity, false, rng, config.init_sd));
    return model;
}

inline std::size_t fae_param_count(const FaeModel& model) { return param_count(model.layers); }

/// Quadrature-weighted inner products of the sample with every input
/// basis function: f_m = sum_j w_j X(t_j) phi_m(t_j). Deterministic and
/// parameter-free; output length M_I regardless of the observation grid.
inline Vector feature_layer(const FunctionalSample& sample, const BasisSystem& input_basis) {
    Vector features(static_cast<std::size_t>(input_basis.num_basis), 0.0);
    for (std::size_t j = 0; j < sample.times.size(); ++j) {
        const Vector phi = evaluate(input_basis, sample.times[j]);
        const double wx = sample.quad.weights[j] * sample.values[j];
        for (std::size_t m = 0; m < features.size(); ++m) features[m] += wx * phi[m];
    }
    return features;
}

struct FaeForward {
    Vector representation;  // bottleneck activations
    Vector coefficients;    // coefficient-layer outputs b
    Vector reconstruction;  // X_hat at the sample's own times
};

namespace detail {

inline Vector reconstruct_at(const Matrix& output_design, const Vector& coeffs) {
    return matvec(output_design, coeffs);
}

struct FaeSampleCache {
    Vector features;
    Matrix output_design;
};

inline FaeSampleCache make_sample_cache(const FaeModel& model, const FunctionalSample& sample) {
    FaeSampleCache cache;
    cache.features = feature_layer(sample, model.config.input_basis);
    cache.output_design = design_matrix(model.config.output_basis, sample.times);
    return cache;
}

inline double second_difference_penalty(const Vector& b) {
    double pen = 0.0;
    for (std::size_t m = 2; m < b.size(); ++m) {
        const double d2 = b[m] - 2.0 * b[m - 1] + b[m - 2];
        pen += d2 * d2;
    }
    return pen;
}

inline void add_second_difference_gradient(const Vector& b, double scale, Vector& grad) {
    for (std::size_t m = 2; m < b.size(); ++m) {
        const double d2 = b[m] - 2.0 * b[m - 1] + b[m - 2];
        grad[m] += scale * 2.0 * d2;
        grad[m - 1] -= scale * 4.0 * d2;
        grad[m - 2] += scale * 2.0 * d2;
    }
}

}  // namespace detail

inline FaeForward fae_forward(const FaeModel& model, const FunctionalSample& sample) {
    const detail::FaeSampleCache cache = detail::make_sample_cache(model, sample);
    ChainTape tape;
    chain_forward(model.layers, cache.features, &tape);
    FaeForward out;
    // the bottleneck's activations are the next layer's recorded input
    out.representation = tape.inputs[static_cast<std::size_t>(model.bottleneck) + 1];
    out.coefficients = tape.output;
    out.reconstruction = detail::reconstruct_at(cache.output_design, out.coefficients);
    return out;
}

/// Batch objective:
/// (1/N) sum_i [ sum_j (X_i(t_j) - Xhat_i(t_j))^2
///               + lambda * sum_m (second difference of b_i)^2 ].
inline double fae_penalized_loss(const Dataset& samples, const std::vector<FaeForward>& results,
                                 double lambda) {
    if (samples.size() != results.size())
        throw std::invalid_argument("fae_penalized_loss: samples and results misaligned");
    if (samples.empty()) throw std::invalid_argument("fae_penalized_loss: empty batch");
    if (lambda > 0.0 && !results.empty() && results.front().coefficients.size() < 3)
        throw std::invalid_argument("fae_penalized_loss: lambda > 0 needs at least 3 coefficients");
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        total += sum_squared_error(samples[i].values, results[i].reconstruction);
        if (lambda > 0.0) total += lambda * detail::second_difference_penalty(results[i].coefficients);
    }
    return total / static_cast<double>(samples.size());
}

/// Full-batch penalized loss and its exact gradient with respect to every
/// trainable parameter (1/N normalization). Used by the trainer and by
/// gradient checks.
inline std::pair<double, ChainGrads> fae_loss_and_gradient(const FaeModel& model,
                                                           const Dataset& samples) {
    if (samples.empty()) throw std::invalid_argument("fae_loss_and_gradient: empty dataset");
    ChainGrads grads = make_zero_grads(model.layers);
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    double loss = 0.0;
    ChainTape tape;
    for (const FunctionalSample& sample : samples) {
        const detail::FaeSampleCache cache = detail::make_sample_cache(model, sample);
        const Vector b = chain_forward(model.layers, cache.features, &tape);
        const Vector recon = detail::reconstruct_at(cache.output_design, b);
        Vector residual(recon.size());
        for (std::size_t j = 0; j < recon.size(); ++j) residual[j] = recon[j] - sample.values[j];
        double sample_loss = 0.0;
        for (double r : residual) sample_loss += r * r;

        Vector db = matvec_t(cache.output_design, residual);
        for (double& v : db) v *= 2.0 * inv_n;
        if (model.config.lambda > 0.0) {
            sample_loss += model.config.lambda * detail::second_difference_penalty(b);
            detail::add_second_difference_gradient(b, model.config.lambda * inv_n, db);
        }
        loss += sample_loss * inv_n;
        chain_backward_accumulate(model.layers, tape, std::move(db), grads);
    }
    return {loss, std::move(grads)};
}

struct FaeTraining {
    FaeModel model;
    Vector history;  // mean penalized loss per epoch
};

/// Trains a fresh model on the dataset. Feature-layer and output-basis
/// links are deterministic and receive no gradient; only the coefficient
/// matrices and hidden weights move. Throws TrainingFailure on divergence.
inline FaeTraining fae_train(const Dataset& dataset, const FaeConfig& config) {
    if (dataset.empty()) throw std::invalid_argument("fae_train: empty dataset");
    validate_fae_config(config);
    for (const FunctionalSample& s : dataset) {
        detail::check_in_domain(config.input_basis, s.times.front());
        detail::check_in_domain(config.input_basis, s.times.back());
        detail::check_in_domain(config.output_basis, s.times.front());
        detail::check_in_domain(config.output_basis, s.times.back());
    }

    FaeTraining result;
    result.model = make_fae_model(config);
    FaeModel& model = result.model;

    const std::size_t n = dataset.size();
    std::vector<detail::FaeSampleCache> caches;
    caches.reserve(n);
    for (const FunctionalSample& s : dataset) caches.push_back(detail::make_sample_cache(model, s));

    std::vector<double*> params = param_pointers(model.layers);
    Optimizer optimizer(config.optimizer, params.size());
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x22));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = config.batch_size == 0
                                  ? n
                                  : std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
    ChainGrads grads = make_zero_grads(model.layers);
    ChainTape tape;
    result.history.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            for (LayerGrads& lg : grads.layers) {
                std::fill(lg.weight.storage().begin(), lg.weight.storage().end(), 0.0);
                std::fill(lg.bias.begin(), lg.bias.end(), 0.0);
            }
            double batch_loss = 0.0;
            try {
                for (std::size_t pos = start; pos < stop; ++pos) {
                    const std::size_t i = order[pos];
                    const FunctionalSample& sample = dataset[i];
                    const detail::FaeSampleCache& cache = caches[i];
                    const Vector b = chain_forward(model.layers, cache.features, &tape);
                    const Vector recon = detail::reconstruct_at(cache.output_design, b);
                    Vector residual(recon.size());
                    for (std::size_t j = 0; j < recon.size(); ++j)
                        residual[j] = recon[j] - sample.values[j];
                    for (double r : residual) batch_loss += r * r;
                    Vector db = matvec_t(cache.output_design, residual);
                    for (double& v : db) v *= 2.0 * inv_b;
                    if (config.lambda > 0.0) {
                        batch_loss += config.lambda * detail::second_difference_penalty(b);
                        detail::add_second_difference_gradient(b, config.lambda * inv_b, db);
                    }
                    chain_backward_accumulate(model.layers, tape, std::move(db), grads);
                }
            } catch (const EvaluationError& e) {
                throw TrainingFailure(std::string("fae_train: ") + e.what(), epoch);
            }
            if (!std::isfinite(batch_loss))
                throw TrainingFailure("fae_train: non-finite loss", epoch);
            epoch_loss += batch_loss;
            optimizer.step(params, flatten_grads(grads), epoch);
        }
        result.history.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

/// Forward pass truncated at the bottleneck layer.
inline Vector fae_encode(const FaeModel& model, const FunctionalSample& sample) {
    Vector cur = feature_layer(sample, model.config.input_basis);
    for (int l = 0; l <= model.bottleneck; ++l)
        cur = dense_forward(model.layers[static_cast<std::size_t>(l)], cur);
    return cur;
}

/// Evaluates the reconstructed curve X_hat(t) = sum_m b_m phi_m(t) at
/// arbitrary domain points, observed or not.
inline Vector fae_smooth(const FaeModel& model, const FunctionalSample& sample,
                         const Vector& eval_times) {
    const Vector features = feature_layer(sample, model.config.input_basis);
    const Vector b = chain_forward(model.layers, features);
    Vector out(eval_times.size());
    for (std::size_t j = 0; j < eval_times.size(); ++j) {
        const Vector phi = evaluate(model.config.output_basis, eval_times[j]);
        double s = 0.0;
        for (std::size_t m = 0; m < phi.size(); ++m) s += phi[m] * b[m];
        out[j] = s;
    }
    return out;
}

}  // namespace fae
