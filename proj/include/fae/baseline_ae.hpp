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

#include "fae/dataset.hpp"
#include "fae/nncore.hpp"

namespace fae {

/// Fixed-grid curve with an observation mask. Unobserved positions carry
/// an exact 0 so they can be fed to the input layer; they never enter the
/// loss.
struct MaskedVector {
    Vector values;
    std::vector<char> mask;  // 1 = observed
};

inline MaskedVector make_masked(Vector values, std::vector<char> mask) {
    if (values.size() != mask.size())
        throw std::invalid_argument("make_masked: values and mask must have equal length");
    for (std::size_t j = 0; j < values.size(); ++j)
        if (!mask[j]) values[j] = 0.0;
    return MaskedVector{std::move(values), std::move(mask)};
}

/// Aligns an (possibly irregular) sample to a fixed grid by exact time
/// match; grid positions the sample does not observe are masked out.
inline MaskedVector to_grid(const FunctionalSample& sample, const Vector& grid) {
    Vector values(grid.size(), 0.0);
    std::vector<char> mask(grid.size(), 0);
    std::size_t g = 0;
    for (std::size_t j = 0; j < sample.times.size(); ++j) {
        while (g < grid.size() && grid[g] < sample.times[j]) ++g;
        if (g == grid.size() || grid[g] != sample.times[j])
            throw std::invalid_argument("to_grid: sample time " + format_double(sample.times[j]) +
                                        " is not a grid point");
        values[g] = sample.values[j];
        mask[g] = 1;
    }
    return MaskedVector{std::move(values), std::move(mask)};
}

struct AeConfig {
    std::vector<int> hidden_sizes;
    Activation activation = Activation::Sigmoid;
    int bottleneck_index = -1;  // -1: middle layer of an odd-length stack
    int epochs = 500;
    int batch_size = 0;
    OptimizerConfig optimizer{};
    double init_sd = 0.1;
    std::uint64_t seed = 0;
};

inline int resolve_ae_bottleneck(const AeConfig& config) {
    if (config.hidden_sizes.empty())
        throw std::invalid_argument("ae: hidden_sizes must be non-empty");
    if (config.bottleneck_index >= 0) {
        if (config.bottleneck_index >= static_cast<int>(config.hidden_sizes.size()))
            throw std::invalid_argument("ae: bottleneck_index out of range");
        return config.bottleneck_index;
    }
    if (config.hidden_sizes.size() % 2 == 0)
        throw std::invalid_argument("ae: even-length hidden stack needs an explicit bottleneck_index");
    return static_cast<int>(config.hidden_sizes.size()) / 2;
}

/// Dense autoencoder J -> hidden sizes -> J on a fixed grid; final layer
/// is linear. Reconstruction exists only at the grid's own timestamps.
struct AeModel {
    AeConfig config;
    Vector grid;
    LayerStack layers;
    int bottleneck = 0;

    int representation_dim() const { return config.hidden_sizes[static_cast<std::size_t>(bottleneck)]; }
};

inline AeModel make_ae_model(const AeConfig& config, const Vector& grid) {
    resolve_ae_bottleneck(config);
    if (grid.size() < 2) throw std::invalid_argument("ae: grid needs at least 2 points");
    AeModel model;
    model.config = config;
    model.grid = grid;
    model.bottleneck = resolve_ae_bottleneck(config);
    std::mt19937_64 rng(mix_seed(config.seed, 0x33));
    std::size_t prev = grid.size();
    for (int width : config.hidden_sizes) {
        model.layers.push_back(
            make_dense(prev, static_cast<std::size_t>(width), config.activation, true, rng, config.init_sd));
        prev = static_cast<std::size_t>(width);
    }
    model.layers.push_back(make_dense(prev, grid.size(), Activation::Identity, true, rng, config.init_sd));
    return model;
}

inline std::size_t ae_param_count(const AeModel& model) { return param_count(model.layers); }

/// Sum of squared residuals over observed positions only.
inline double masked_sse(const Vector& prediction, const MaskedVector& target) {
    if (prediction.size() != target.values.size())
        throw std::invalid_argument("masked_sse: length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < prediction.size(); ++j) {
        if (!target.mask[j]) continue;
        const double d = prediction[j] - target.values[j];
        s += d * d;
    }
    return s;
}

struct AeTraining {
    AeModel model;
    Vector history;
};

/// Minimizes (1/N) sum_i masked_sse_i. Masked positions contribute zero
/// loss and zero gradient.
inline AeTraining ae_train(const std::vector<MaskedVector>& dataset, const Vector& grid,
                           const AeConfig& config) {
    if (dataset.empty()) throw std::invalid_argument("ae_train: empty dataset");
    for (const MaskedVector& mv : dataset)
        if (mv.values.size() != grid.size())
            throw std::invalid_argument("ae_train: sample length differs from grid length");

    AeTraining result;
    result.model = make_ae_model(config, grid);
    AeModel& model = result.model;

    std::vector<double*> params = param_pointers(model.layers);
    Optimizer optimizer(config.optimizer, params.size());
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x44));

    const std::size_t n = dataset.size();
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
                    const MaskedVector& mv = dataset[order[pos]];
                    const Vector recon = chain_forward(model.layers, mv.values, &tape);
                    Vector dout(recon.size(), 0.0);
                    for (std::size_t j = 0; j < recon.size(); ++j) {
                        if (!mv.mask[j]) continue;
                        const double r = recon[j] - mv.values[j];
                        batch_loss += r * r;
                        dout[j] = 2.0 * r * inv_b;
                    }
                    chain_backward_accumulate(model.layers, tape, std::move(dout), grads);
                }
            } catch (const EvaluationError& e) {
                throw TrainingFailure(std::string("ae_train: ") + e.what(), epoch);
            }
            if (!std::isfinite(batch_loss)) throw TrainingFailure("ae_train: non-finite loss", epoch);
            epoch_loss += batch_loss;
            optimizer.step(params, flatten_grads(grads), epoch);
        }
        result.history.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

inline Vector ae_encode(const AeModel& model, const MaskedVector& input) {
    if (input.values.size() != model.grid.size())
        throw std::invalid_argument("ae_encode: input length differs from model grid");
    Vector cur = input.values;
    for (int l = 0; l <= model.bottleneck; ++l)
        cur = dense_forward(model.layers[static_cast<std::size_t>(l)], cur);
    return cur;
}

inline Vector ae_reconstruct(const AeModel& model, const MaskedVector& input) {
    if (input.values.size() != model.grid.size())
        throw std::invalid_argument("ae_reconstruct: input length differs from model grid");
    return chain_forward(model.layers, input.values);
}

}  // namespace fae
