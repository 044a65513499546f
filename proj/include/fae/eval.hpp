#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fae/dataset.hpp"
#include "fae/linalg.hpp"
#include "fae/nncore.hpp"

namespace fae {

/// Mean squared prediction error, averaged over samples and over each
/// sample's own observed time points.
inline double mse_p(const Dataset& truth, const std::vector<Vector>& predictions) {
    if (truth.size() != predictions.size())
        throw std::invalid_argument("mse_p: truth and predictions misaligned");
    if (truth.empty()) throw std::invalid_argument("mse_p: empty collection");
    double total = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i].values.size() != predictions[i].size())
            throw std::invalid_argument("mse_p: prediction length mismatch at sample " +
                                        std::to_string(i));
        total += sum_squared_error(truth[i].values, predictions[i]) /
                 static_cast<double>(truth[i].values.size());
    }
    return total / static_cast<double>(truth.size());
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Disjoint, exhaustive, seed-deterministic partition by sample.
inline SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0, 1)");
    const std::size_t n_train =
        static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw std::invalid_argument("split: fraction yields an empty train or test side");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0x66));
    std::shuffle(order.begin(), order.end(), rng);
    SplitIndices s;
    s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

inline Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data[i]);
    return out;
}

struct LogRegConfig {
    double l2 = 1e-4;
    double learning_rate = 0.05;
    int iterations = 400;
};

/// Multinomial logistic regression. Features are standardized internally
/// (training statistics); weights are fit by full-batch Adam on the
/// cross-entropy with L2 on the non-intercept weights. Deterministic.
struct LogRegModel {
    std::vector<int> classes;
    Matrix weights;  // K x (d+1), last column = intercept
    Vector feature_mean;
    Vector feature_scale;
};

namespace detail {

inline Vector logreg_probs(const LogRegModel& model, const double* std_features, std::size_t d) {
    const std::size_t k = model.classes.size();
    Vector logits(k);
    for (std::size_t c = 0; c < k; ++c) {
        double s = model.weights(c, d);
        for (std::size_t q = 0; q < d; ++q) s += model.weights(c, q) * std_features[q];
        logits[c] = s;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double& v : logits) {
        v = std::exp(v - top);
        denom += v;
    }
    for (double& v : logits) v /= denom;
    return logits;
}

}  // namespace detail

inline LogRegModel logreg_train(const Matrix& features, const std::vector<int>& labels,
                                const LogRegConfig& config = {}) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (n == 0 || n != labels.size())
        throw std::invalid_argument("logreg_train: features and labels misaligned");

    LogRegModel model;
    model.classes = labels;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                        model.classes.end());
    if (model.classes.size() < 2)
        throw std::invalid_argument("logreg_train: need at least 2 classes in the training labels");
    const std::size_t k = model.classes.size();

    model.feature_mean.assign(d, 0.0);
    model.feature_scale.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < d; ++q) model.feature_mean[q] += features(i, q);
    for (double& v : model.feature_mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < d; ++q) {
            const double dv = features(i, q) - model.feature_mean[q];
            model.feature_scale[q] += dv * dv;
        }
    for (double& v : model.feature_scale)
        v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-12);

    Matrix std_features(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t q = 0; q < d; ++q)
            std_features(i, q) = (features(i, q) - model.feature_mean[q]) / model.feature_scale[q];

    std::vector<std::size_t> class_index(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]);
        class_index[i] = static_cast<std::size_t>(it - model.classes.begin());
    }

    model.weights = Matrix(k, d + 1, 0.0);
    const std::size_t n_params = model.weights.size();
    Vector grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (int it = 1; it <= config.iterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const Vector probs = detail::logreg_probs(model, std_features.row(i), d);
            for (std::size_t c = 0; c < k; ++c) {
                const double err = (probs[c] - (class_index[i] == c ? 1.0 : 0.0)) * inv_n;
                double* g = grad.data() + c * (d + 1);
                const double* x = std_features.row(i);
                for (std::size_t q = 0; q < d; ++q) g[q] += err * x[q];
                g[d] += err;
            }
        }
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t q = 0; q < d; ++q)
                grad[c * (d + 1) + q] += config.l2 * model.weights(c, q);
        adam_step({model.weights.data(), n_params}, {grad.data(), n_params},
                  {m1.data(), n_params}, {m2.data(), n_params}, it, config.learning_rate);
    }
    return model;
}

inline int logreg_predict_one(const LogRegModel& model, const double* features) {
    const std::size_t d = model.feature_mean.size();
    Vector std_f(d);
    for (std::size_t q = 0; q < d; ++q)
        std_f[q] = (features[q] - model.feature_mean[q]) / model.feature_scale[q];
    const Vector probs = detail::logreg_probs(model, std_f.data(), d);
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    return model.classes[best];
}

inline double logreg_accuracy(const LogRegModel& model, const Matrix& features,
                              const std::vector<int>& labels) {
    if (features.rows() != labels.size())
        throw std::invalid_argument("logreg_accuracy: features and labels misaligned");
    if (features.rows() == 0) throw std::invalid_argument("logreg_accuracy: empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < features.rows(); ++i)
        if (logreg_predict_one(model, features.row(i)) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(features.rows());
}

struct ReplicateResult {
    int replicate = 0;
    std::uint64_t seed = 0;
    double mse_p = 0.0;
    double p_classification = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
    std::vector<ReplicateResult> replicates;
    double mse_p_mean = 0.0;
    double mse_p_sd = 0.0;
    double p_classification_mean = std::numeric_limits<double>::quiet_NaN();
    double p_classification_sd = std::numeric_limits<double>::quiet_NaN();
};

inline double mean_of(const Vector& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation with the (n-1) denominator; 0 for n = 1.
inline double sd_of(const Vector& xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline void summarize(ExperimentReport& report) {
    Vector mses, accs;
    for (const ReplicateResult& r : report.replicates) {
        mses.push_back(r.mse_p);
        if (std::isfinite(r.p_classification)) accs.push_back(r.p_classification);
    }
    if (!mses.empty()) {
        report.mse_p_mean = mean_of(mses);
        report.mse_p_sd = sd_of(mses);
    }
    if (!accs.empty()) {
        report.p_classification_mean = mean_of(accs);
        report.p_classification_sd = sd_of(accs);
    }
}

}  // namespace fae
