#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fae/baseline_ae.hpp"
#include "fae/eval.hpp"
#include "fae/fae.hpp"
#include "fae/fpca.hpp"

namespace fae {

struct FpcaOptions {
    BasisSystem basis;
    int components = 5;
    double ridge = 1e-9;
    int gram_resolution = 20001;
};

/// One repeated-split evaluation run: which model to train, how to split,
/// how many replicates. Per-replicate seeds derive from the master seed,
/// so reruns reproduce reports bit-identically regardless of `jobs`.
struct ExperimentConfig {
    std::string model_kind = "fae";  // "fae" | "ae" | "fpca"
    FaeConfig fae{};
    AeConfig ae{};
    FpcaOptions fpca{};
    double train_fraction = 0.8;
    int replicates = 10;
    std::uint64_t master_seed = 0;
    int jobs = 1;
};

inline std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate) {
    return mix_seed(master_seed, 0x77 + static_cast<std::uint64_t>(replicate));
}

namespace detail {

inline bool all_labeled(const Dataset& data) {
    for (const FunctionalSample& s : data)
        if (!s.label) return false;
    return !data.empty();
}

inline Matrix rows_to_matrix(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), m.row(i));
    return m;
}

inline std::vector<int> labels_of(const Dataset& data) {
    std::vector<int> labels;
    labels.reserve(data.size());
    for (const FunctionalSample& s : data) labels.push_back(s.label.value());
    return labels;
}

}  // namespace detail

/// Runs one replicate: split, train on the training side, score MSE_p on
/// test reconstructions and classification accuracy of a logistic
/// regression fit on training representations.
inline ReplicateResult run_replicate(const Dataset& data, const ExperimentConfig& config,
                                     int replicate) {
    ReplicateResult result;
    result.replicate = replicate;
    result.seed = replicate_seed(config.master_seed, replicate);
    const SplitIndices idx = split_indices(data.size(), config.train_fraction,
                                           mix_seed(result.seed, 1));
    const Dataset train = subset(data, idx.train);
    const Dataset test = subset(data, idx.test);

    std::vector<Vector> predictions(test.size());
    std::vector<Vector> train_reps(train.size()), test_reps(test.size());

    if (config.model_kind == "fae") {
        FaeConfig cfg = config.fae;
        cfg.seed = mix_seed(result.seed, 2);
        const FaeModel model = fae_train(train, cfg).model;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const FaeForward fwd = fae_forward(model, test[i]);
            predictions[i] = fwd.reconstruction;
            test_reps[i] = fwd.representation;
        }
        for (std::size_t i = 0; i < train.size(); ++i) train_reps[i] = fae_encode(model, train[i]);
    } else if (config.model_kind == "ae") {
        const Vector grid = union_grid(data);
        AeConfig cfg = config.ae;
        cfg.seed = mix_seed(result.seed, 2);
        std::vector<MaskedVector> train_mv, test_mv;
        train_mv.reserve(train.size());
        test_mv.reserve(test.size());
        for (const FunctionalSample& s : train) train_mv.push_back(to_grid(s, grid));
        for (const FunctionalSample& s : test) test_mv.push_back(to_grid(s, grid));
        const AeModel model = ae_train(train_mv, grid, cfg).model;
        for (std::size_t i = 0; i < test.size(); ++i) {
            const Vector recon = ae_reconstruct(model, test_mv[i]);
            Vector pred;
            pred.reserve(test[i].times.size());
            for (std::size_t g = 0; g < grid.size(); ++g)
                if (test_mv[i].mask[g]) pred.push_back(recon[g]);
            predictions[i] = std::move(pred);
            test_reps[i] = ae_encode(model, test_mv[i]);
        }
        for (std::size_t i = 0; i < train.size(); ++i)
            train_reps[i] = ae_encode(model, train_mv[i]);
    } else if (config.model_kind == "fpca") {
        const FpcaModel model = fpca_fit_dataset(train, config.fpca.basis, config.fpca.components,
                                                 config.fpca.ridge, config.fpca.gram_resolution);
        for (std::size_t i = 0; i < test.size(); ++i) {
            const Vector scores = fpca_scores(model, test[i]);
            predictions[i] = fpca_reconstruct(model, scores, test[i].times);
            test_reps[i] = scores;
        }
        for (std::size_t i = 0; i < train.size(); ++i) train_reps[i] = fpca_scores(model, train[i]);
    } else {
        throw std::invalid_argument("experiment: unknown model kind '" + config.model_kind + "'");
    }

    result.mse_p = mse_p(test, predictions);
    if (detail::all_labeled(train) && detail::all_labeled(test)) {
        const LogRegModel clf =
            logreg_train(detail::rows_to_matrix(train_reps), detail::labels_of(train));
        result.p_classification =
            logreg_accuracy(clf, detail::rows_to_matrix(test_reps), detail::labels_of(test));
    }
    return result;
}

/// Repeated random train/test splitting. Replicates run independently;
/// with jobs > 1 they run on a small thread pool and are collected in
/// replicate order.
inline ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& config) {
    if (config.replicates < 1) throw std::invalid_argument("experiment: replicates must be >= 1");
    ExperimentReport report;
    report.replicates.resize(static_cast<std::size_t>(config.replicates));

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        for (int r = 0; r < config.replicates; ++r)
            report.replicates[static_cast<std::size_t>(r)] = run_replicate(data, config, r);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&]() {
            for (;;) {
                const int r = next.fetch_add(1);
                if (r >= config.replicates) return;
                try {
                    report.replicates[static_cast<std::size_t>(r)] = run_replicate(data, config, r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    summarize(report);
    return report;
}

}  // namespace fae
