// Command-line entry point: dataset simulation, CSV ingestion, model
// training, repeated-split evaluation and curve smoothing. Every command
// is deterministic given --seed; exit codes are 0 (success), 2 (usage or
// configuration error), 3 (numerical failure during training).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <variant>

#include <CLI11.hpp>

#include "fae/io_json.hpp"

namespace fs = std::filesystem;
using fae::Json;

namespace {

fae::BasisSystem default_basis(const fae::Dataset& data) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const fae::FunctionalSample& s : data) {
        lo = std::min(lo, s.times.front());
        hi = std::max(hi, s.times.back());
    }
    return fae::make_bspline_basis(lo, hi, 10, 4);
}

Json load_config(const std::string& path) { return fae::read_json_file(path); }

void inject_default_bases(Json& cfg, const fae::Dataset& data, const std::string& model) {
    if (model == "fae") {
        if (!cfg.contains("input_basis")) cfg["input_basis"] = fae::basis_to_json(default_basis(data));
        if (!cfg.contains("output_basis")) cfg["output_basis"] = fae::basis_to_json(default_basis(data));
    } else if (model == "fpca") {
        if (!cfg.contains("basis")) cfg["basis"] = fae::basis_to_json(default_basis(data));
    }
}

void write_loss_log(const std::string& path, const fae::Vector& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (double v : history) out << fae::format_double(v) << '\n';
}

void write_curves_csv(const std::string& path, const fae::Dataset& samples,
                      const std::vector<fae::Vector>& eval_times,
                      const std::vector<fae::Vector>& reconstructions) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "sample_id,t,value,series\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = 0; j < samples[i].times.size(); ++j)
            out << i << ',' << fae::format_double(samples[i].times[j]) << ','
                << fae::format_double(samples[i].values[j]) << ",observed\n";
        for (std::size_t j = 0; j < eval_times[i].size(); ++j)
            out << i << ',' << fae::format_double(eval_times[i][j]) << ','
                << fae::format_double(reconstructions[i][j]) << ",reconstructed\n";
    }
}

fae::Vector uniform_grid(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("grid size must be at least 2 points");
    fae::Vector g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return g;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string preset_name;
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
};

int cmd_simulate(const SimulateArgs& args) {
    if (args.preset_name.empty() == args.config_path.empty())
        throw std::invalid_argument("simulate: give exactly one of --preset / --config");
    fae::ScenarioConfig cfg = args.preset_name.empty()
                                  ? fae::scenario_from_json(load_config(args.config_path))
                                  : fae::preset(args.preset_name);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    const fae::GeneratedData data = fae::generate(cfg);
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    fae::write_generated_dataset((dir / "dataset.csv").string(), (dir / "dataset.json").string(),
                                 data);
    std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << data.samples.size()
              << " samples)\n";
    return 0;
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
    std::string in_path;
    std::string out_dir;
    bool center = false;
};

int cmd_ingest(const IngestArgs& args) {
    fae::Dataset data = fae::read_long_csv(args.in_path);
    if (data.empty()) throw std::invalid_argument("ingest: no samples in " + args.in_path);
    Json meta;
    meta["schema"] = "fae-ingest/1";
    meta["source"] = args.in_path;
    meta["centered"] = args.center;
    if (args.center) {
        const fae::MeanCurve mean = fae::pointwise_mean(data);
        fae::subtract_mean(data, mean);
        meta["mean"] = {{"times", mean.times}, {"values", mean.values}};
    }
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    fae::write_long_csv((dir / "dataset.csv").string(), data);
    fae::write_json_file((dir / "ingest.json").string(), meta);
    std::cout << "wrote " << (dir / "dataset.csv").string() << " (" << data.size()
              << " samples)\n";
    return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string model;
    std::string data_path;
    std::string config_path;
    std::string out_path;
    std::string loss_log;
    std::int64_t seed = -1;
    int components = 0;
};

int cmd_train(const TrainArgs& args) {
    const fae::Dataset data = fae::read_long_csv(args.data_path);
    if (data.empty()) throw std::invalid_argument("train: dataset is empty");
    Json cfg = load_config(args.config_path);
    if (cfg.contains("model") && cfg.at("model").get<std::string>() != args.model)
        throw std::invalid_argument("train: config file is for model '" +
                                    cfg.at("model").get<std::string>() + "'");
    inject_default_bases(cfg, data, args.model);

    if (args.model == "fae") {
        fae::FaeConfig fc = fae::fae_config_from_json(cfg);
        if (args.seed >= 0) fc.seed = static_cast<std::uint64_t>(args.seed);
        const fae::FaeTraining trained = fae::fae_train(data, fc);
        fae::write_json_file(args.out_path, fae::fae_model_to_json(trained.model));
        if (!args.loss_log.empty()) write_loss_log(args.loss_log, trained.history);
        std::cout << "final training loss: "
                  << (trained.history.empty() ? 0.0 : trained.history.back()) << '\n';
    } else if (args.model == "ae") {
        fae::AeConfig ac = fae::ae_config_from_json(cfg);
        if (args.seed >= 0) ac.seed = static_cast<std::uint64_t>(args.seed);
        const fae::Vector grid = fae::union_grid(data);
        std::vector<fae::MaskedVector> mv;
        mv.reserve(data.size());
        for (const fae::FunctionalSample& s : data) mv.push_back(fae::to_grid(s, grid));
        const fae::AeTraining trained = fae::ae_train(mv, grid, ac);
        fae::write_json_file(args.out_path, fae::ae_model_to_json(trained.model));
        if (!args.loss_log.empty()) write_loss_log(args.loss_log, trained.history);
        std::cout << "final training loss: "
                  << (trained.history.empty() ? 0.0 : trained.history.back()) << '\n';
    } else if (args.model == "fpca") {
        fae::FpcaOptions opt = fae::fpca_options_from_json(cfg);
        if (args.components > 0) opt.components = args.components;
        const fae::FpcaModel model =
            fae::fpca_fit_dataset(data, opt.basis, opt.components, opt.ridge, opt.gram_resolution);
        fae::write_json_file(args.out_path, fae::fpca_model_to_json(model));
        std::vector<fae::Vector> recon(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            recon[i] = fae::fpca_reconstruct(model, fae::fpca_scores(model, data[i]), data[i].times);
        std::cout << "final training loss: " << fae::mse_p(data, recon) << '\n';
    } else {
        throw std::invalid_argument("train: unknown model '" + args.model + "'");
    }
    return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    std::string data_path;
    std::string config_path;
    std::string out_prefix;
    std::string curves_out;
    double train_fraction = 0.8;
    int replicates = 10;
    std::int64_t seed = 0;
    int jobs = 1;
    int eval_grid = 0;
};

int cmd_evaluate(const EvaluateArgs& args) {
    const fae::Dataset data = fae::read_long_csv(args.data_path);
    if (data.empty()) throw std::invalid_argument("evaluate: dataset is empty");
    Json cfg = load_config(args.config_path);
    if (cfg.contains("model") && cfg.at("model").get<std::string>() != args.model)
        throw std::invalid_argument("evaluate: config file is for model '" +
                                    cfg.at("model").get<std::string>() + "'");
    inject_default_bases(cfg, data, args.model);

    fae::ExperimentConfig xc;
    xc.model_kind = args.model;
    if (args.model == "fae")
        xc.fae = fae::fae_config_from_json(cfg);
    else if (args.model == "ae")
        xc.ae = fae::ae_config_from_json(cfg);
    else if (args.model == "fpca")
        xc.fpca = fae::fpca_options_from_json(cfg);
    else
        throw std::invalid_argument("evaluate: unknown model '" + args.model + "'");
    xc.train_fraction = args.train_fraction;
    xc.replicates = args.replicates;
    xc.master_seed = static_cast<std::uint64_t>(args.seed);
    xc.jobs = args.jobs;

    const fae::ExperimentReport report = fae::run_experiment(data, xc);
    fae::write_json_file(args.out_prefix + ".json",
                         fae::report_to_json(report, fae::experiment_config_to_json(xc)));
    fae::write_report_csv(args.out_prefix + ".csv", report);
    std::cout << "mse_p mean " << report.mse_p_mean << " sd " << report.mse_p_sd;
    if (std::isfinite(report.p_classification_mean))
        std::cout << ", p_classification mean " << report.p_classification_mean << " sd "
                  << report.p_classification_sd;
    std::cout << '\n';

    if (!args.curves_out.empty()) {
        // replicate 0 reconstructions for external plotting
        if (args.model == "ae" && args.eval_grid > 0)
            throw std::invalid_argument(
                "evaluate: an AE reconstructs only on its native grid (drop --eval-grid)");
        const fae::SplitIndices idx = fae::split_indices(
            data.size(), xc.train_fraction, fae::mix_seed(fae::replicate_seed(xc.master_seed, 0), 1));
        const fae::Dataset train = fae::subset(data, idx.train);
        const fae::Dataset test = fae::subset(data, idx.test);
        std::vector<fae::Vector> times(test.size()), recon(test.size());
        if (args.model == "fae") {
            fae::FaeConfig fc = xc.fae;
            fc.seed = fae::mix_seed(fae::replicate_seed(xc.master_seed, 0), 2);
            const fae::FaeModel model = fae::fae_train(train, fc).model;
            for (std::size_t i = 0; i < test.size(); ++i) {
                times[i] = args.eval_grid > 0
                               ? uniform_grid(model.config.output_basis.t_min,
                                              model.config.output_basis.t_max, args.eval_grid)
                               : test[i].times;
                recon[i] = fae::fae_smooth(model, test[i], times[i]);
            }
        } else if (args.model == "fpca") {
            const fae::FpcaModel model = fae::fpca_fit_dataset(
                train, xc.fpca.basis, xc.fpca.components, xc.fpca.ridge, xc.fpca.gram_resolution);
            for (std::size_t i = 0; i < test.size(); ++i) {
                times[i] = args.eval_grid > 0
                               ? uniform_grid(model.basis.t_min, model.basis.t_max, args.eval_grid)
                               : test[i].times;
                recon[i] = fae::fpca_reconstruct(model, fae::fpca_scores(model, test[i]), times[i]);
            }
        } else {
            const fae::Vector grid = fae::union_grid(data);
            fae::AeConfig ac = xc.ae;
            ac.seed = fae::mix_seed(fae::replicate_seed(xc.master_seed, 0), 2);
            std::vector<fae::MaskedVector> train_mv;
            for (const fae::FunctionalSample& s : train) train_mv.push_back(fae::to_grid(s, grid));
            const fae::AeModel model = fae::ae_train(train_mv, grid, ac).model;
            for (std::size_t i = 0; i < test.size(); ++i) {
                times[i] = grid;
                recon[i] = fae::ae_reconstruct(model, fae::to_grid(test[i], grid));
            }
        }
        write_curves_csv(args.curves_out, test, times, recon);
        Json meta;
        meta["schema"] = "fae-curves/1";
        meta["config"] = fae::experiment_config_to_json(xc);
        meta["replicate"] = 0;
        meta["eval_grid"] = args.eval_grid;
        fae::write_json_file(args.curves_out + ".meta.json", meta);
    }
    return 0;
}

// ---- smooth -----------------------------------------------------------------

struct SmoothArgs {
    std::string model_path;
    std::string data_path;
    std::string out_path;
    int grid = 0;  // 0 = at each sample's observed times
};

int cmd_smooth(const SmoothArgs& args) {
    const fae::Dataset data = fae::read_long_csv(args.data_path);
    if (data.empty()) throw std::invalid_argument("smooth: dataset is empty");
    const fae::AnyModel any = fae::load_any_model(args.model_path);
    std::vector<fae::Vector> times(data.size()), recon(data.size());

    if (std::holds_alternative<fae::FaeModel>(any)) {
        const fae::FaeModel& model = std::get<fae::FaeModel>(any);
        for (std::size_t i = 0; i < data.size(); ++i) {
            times[i] = args.grid > 0 ? uniform_grid(model.config.output_basis.t_min,
                                                    model.config.output_basis.t_max, args.grid)
                                     : data[i].times;
            recon[i] = fae::fae_smooth(model, data[i], times[i]);
        }
    } else if (std::holds_alternative<fae::FpcaModel>(any)) {
        const fae::FpcaModel& model = std::get<fae::FpcaModel>(any);
        for (std::size_t i = 0; i < data.size(); ++i) {
            times[i] = args.grid > 0
                           ? uniform_grid(model.basis.t_min, model.basis.t_max, args.grid)
                           : data[i].times;
            recon[i] = fae::fpca_reconstruct(model, fae::fpca_scores(model, data[i]), times[i]);
        }
    } else {
        const fae::AeModel& model = std::get<fae::AeModel>(any);
        if (args.grid > 0)
            throw std::invalid_argument(
                "smooth: an AE reconstructs only at its native grid timestamps; off-grid "
                "evaluation is unsupported");
        for (std::size_t i = 0; i < data.size(); ++i) {
            const fae::MaskedVector mv = fae::to_grid(data[i], model.grid);
            const fae::Vector full = fae::ae_reconstruct(model, mv);
            fae::Vector pred;
            pred.reserve(data[i].times.size());
            for (std::size_t g = 0; g < model.grid.size(); ++g)
                if (mv.mask[g]) pred.push_back(full[g]);
            times[i] = data[i].times;
            recon[i] = std::move(pred);
        }
    }
    write_curves_csv(args.out_path, data, times, recon);
    Json meta;
    meta["schema"] = "fae-curves/1";
    meta["model"] = args.model_path;
    meta["data"] = args.data_path;
    meta["eval_grid"] = args.grid;
    fae::write_json_file(args.out_path + ".meta.json", meta);
    std::cout << "wrote " << args.out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"functional autoencoder toolkit: simulate, ingest, train, evaluate, smooth"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    simulate->add_option("--preset", sim.preset_name, "scenario preset: S1_1, S1_2, S2_1, S2_2");
    simulate->add_option("--config", sim.config_path, "scenario config JSON");
    simulate->add_option("--out", sim.out_dir, "output directory")->required();
    simulate->add_option("--seed", sim.seed, "override the scenario seed");

    IngestArgs ing;
    CLI::App* ingest = app.add_subcommand("ingest", "load a long-format CSV dataset");
    ingest->add_option("--in", ing.in_path, "input CSV (sample_id,t,value[,label])")->required();
    ingest->add_option("--out", ing.out_dir, "output directory")->required();
    ingest->add_flag("--center", ing.center, "subtract the pointwise sample mean");

    TrainArgs tr;
    CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
    train->add_option("--model", tr.model, "fae, ae, or fpca")->required();
    train->add_option("--data", tr.data_path, "dataset CSV")->required();
    train->add_option("--config", tr.config_path, "model config JSON")->required();
    train->add_option("--out", tr.out_path, "output model JSON")->required();
    train->add_option("--loss-log", tr.loss_log, "per-epoch loss log (plain text)");
    train->add_option("--seed", tr.seed, "override the config seed");
    train->add_option("--components", tr.components, "fpca: number of components");

    EvaluateArgs ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "repeated-split train/test evaluation");
    evaluate->add_option("--model", ev.model, "fae, ae, or fpca")->required();
    evaluate->add_option("--data", ev.data_path, "dataset CSV")->required();
    evaluate->add_option("--config", ev.config_path, "model config JSON")->required();
    evaluate->add_option("--train-frac", ev.train_fraction, "training fraction (default 0.8)");
    evaluate->add_option("--replicates", ev.replicates, "number of random splits (default 10)");
    evaluate->add_option("--seed", ev.seed, "master seed");
    evaluate->add_option("--jobs", ev.jobs, "parallel replicates");
    evaluate->add_option("--out", ev.out_prefix, "report path prefix (.json/.csv)")->required();
    evaluate->add_option("--curves-out", ev.curves_out, "also dump replicate-0 test curves CSV");
    evaluate->add_option("--eval-grid", ev.eval_grid,
                         "curve dump grid size (0 = observed times; unsupported for ae)");

    SmoothArgs sm;
    CLI::App* smooth = app.add_subcommand("smooth", "evaluate reconstructed curves");
    smooth->add_option("--model", sm.model_path, "trained model JSON")->required();
    smooth->add_option("--data", sm.data_path, "dataset CSV")->required();
    smooth->add_option("--out", sm.out_path, "output curves CSV")->required();
    smooth->add_option("--grid", sm.grid, "uniform eval grid size (0 = observed times)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(simulate)) return cmd_simulate(sim);
        if (app.got_subcommand(ingest)) return cmd_ingest(ing);
        if (app.got_subcommand(train)) return cmd_train(tr);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(ev);
        if (app.got_subcommand(smooth)) return cmd_smooth(sm);
    } catch (const fae::TrainingFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
