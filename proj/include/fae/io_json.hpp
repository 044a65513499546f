#pragma once

// JSON codecs for every serialized artifact: model files, scenario
// sidecars, experiment reports and run configs. Schemas are documented in
// the README; all of them carry a config echo sufficient to re-run the
// producing command.

#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fae/baseline_ae.hpp"
#include "fae/eval.hpp"
#include "fae/experiment.hpp"
#include "fae/fae.hpp"
#include "fae/fpca.hpp"
#include "fae/simgen.hpp"

namespace fae {

using Json = nlohmann::json;

inline Json basis_to_json(const BasisSystem& basis) {
    Json j;
    j["kind"] = basis.kind == BasisKind::Bspline ? "bspline" : "fourier";
    j["t_min"] = basis.t_min;
    j["t_max"] = basis.t_max;
    j["num_basis"] = basis.num_basis;
    if (basis.kind == BasisKind::Bspline) j["order"] = basis.order;
    return j;
}

inline BasisSystem basis_from_json(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bspline")
        return make_bspline_basis(j.at("t_min").get<double>(), j.at("t_max").get<double>(),
                                  j.at("num_basis").get<int>(), j.value("order", 4));
    if (kind == "fourier")
        return make_fourier_basis(j.at("t_min").get<double>(), j.at("t_max").get<double>(),
                                  j.at("num_basis").get<int>());
    throw std::invalid_argument("basis_from_json: unknown kind '" + kind + "'");
}

inline Json optimizer_to_json(const OptimizerConfig& cfg) {
    Json j;
    j["kind"] = cfg.kind;
    j["learning_rate"] = cfg.learning_rate;
    if (cfg.kind == "sgd") {
        j["momentum"] = cfg.momentum;
    } else {
        j["beta1"] = cfg.beta1;
        j["beta2"] = cfg.beta2;
        j["epsilon"] = cfg.epsilon;
    }
    return j;
}

inline OptimizerConfig optimizer_from_json(const Json& j) {
    OptimizerConfig cfg;
    cfg.kind = j.value("kind", std::string("adam"));
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    return cfg;
}

inline Json layer_to_json(const DenseLayer& layer) {
    Json j;
    j["in"] = layer.in_dim();
    j["out"] = layer.out_dim();
    j["activation"] = activation_name(layer.activation);
    j["has_bias"] = layer.has_bias;
    j["weight"] = layer.weight.storage();  // row-major out x in
    if (layer.has_bias) j["bias"] = layer.bias;
    return j;
}

inline DenseLayer layer_from_json(const Json& j) {
    DenseLayer layer;
    const std::size_t in = j.at("in").get<std::size_t>();
    const std::size_t out = j.at("out").get<std::size_t>();
    layer.activation = parse_activation(j.at("activation").get<std::string>());
    layer.has_bias = j.at("has_bias").get<bool>();
    layer.weight = Matrix(out, in);
    const auto w = j.at("weight").get<std::vector<double>>();
    if (w.size() != in * out) throw std::invalid_argument("layer_from_json: weight size mismatch");
    std::copy(w.begin(), w.end(), layer.weight.data());
    if (layer.has_bias) {
        layer.bias = j.at("bias").get<std::vector<double>>();
        if (layer.bias.size() != out) throw std::invalid_argument("layer_from_json: bias size mismatch");
    }
    return layer;
}

inline Json layers_to_json(const LayerStack& layers) {
    Json arr = Json::array();
    for (const DenseLayer& l : layers) arr.push_back(layer_to_json(l));
    return arr;
}

inline LayerStack layers_from_json(const Json& arr) {
    LayerStack layers;
    for (const Json& j : arr) layers.push_back(layer_from_json(j));
    return layers;
}

inline Json fae_config_to_json(const FaeConfig& cfg) {
    Json j;
    j["input_basis"] = basis_to_json(cfg.input_basis);
    j["output_basis"] = basis_to_json(cfg.output_basis);
    j["hidden_sizes"] = cfg.hidden_sizes;
    j["activation"] = activation_name(cfg.activation);
    j["bottleneck_index"] = cfg.bottleneck_index;
    j["lambda"] = cfg.lambda;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["optimizer"] = optimizer_to_json(cfg.optimizer);
    j["init_sd"] = cfg.init_sd;
    j["seed"] = cfg.seed;
    return j;
}

inline FaeConfig fae_config_from_json(const Json& j) {
    FaeConfig cfg;
    cfg.input_basis = basis_from_json(j.at("input_basis"));
    cfg.output_basis = basis_from_json(j.at("output_basis"));
    cfg.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    cfg.activation = parse_activation(j.value("activation", std::string("sigmoid")));
    cfg.bottleneck_index = j.value("bottleneck_index", -1);
    cfg.lambda = j.value("lambda", 0.0);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    if (j.contains("optimizer")) cfg.optimizer = optimizer_from_json(j.at("optimizer"));
    cfg.init_sd = j.value("init_sd", cfg.init_sd);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

inline Json ae_config_to_json(const AeConfig& cfg) {
    Json j;
    j["hidden_sizes"] = cfg.hidden_sizes;
    j["activation"] = activation_name(cfg.activation);
    j["bottleneck_index"] = cfg.bottleneck_index;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["optimizer"] = optimizer_to_json(cfg.optimizer);
    j["init_sd"] = cfg.init_sd;
    j["seed"] = cfg.seed;
    return j;
}

inline AeConfig ae_config_from_json(const Json& j) {
    AeConfig cfg;
    cfg.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    cfg.activation = parse_activation(j.value("activation", std::string("sigmoid")));
    cfg.bottleneck_index = j.value("bottleneck_index", -1);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    if (j.contains("optimizer")) cfg.optimizer = optimizer_from_json(j.at("optimizer"));
    cfg.init_sd = j.value("init_sd", cfg.init_sd);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

inline Json fpca_options_to_json(const FpcaOptions& opt) {
    Json j;
    j["basis"] = basis_to_json(opt.basis);
    j["components"] = opt.components;
    j["ridge"] = opt.ridge;
    j["gram_resolution"] = opt.gram_resolution;
    return j;
}

inline FpcaOptions fpca_options_from_json(const Json& j) {
    FpcaOptions opt;
    opt.basis = basis_from_json(j.at("basis"));
    opt.components = j.value("components", 5);
    opt.ridge = j.value("ridge", 1e-9);
    opt.gram_resolution = j.value("gram_resolution", 20001);
    return opt;
}

// ---- model files --------------------------------------------------------

inline Json fae_model_to_json(const FaeModel& model) {
    Json j;
    j["schema"] = "fae-model/1";
    j["kind"] = "fae";
    j["config"] = fae_config_to_json(model.config);
    j["layers"] = layers_to_json(model.layers);
    return j;
}

inline FaeModel fae_model_from_json(const Json& j) {
    FaeModel model;
    model.config = fae_config_from_json(j.at("config"));
    model.layers = layers_from_json(j.at("layers"));
    model.bottleneck = resolve_bottleneck(model.config);
    return model;
}

inline Json ae_model_to_json(const AeModel& model) {
    Json j;
    j["schema"] = "fae-model/1";
    j["kind"] = "ae";
    j["config"] = ae_config_to_json(model.config);
    j["grid"] = model.grid;
    j["layers"] = layers_to_json(model.layers);
    return j;
}

inline AeModel ae_model_from_json(const Json& j) {
    AeModel model;
    model.config = ae_config_from_json(j.at("config"));
    model.grid = j.at("grid").get<std::vector<double>>();
    model.layers = layers_from_json(j.at("layers"));
    model.bottleneck = resolve_ae_bottleneck(model.config);
    return model;
}

inline Json fpca_model_to_json(const FpcaModel& model) {
    Json j;
    j["schema"] = "fae-model/1";
    j["kind"] = "fpca";
    j["basis"] = basis_to_json(model.basis);
    j["num_components"] = model.num_components();
    j["smoothing_ridge"] = model.smoothing_ridge;
    j["gram_resolution"] = model.gram_resolution;
    j["mean_coeffs"] = model.mean_coeffs;
    j["eigenvalues"] = model.eigenvalues;
    j["eigen_coeffs"] = model.eigen_coeffs.storage();  // row-major M x K
    return j;
}

inline FpcaModel fpca_model_from_json(const Json& j) {
    FpcaModel model;
    model.basis = basis_from_json(j.at("basis"));
    model.smoothing_ridge = j.value("smoothing_ridge", 1e-9);
    model.gram_resolution = j.value("gram_resolution", 20001);
    model.mean_coeffs = j.at("mean_coeffs").get<std::vector<double>>();
    model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    const std::size_t m = model.mean_coeffs.size();
    const std::size_t k = model.eigenvalues.size();
    const auto flat = j.at("eigen_coeffs").get<std::vector<double>>();
    if (flat.size() != m * k)
        throw std::invalid_argument("fpca_model_from_json: eigen_coeffs size mismatch");
    model.eigen_coeffs = Matrix(m, k);
    std::copy(flat.begin(), flat.end(), model.eigen_coeffs.data());
    model.gram = gram_matrix(model.basis, model.gram_resolution);
    return model;
}

using AnyModel = std::variant<FaeModel, AeModel, FpcaModel>;

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Json j;
    in >> j;
    return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline AnyModel load_any_model(const std::string& path) {
    const Json j = read_json_file(path);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "fae") return fae_model_from_json(j);
    if (kind == "ae") return ae_model_from_json(j);
    if (kind == "fpca") return fpca_model_from_json(j);
    throw std::invalid_argument("load_any_model: unknown model kind '" + kind + "'");
}

// ---- scenario sidecar ----------------------------------------------------

inline Json scenario_to_json(const ScenarioConfig& cfg) {
    Json j;
    j["n_samples"] = cfg.n_samples;
    j["latent_dim"] = cfg.latent_dim;
    j["n_components"] = cfg.n_components;
    j["component_means"] = cfg.component_means;
    j["component_covs"] = cfg.component_covs;
    j["component_var"] = cfg.component_var;
    j["mean_separation"] = cfg.mean_separation;
    j["map_kind"] = cfg.map_kind == MapKind::Linear ? "linear" : "one_hidden_sigmoid";
    j["map_hidden_width"] = cfg.map_hidden_width;
    j["map_seed"] = cfg.map_seed;
    j["map_init_sd"] = cfg.map_init_sd;
    j["gen_basis"] = basis_to_json(cfg.gen_basis);
    j["grid"] = cfg.grid;
    j["noise_sd"] = cfg.noise_sd;
    j["noise_relative"] = cfg.noise_relative;
    j["irregular_removals"] = cfg.irregular_removals;
    j["seed"] = cfg.seed;
    return j;
}

inline ScenarioConfig scenario_from_json(const Json& j) {
    ScenarioConfig cfg;
    cfg.n_samples = j.at("n_samples").get<int>();
    cfg.latent_dim = j.at("latent_dim").get<int>();
    cfg.n_components = j.value("n_components", 1);
    if (j.contains("component_means"))
        cfg.component_means = j.at("component_means").get<std::vector<Vector>>();
    if (j.contains("component_covs"))
        cfg.component_covs = j.at("component_covs").get<std::vector<Vector>>();
    cfg.component_var = j.value("component_var", cfg.component_var);
    cfg.mean_separation = j.value("mean_separation", cfg.mean_separation);
    const std::string map = j.value("map_kind", std::string("linear"));
    if (map == "linear")
        cfg.map_kind = MapKind::Linear;
    else if (map == "one_hidden_sigmoid")
        cfg.map_kind = MapKind::OneHiddenSigmoid;
    else
        throw std::invalid_argument("scenario_from_json: unknown map_kind '" + map + "'");
    cfg.map_hidden_width = j.value("map_hidden_width", cfg.map_hidden_width);
    cfg.map_seed = j.value("map_seed", cfg.map_seed);
    cfg.map_init_sd = j.value("map_init_sd", cfg.map_init_sd);
    cfg.gen_basis = basis_from_json(j.at("gen_basis"));
    cfg.grid = j.at("grid").get<std::vector<double>>();
    cfg.noise_sd = j.value("noise_sd", 0.0);
    cfg.noise_relative = j.value("noise_relative", false);
    cfg.irregular_removals = j.value("irregular_removals", 0);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

/// Writes the dataset CSV plus a sidecar holding the full scenario config
/// (with realized mixture means) and the frozen map-network weights.
inline void write_generated_dataset(const std::string& csv_path, const std::string& sidecar_path,
                                    const GeneratedData& data) {
    write_long_csv(csv_path, data.samples);
    Json j;
    j["schema"] = "fae-dataset/1";
    j["scenario"] = scenario_to_json(data.config);
    j["noise_sd_realized"] = data.noise_sd_realized;
    j["map_layers"] = layers_to_json(data.map_layers);
    write_json_file(sidecar_path, j);
}

// ---- experiment reports ---------------------------------------------------

inline Json report_to_json(const ExperimentReport& report, const Json& config_echo) {
    Json j;
    j["schema"] = "fae-report/1";
    j["config"] = config_echo;
    Json reps = Json::array();
    for (const ReplicateResult& r : report.replicates) {
        Json row;
        row["replicate"] = r.replicate;
        row["seed"] = r.seed;
        row["mse_p"] = r.mse_p;
        if (std::isfinite(r.p_classification))
            row["p_classification"] = r.p_classification;
        else
            row["p_classification"] = nullptr;
        reps.push_back(row);
    }
    j["replicates"] = reps;
    Json summary;
    summary["mse_p_mean"] = report.mse_p_mean;
    summary["mse_p_sd"] = report.mse_p_sd;
    if (std::isfinite(report.p_classification_mean)) {
        summary["p_classification_mean"] = report.p_classification_mean;
        summary["p_classification_sd"] = report.p_classification_sd;
    } else {
        summary["p_classification_mean"] = nullptr;
        summary["p_classification_sd"] = nullptr;
    }
    j["summary"] = summary;
    return j;
}

inline void write_report_csv(const std::string& path, const ExperimentReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "replicate,seed,mse_p,p_classification\n";
    for (const ReplicateResult& r : report.replicates) {
        out << r.replicate << ',' << r.seed << ',' << format_double(r.mse_p) << ',';
        if (std::isfinite(r.p_classification)) out << format_double(r.p_classification);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline Json experiment_config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["model"] = cfg.model_kind;
    if (cfg.model_kind == "fae") j["fae"] = fae_config_to_json(cfg.fae);
    if (cfg.model_kind == "ae") j["ae"] = ae_config_to_json(cfg.ae);
    if (cfg.model_kind == "fpca") j["fpca"] = fpca_options_to_json(cfg.fpca);
    j["train_fraction"] = cfg.train_fraction;
    j["replicates"] = cfg.replicates;
    j["master_seed"] = cfg.master_seed;
    return j;
}

}  // namespace fae
