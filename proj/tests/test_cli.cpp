#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fae/io_json.hpp"
#include "fae/simgen.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace fae;

namespace {

const fs::path kTmp = "cli_tmp";

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
    const std::string cmd = std::string("\"") + FAE_CLI_PATH + "\" " + args + " >" + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TmpDir {
    TmpDir() {
        fs::remove_all(kTmp);
        fs::create_directories(kTmp);
    }
};

void write_small_dataset(const fs::path& csv, int n = 80, std::uint64_t seed = 3) {
    ScenarioConfig cfg = preset("S1_1");
    cfg.n_samples = n;
    cfg.seed = seed;
    write_long_csv(csv.string(), generate(cfg).samples);
}

void write_fae_config(const fs::path& path, int epochs = 40, const std::string& opt = "adam",
                      double lr = 0.02) {
    Json j;
    j["model"] = "fae";
    j["input_basis"] = basis_to_json(make_bspline_basis(0.0, 1.0, 8, 4));
    j["output_basis"] = basis_to_json(make_bspline_basis(0.0, 1.0, 8, 4));
    j["hidden_sizes"] = std::vector<int>{5};
    j["activation"] = "identity";
    j["epochs"] = epochs;
    j["batch_size"] = 16;
    j["optimizer"] = {{"kind", opt}, {"learning_rate", lr}};
    j["seed"] = 11;
    write_json_file(path.string(), j);
}

}  // namespace

TEST_CASE("simulate presets produce the published dataset shapes") {
    TmpDir tmp;
    SUBCASE("S1_1 writes 6000 samples with 21 points each") {
        REQUIRE(run_cli("simulate --preset S1_1 --out " + (kTmp / "s11").string()) == 0);
        const Dataset data = read_long_csv((kTmp / "s11" / "dataset.csv").string());
        CHECK(data.size() == 6000);
        for (std::size_t i = 0; i < data.size(); i += 500) CHECK(data[i].times.size() == 21);
        CHECK(fs::exists(kTmp / "s11" / "dataset.json"));
    }
    SUBCASE("S2_2 samples carry 26 irregular observations") {
        REQUIRE(run_cli("simulate --preset S2_2 --out " + (kTmp / "s22").string()) == 0);
        const Dataset data = read_long_csv((kTmp / "s22" / "dataset.csv").string());
        CHECK(data.size() == 3000);
        for (std::size_t i = 0; i < data.size(); i += 250) CHECK(data[i].times.size() == 26);
    }
    SUBCASE("missing or unknown preset is a usage error") {
        CHECK(run_cli("simulate --out " + (kTmp / "x").string()) == 2);
        CHECK(run_cli("simulate --preset NOPE --out " + (kTmp / "x").string()) == 2);
    }
}

TEST_CASE("ingest round-trips and centers") {
    TmpDir tmp;
    // a dataset shaped like the El Nino workload: 267 yearly curves at 12
    // monthly points, 4 location labels
    Dataset elnino;
    for (int i = 0; i < 267; ++i) {
        Vector times(12), values(12);
        for (int j = 0; j < 12; ++j) {
            times[static_cast<std::size_t>(j)] = j / 11.0;
            values[static_cast<std::size_t>(j)] =
                20.0 + std::sin(2.0 * j / 11.0 + i * 0.01) + 0.3 * (i % 4);
        }
        elnino.push_back(make_sample(times, values, i % 4 + 1));
    }
    const fs::path raw = kTmp / "elnino.csv";
    write_long_csv(raw.string(), elnino);

    SUBCASE("plain ingest round-trips values bit-exactly") {
        REQUIRE(run_cli("ingest --in " + raw.string() + " --out " + (kTmp / "plain").string()) == 0);
        const Dataset back = read_long_csv((kTmp / "plain" / "dataset.csv").string());
        REQUIRE(back.size() == elnino.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].times.size() == 12);
            CHECK(*back[i].label == i % 4 + 1);
            for (std::size_t j = 0; j < 12; ++j) {
                CHECK(back[i].times[j] == elnino[i].times[j]);
                CHECK(back[i].values[j] == elnino[i].values[j]);
            }
        }
    }
    SUBCASE("centering is idempotent and stores the mean curve") {
        REQUIRE(run_cli("ingest --in " + raw.string() + " --center --out " +
                        (kTmp / "c1").string()) == 0);
        const Dataset centered = read_long_csv((kTmp / "c1" / "dataset.csv").string());
        const MeanCurve mean = pointwise_mean(centered);
        for (double v : mean.values) CHECK(std::abs(v) < 1e-12);
        const Json meta = read_json_file((kTmp / "c1" / "ingest.json").string());
        CHECK(meta.at("centered").get<bool>());
        CHECK(meta.at("mean").at("times").size() == 12);

        REQUIRE(run_cli("ingest --in " + (kTmp / "c1" / "dataset.csv").string() +
                        " --center --out " + (kTmp / "c2").string()) == 0);
        const Dataset twice = read_long_csv((kTmp / "c2" / "dataset.csv").string());
        const MeanCurve mean2 = pointwise_mean(twice);
        for (double v : mean2.values) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("malformed rows report the line number") {
        const fs::path bad = kTmp / "bad.csv";
        std::ofstream out(bad);
        out << "sample_id,t,value\n0,0.0,1.0\n0,zzz,2.0\n";
        out.close();
        const fs::path log = kTmp / "bad.log";
        CHECK(run_cli("ingest --in " + bad.string() + " --out " + (kTmp / "badout").string(),
                      log.string()) == 2);
        CHECK(slurp(log).find("line 3") != std::string::npos);
    }
}

TEST_CASE("train writes models and loss logs deterministically") {
    TmpDir tmp;
    const fs::path data = kTmp / "train_data.csv";
    write_small_dataset(data);
    const fs::path cfg = kTmp / "fae.json";
    write_fae_config(cfg);

    SUBCASE("fae smoke: model, loss log, monotone-trend history") {
        REQUIRE(run_cli("train --model fae --data " + data.string() + " --config " + cfg.string() +
                        " --out " + (kTmp / "m.json").string() + " --loss-log " +
                        (kTmp / "loss.txt").string()) == 0);
        CHECK(fs::exists(kTmp / "m.json"));
        std::ifstream loss(kTmp / "loss.txt");
        Vector history;
        double v;
        while (loss >> v) history.push_back(v);
        REQUIRE(history.size() == 40);
        CHECK(history.back() < history.front());  // downward trend on a sane config
    }
    SUBCASE("identical seeds produce byte-identical model files") {
        REQUIRE(run_cli("train --model fae --data " + data.string() + " --config " + cfg.string() +
                        " --seed 7 --out " + (kTmp / "m1.json").string()) == 0);
        REQUIRE(run_cli("train --model fae --data " + data.string() + " --config " + cfg.string() +
                        " --seed 7 --out " + (kTmp / "m2.json").string()) == 0);
        CHECK(slurp(kTmp / "m1.json") == slurp(kTmp / "m2.json"));
    }
    SUBCASE("fpca model has descending eigenvalues") {
        Json fcfg;
        fcfg["model"] = "fpca";
        fcfg["basis"] = basis_to_json(make_bspline_basis(0.0, 1.0, 8, 4));
        fcfg["components"] = 5;
        write_json_file((kTmp / "fpca.json").string(), fcfg);
        REQUIRE(run_cli("train --model fpca --data " + data.string() + " --config " +
                        (kTmp / "fpca.json").string() + " --out " + (kTmp / "pf.json").string()) == 0);
        const Json model = read_json_file((kTmp / "pf.json").string());
        const auto eig = model.at("eigenvalues").get<std::vector<double>>();
        REQUIRE(eig.size() == 5);
        for (std::size_t i = 0; i + 1 < eig.size(); ++i) CHECK(eig[i] >= eig[i + 1]);
    }
    SUBCASE("divergence exits with code 3") {
        write_fae_config(kTmp / "diverge.json", 60, "sgd", 1e9);
        CHECK(run_cli("train --model fae --data " + data.string() + " --config " +
                      (kTmp / "diverge.json").string() + " --out " + (kTmp / "d.json").string()) == 3);
    }
    SUBCASE("mismatched config model is a usage error") {
        CHECK(run_cli("train --model ae --data " + data.string() + " --config " + cfg.string() +
                      " --out " + (kTmp / "x.json").string()) == 2);
    }
}

TEST_CASE("evaluate emits reproducible reports") {
    TmpDir tmp;
    const fs::path data = kTmp / "eval_data.csv";
    write_small_dataset(data, 60);
    const fs::path cfg = kTmp / "fae.json";
    write_fae_config(cfg, 25);

    const std::string base = "evaluate --model fae --data " + data.string() + " --config " +
                             cfg.string() + " --train-frac 0.8 --replicates 2 --seed 5 --out ";
    REQUIRE(run_cli(base + (kTmp / "r1").string()) == 0);
    REQUIRE(run_cli(base + (kTmp / "r2").string() + " --jobs 2") == 0);

    SUBCASE("reruns are byte-identical, independent of --jobs") {
        CHECK(slurp(kTmp / "r1.json") == slurp(kTmp / "r2.json"));
        CHECK(slurp(kTmp / "r1.csv") == slurp(kTmp / "r2.csv"));
    }
    SUBCASE("summary recomputes from the replicate rows") {
        const Json report = read_json_file((kTmp / "r1.json").string());
        Vector mses;
        for (const Json& row : report.at("replicates"))
            mses.push_back(row.at("mse_p").get<double>());
        REQUIRE(mses.size() == 2);
        CHECK(report.at("summary").at("mse_p_mean").get<double>() ==
              doctest::Approx(mean_of(mses)));
        CHECK(report.at("summary").at("mse_p_sd").get<double>() == doctest::Approx(sd_of(mses)));
    }
}

TEST_CASE("model files round-trip to identical predictions") {
    TmpDir tmp;
    ScenarioConfig scenario = preset("S1_1");
    scenario.n_samples = 50;
    scenario.seed = 77;
    const Dataset data = generate(scenario).samples;

    SUBCASE("fae") {
        FaeConfig cfg;
        cfg.input_basis = make_bspline_basis(0.0, 1.0, 8, 4);
        cfg.output_basis = cfg.input_basis;
        cfg.hidden_sizes = {4};
        cfg.activation = Activation::Softplus;
        cfg.epochs = 30;
        cfg.seed = 5;
        const FaeModel model = fae_train(data, cfg).model;
        write_json_file((kTmp / "fae.json").string(), fae_model_to_json(model));
        const FaeModel back = fae_model_from_json(read_json_file((kTmp / "fae.json").string()));
        const FaeForward a = fae_forward(model, data.front());
        const FaeForward b = fae_forward(back, data.front());
        for (std::size_t j = 0; j < a.reconstruction.size(); ++j)
            CHECK(a.reconstruction[j] == b.reconstruction[j]);
        for (std::size_t q = 0; q < a.representation.size(); ++q)
            CHECK(a.representation[q] == b.representation[q]);
    }
    SUBCASE("fpca") {
        const FpcaModel model = fpca_fit_dataset(data, make_bspline_basis(0.0, 1.0, 8, 4), 4);
        write_json_file((kTmp / "fpca.json").string(), fpca_model_to_json(model));
        const FpcaModel back = fpca_model_from_json(read_json_file((kTmp / "fpca.json").string()));
        const Vector sa = fpca_scores(model, data.front());
        const Vector sb = fpca_scores(back, data.front());
        for (std::size_t k = 0; k < sa.size(); ++k) CHECK(sa[k] == sb[k]);
    }
    SUBCASE("ae") {
        const Vector grid = union_grid(data);
        std::vector<MaskedVector> mv;
        for (const FunctionalSample& s : data) mv.push_back(to_grid(s, grid));
        AeConfig cfg;
        cfg.hidden_sizes = {4};
        cfg.epochs = 30;
        cfg.seed = 5;
        const AeModel model = ae_train(mv, grid, cfg).model;
        write_json_file((kTmp / "ae.json").string(), ae_model_to_json(model));
        const AnyModel back = load_any_model((kTmp / "ae.json").string());
        REQUIRE(std::holds_alternative<AeModel>(back));
        const Vector a = ae_reconstruct(model, mv.front());
        const Vector b = ae_reconstruct(std::get<AeModel>(back), mv.front());
        for (std::size_t j = 0; j < a.size(); ++j) CHECK(a[j] == b[j]);
    }
}

TEST_CASE("simulate accepts a scenario config file and writes a full sidecar") {
    TmpDir tmp;
    ScenarioConfig scenario = preset("S1_1");
    scenario.n_samples = 30;
    scenario.seed = 31;
    write_json_file((kTmp / "scenario.json").string(), scenario_to_json(scenario));
    REQUIRE(run_cli("simulate --config " + (kTmp / "scenario.json").string() + " --out " +
                    (kTmp / "gen").string()) == 0);
    const Dataset data = read_long_csv((kTmp / "gen" / "dataset.csv").string());
    CHECK(data.size() == 30);

    const Json sidecar = read_json_file((kTmp / "gen" / "dataset.json").string());
    CHECK(sidecar.at("scenario").at("n_samples").get<int>() == 30);
    CHECK(sidecar.at("scenario").at("component_means").size() == 3);
    CHECK(sidecar.contains("map_layers"));  // frozen map weights for replay
    CHECK(sidecar.contains("noise_sd_realized"));

    // the sidecar scenario replays to the identical dataset
    const ScenarioConfig replay = scenario_from_json(sidecar.at("scenario"));
    const Dataset again = generate(replay).samples;
    REQUIRE(again.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data[i].values.size(); ++j)
            CHECK(again[i].values[j] == data[i].values[j]);
}

TEST_CASE("evaluate can dump replicate-0 curves on an evaluation grid") {
    TmpDir tmp;
    const fs::path data = kTmp / "curves_data.csv";
    write_small_dataset(data, 50);
    write_fae_config(kTmp / "fae.json", 20);
    REQUIRE(run_cli("evaluate --model fae --data " + data.string() + " --config " +
                    (kTmp / "fae.json").string() +
                    " --replicates 1 --seed 4 --out " + (kTmp / "rep").string() +
                    " --curves-out " + (kTmp / "curves.csv").string() + " --eval-grid 41") == 0);
    const std::string curves = slurp(kTmp / "curves.csv");
    CHECK(curves.find("observed") != std::string::npos);
    CHECK(curves.find("reconstructed") != std::string::npos);
    CHECK(fs::exists(kTmp / "curves.csv.meta.json"));

    // the AE reconstructs only on its native grid
    Json acfg;
    acfg["model"] = "ae";
    acfg["hidden_sizes"] = std::vector<int>{3};
    acfg["epochs"] = 5;
    write_json_file((kTmp / "ae.json").string(), acfg);
    CHECK(run_cli("evaluate --model ae --data " + data.string() + " --config " +
                  (kTmp / "ae.json").string() + " --replicates 1 --seed 4 --out " +
                  (kTmp / "aerep").string() + " --curves-out " + (kTmp / "aec.csv").string() +
                  " --eval-grid 41") == 2);
    CHECK(run_cli("evaluate --model ae --data " + data.string() + " --config " +
                  (kTmp / "ae.json").string() + " --replicates 1 --seed 4 --out " +
                  (kTmp / "aerep2").string() + " --curves-out " + (kTmp / "aec2.csv").string()) == 0);
}

TEST_CASE("smooth evaluates curves and honors the AE grid limitation") {
    TmpDir tmp;
    const fs::path data = kTmp / "smooth_data.csv";
    write_small_dataset(data, 40);
    const fs::path fae_cfg = kTmp / "fae.json";
    write_fae_config(fae_cfg, 20);
    REQUIRE(run_cli("train --model fae --data " + data.string() + " --config " + fae_cfg.string() +
                    " --out " + (kTmp / "fm.json").string()) == 0);

    SUBCASE("observed-time and fine-grid output") {
        REQUIRE(run_cli("smooth --model " + (kTmp / "fm.json").string() + " --data " +
                        data.string() + " --out " + (kTmp / "obs.csv").string()) == 0);
        REQUIRE(run_cli("smooth --model " + (kTmp / "fm.json").string() + " --data " +
                        data.string() + " --grid 201 --out " + (kTmp / "fine.csv").string()) == 0);
        const std::string fine = slurp(kTmp / "fine.csv");
        CHECK(fine.find("nan") == std::string::npos);
        CHECK(fine.find("reconstructed") != std::string::npos);
        // 10x finer grid means 201 reconstructed rows per sample
        std::size_t count = 0, pos = 0;
        while ((pos = fine.find(",reconstructed", pos)) != std::string::npos) {
            ++count;
            pos += 1;
        }
        CHECK(count == 40 * 201);
    }
    SUBCASE("AE models reject off-grid evaluation") {
        Json acfg;
        acfg["model"] = "ae";
        acfg["hidden_sizes"] = std::vector<int>{5};
        acfg["activation"] = "identity";
        acfg["epochs"] = 10;
        acfg["optimizer"] = {{"kind", "adam"}, {"learning_rate", 0.01}};
        write_json_file((kTmp / "ae.json").string(), acfg);
        REQUIRE(run_cli("train --model ae --data " + data.string() + " --config " +
                        (kTmp / "ae.json").string() + " --out " + (kTmp / "am.json").string()) == 0);
        CHECK(run_cli("smooth --model " + (kTmp / "am.json").string() + " --data " + data.string() +
                      " --grid 201 --out " + (kTmp / "ae_fine.csv").string()) == 2);
        CHECK(run_cli("smooth --model " + (kTmp / "am.json").string() + " --data " + data.string() +
                      " --out " + (kTmp / "ae_native.csv").string()) == 0);
    }
}
