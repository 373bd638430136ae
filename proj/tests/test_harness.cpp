#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "mixfreq/csv.hpp"
#include "mixfreq/experiment.hpp"
#include "mixfreq/json_io.hpp"
#include "support/test_panels.hpp"

using namespace mixfreq;

TEST_CASE("classify_step decomposes the multicast grid") {
    SUBCASE("worked cases at kappa = 3") {
        const StepClass a = classify_step(2, 3);
        CHECK(a.kind == StepKind::Nowcast);
        CHECK(a.ell == 2);
        CHECK(a.h == 1);

        const StepClass b = classify_step(3, 3);
        CHECK(b.kind == StepKind::LowFrequency);
        CHECK(b.h == 1);
        CHECK(b.ell == 0);

        const StepClass c = classify_step(4, 3);
        CHECK(c.kind == StepKind::HighFrequency);
        CHECK(c.h == 2);
        CHECK(c.ell == 1);
        CHECK(c.m == 1);
    }
    SUBCASE("every l in 1..H*kappa is covered exactly once, hf never at ell 0") {
        for (int kappa : {1, 3, 4, 12}) {
            const int H = 3;
            int nowcasts = 0, lf = 0, hf = 0;
            for (int l = 1; l <= H * kappa; ++l) {
                const StepClass s = classify_step(l, kappa);
                switch (s.kind) {
                    case StepKind::Nowcast:
                        ++nowcasts;
                        CHECK(s.ell == l);
                        break;
                    case StepKind::LowFrequency:
                        ++lf;
                        CHECK(s.ell == 0);
                        break;
                    case StepKind::HighFrequency:
                        ++hf;
                        CHECK(s.ell != 0);
                        break;
                }
            }
            CHECK(nowcasts == kappa - 1);
            CHECK(lf == H);
            CHECK(hf == H * kappa - (kappa - 1) - H);
        }
    }
    CHECK_THROWS_AS(classify_step(0, 3), std::invalid_argument);
}

TEST_CASE("window layouts") {
    WindowScheme scheme;
    scheme.initial_fit = 50;
    scheme.test_periods = 6;
    scheme.step = 1;

    SUBCASE("fixed fits once and owns every origin") {
        scheme.kind = WindowKind::Fixed;
        const auto windows = window_layout(scheme, 60);
        REQUIRE(windows.size() == 1);
        CHECK(windows[0].fit_begin == 0);
        CHECK(windows[0].fit_end == 50);
        CHECK(windows[0].origins == std::vector<int>{49, 50, 51, 52, 53, 54});
    }
    SUBCASE("expanding windows strictly grow") {
        scheme.kind = WindowKind::Expanding;
        const auto windows = window_layout(scheme, 60);
        REQUIRE(windows.size() == 6);
        for (std::size_t w = 0; w < windows.size(); ++w) {
            CHECK(windows[w].fit_begin == 0);
            CHECK(windows[w].fit_end == 50 + static_cast<int>(w));
            CHECK(windows[w].origins.size() == 1);
            if (w > 0) CHECK(windows[w].fit_end > windows[w - 1].fit_end);
        }
    }
    SUBCASE("rolling windows keep a constant length") {
        scheme.kind = WindowKind::Rolling;
        const auto windows = window_layout(scheme, 60);
        REQUIRE(windows.size() == 6);
        for (std::size_t w = 0; w < windows.size(); ++w) {
            CHECK(windows[w].fit_end - windows[w].fit_begin == 50);
            CHECK(windows[w].fit_begin == static_cast<int>(w));
        }
    }
    SUBCASE("step batches origins per window") {
        scheme.kind = WindowKind::Rolling;
        scheme.step = 4;
        const auto windows = window_layout(scheme, 60);
        REQUIRE(windows.size() == 2);
        CHECK(windows[0].origins.size() == 4);
        CHECK(windows[1].origins.size() == 2);
    }
    SUBCASE("start offsets the whole layout, leaving presample periods") {
        scheme.kind = WindowKind::Rolling;
        scheme.start = 8;
        const auto windows = window_layout(scheme, 66);
        CHECK(windows[0].fit_begin == 8);
        CHECK(windows[0].fit_end == 58);
        CHECK(windows[0].origins == std::vector<int>{57});
        CHECK(windows[5].fit_begin == 13);
        CHECK_THROWS_AS(window_layout(scheme, 63), std::invalid_argument);
    }
    SUBCASE("validation") {
        scheme.kind = WindowKind::Fixed;
        CHECK_THROWS_AS(window_layout(scheme, 55), std::invalid_argument);
    }
}


namespace {

// Write a small three-file data set + manifest + experiment config and
// return the config path.
struct TempExperiment {
    std::filesystem::path dir;
    std::string config_path;

    explicit TempExperiment(const std::string& name, const std::string& scheme,
                            int horizons = 2, bool with_failing_model = false) {
        namespace fs = std::filesystem;
        dir = fs::temp_directory_path() / name;
        fs::create_directories(dir);

        const mixfreq::testing::GrangerPanelOptions opt = [] {
            mixfreq::testing::GrangerPanelOptions o;
            o.periods = 70;
            o.kappa_max = 6;
            return o;
        }();
        const MixedPanel panel = mixfreq::testing::granger_panel(opt, 11);
        save_panel(panel, (dir / "panel.bin").string());

        nlohmann::json cfg;
        cfg["version"] = 1;
        cfg["data"] = {{"panel", (dir / "panel.bin").string()}};
        cfg["window"] = {{"scheme", scheme}, {"initial_fit", 52}, {"test", 18}, {"step", 1}};
        cfg["horizons"] = horizons;
        cfg["multicast"] = 2;
        nlohmann::json models = nlohmann::json::array();
        models.push_back({{"name", "mean"}, {"type", "mean"}});
        models.push_back({{"name", "ar1"}, {"type", "ar1"}});
        models.push_back({{"name", "esnA"}, {"type", "mfesn"}, {"preset", "singleESN [A]"}});
        models.push_back({{"name", "midas"},
                          {"type", "midas"},
                          {"p", 1},
                          {"lags", std::vector<int>{6, 2}}});
        if (with_failing_model)
            models.push_back({{"name", "midas_bad"},
                              {"type", "midas"},
                              {"p", 60},  // identifiability violation: needs T > 63 on a 52-period window
                              {"lags", std::vector<int>{6, 2}}});
        cfg["models"] = models;
        cfg["cv"] = {{"grid", std::vector<double>{1e-4, 1e-2, 1.0}},
                     {"initial_folds", 5},
                     {"window_folds", 3},
                     {"fold_size", 3}};
        cfg["tests"] = {{"mdm", true}, {"mcs", true}, {"umcs", true}};
        cfg["seed"] = 7;
        cfg["threads"] = 2;
        config_path = (dir / "config.json").string();
        jsonio::write_json_file(cfg, config_path);
    }

    ~TempExperiment() { std::filesystem::remove_all(dir); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("experiment config parsing and validation") {
    TempExperiment tmp("mixfreq_cfgtest", "fixed");
    const ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    CHECK(cfg.window.kind == WindowKind::Fixed);
    CHECK(cfg.models.size() == 4);
    CHECK(cfg.lambda_grid.size() == 3);
    CHECK(cfg.seed == 7);

    // unknown model type rejected
    nlohmann::json bad = jsonio::read_json_file(tmp.config_path);
    bad["models"].push_back({{"name", "x"}, {"type", "oracle"}});
    const std::string bad_path = (tmp.dir / "bad.json").string();
    jsonio::write_json_file(bad, bad_path);
    CHECK_THROWS_AS(load_experiment_config(bad_path), std::invalid_argument);

    // duplicate names rejected
    nlohmann::json dup = jsonio::read_json_file(tmp.config_path);
    dup["models"].push_back({{"name", "mean"}, {"type", "ar1"}});
    const std::string dup_path = (tmp.dir / "dup.json").string();
    jsonio::write_json_file(dup, dup_path);
    CHECK_THROWS_AS(load_experiment_config(dup_path), std::invalid_argument);
}

TEST_CASE("fixed-scheme experiment end to end") {
    TempExperiment tmp("mixfreq_fixedrun", "fixed");
    const ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    const ExperimentResult result = run_experiment(cfg);

    CHECK(result.exit_code() == 0);
    CHECK(result.failures.empty());
    REQUIRE(result.model_names.size() == 4);
    // 18 test origins minus (H - 1) = 1 trimmed at the end of the panel
    CHECK(result.origins.size() == 17);
    CHECK(result.horizons == std::vector<int>{1, 2});

    // loss-matrix invariant: same origin set for every horizon, and the mean
    // model's losses equal squared deviations from its fit mean
    result.losses.validate();
    for (int m = 0; m < 4; ++m) CHECK(result.forecasts[m].allFinite());

    // the mean forecast is flat across horizons
    for (int o = 0; o < static_cast<int>(result.origins.size()); ++o)
        CHECK(result.forecasts[0](0, o) == result.forecasts[0](1, o));

    // multicast entries cover nowcast/lf/hf kinds for the mfesn model
    std::set<StepKind> kinds;
    for (const MulticastEntry& e : result.multicast)
        if (e.model == "esnA") kinds.insert(e.step.kind);
    CHECK(kinds.size() == 3);

    // tests ran
    CHECK(result.mcs.has_value());
    CHECK(result.umcs.has_value());
    CHECK(!result.mdm.empty());
}

TEST_CASE("expanding windows refuse the uniform MCS") {
    TempExperiment tmp("mixfreq_ewrun", "expanding");
    ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    cfg.models.resize(2);  // benchmarks only, keep it fast
    const ExperimentResult result = run_experiment(cfg);
    CHECK(!result.umcs.has_value());
    CHECK(result.umcs_refusal ==
          "uMCS skipped: invalid under expanding-window estimation");
    CHECK(result.mcs.has_value());
}

TEST_CASE("failures degrade cells, not the run") {
    TempExperiment tmp("mixfreq_failrun", "fixed", 2, /*with_failing_model=*/true);
    const ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    const ExperimentResult result = run_experiment(cfg);
    CHECK(result.exit_code() == 1);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].model == "midas_bad");
    // the failed model's cells are NaN; everyone else is intact
    CHECK(!result.forecasts[4].allFinite());
    for (int m = 0; m < 4; ++m) CHECK(result.forecasts[m].allFinite());
    // tests exclude the failed model
    for (const std::string& name : result.mcs->models) CHECK(name != "midas_bad");
}

TEST_CASE("emitted tables: NA markers, relative msfe, json/csv agreement") {
    TempExperiment tmp("mixfreq_emitrun", "fixed", 2, /*with_failing_model=*/true);
    const ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    const ExperimentResult result = run_experiment(cfg);
    const std::string out = (tmp.dir / "out").string();
    emit_tables(result, cfg, out);

    const std::string metrics = slurp(out + "/metrics.csv");
    CHECK(metrics.find("NA") != std::string::npos);  // failed cells marked, never zero

    // the mean model's relative MSFE is exactly 1
    CsvTable table = parse_csv(metrics);
    const int c_model = table.column_index("model");
    const int c_rel = table.column_index("relative_msfe");
    bool saw_mean = false;
    for (const auto& row : table.rows)
        if (row[c_model] == "mean") {
            CHECK(std::stod(row[c_rel]) == doctest::Approx(1.0).epsilon(1e-15));
            saw_mean = true;
        }
    CHECK(saw_mean);

    // JSON and CSV agree to 12 significant digits
    const nlohmann::json mj = jsonio::read_json_file(out + "/metrics.json");
    std::size_t ji = 0;
    for (const auto& row : table.rows) {
        const auto& entry = mj.at(ji++);
        CHECK(entry.at("model").get<std::string>() == row[c_model]);
        if (row[c_rel] != "NA") {
            const double a = entry.at("relative_msfe").get<double>();
            const double b = std::stod(row[c_rel]);
            CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), 1.0));
        }
    }

    CHECK(std::filesystem::exists(out + "/forecasts.csv"));
    CHECK(std::filesystem::exists(out + "/cumulative.csv"));
    CHECK(std::filesystem::exists(out + "/rmsfe_by_horizon.csv"));
    CHECK(std::filesystem::exists(out + "/multicast.csv"));
    CHECK(std::filesystem::exists(out + "/mdm.csv"));
    CHECK(std::filesystem::exists(out + "/tests.json"));
    CHECK(std::filesystem::exists(out + "/run.json"));
}

TEST_CASE("rolling windows re-fit per step and stay deterministic") {
    TempExperiment tmp("mixfreq_rwrun", "rolling");
    ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    cfg.models.resize(3);
    cfg.horizons = 1;
    const ExperimentResult a = run_experiment(cfg);
    const ExperimentResult b = run_experiment(cfg);
    for (std::size_t m = 0; m < a.forecasts.size(); ++m)
        CHECK((a.forecasts[m].array() == b.forecasts[m].array()).all());

    // thread count does not change results
    cfg.threads = 1;
    const ExperimentResult c = run_experiment(cfg);
    for (std::size_t m = 0; m < a.forecasts.size(); ++m)
        CHECK((a.forecasts[m].array() == c.forecasts[m].array()).all());
}

TEST_CASE("initial penalty selection can reach into the presample") {
    // a start offset plus cv.extra_span changes only the first window's CV
    TempExperiment tmp("mixfreq_presample", "fixed");
    ExperimentConfig cfg = load_experiment_config(tmp.config_path);
    cfg.models = {cfg.models[2]};  // the mfesn entry
    cfg.horizons = 1;
    cfg.multicast = 0;
    cfg.window.start = 10;
    cfg.window.initial_fit = 42;
    cfg.window.test_periods = 12;
    cfg.cv_extra_span = 10;
    const ExperimentResult with_presample = run_experiment(cfg);
    CHECK(with_presample.exit_code() == 0);
    CHECK(with_presample.origins.front() == 51);
    cfg.cv_extra_span = 0;
    const ExperimentResult without = run_experiment(cfg);
    CHECK(without.exit_code() == 0);
    // both runs complete on the same grid; the selections may or may not
    // coincide, the contract is that the presample affects CV only
    CHECK(with_presample.origins == without.origins);
}
