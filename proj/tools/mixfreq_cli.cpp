// mixfreq command-line driver: ingest, fit, forecast, evaluate, compare,
// robustness and run (the full experiment protocol).
//
// Exit codes: 0 success, 1 partial cell failures in `run`, 2 configuration
// or usage errors.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "mixfreq/benchmarks.hpp"
#include "mixfreq/comparison.hpp"
#include "mixfreq/csv.hpp"
#include "mixfreq/dfm.hpp"
#include "mixfreq/experiment.hpp"
#include "mixfreq/json_io.hpp"
#include "mixfreq/mfesn.hpp"
#include "mixfreq/midas.hpp"
#include "mixfreq/panel.hpp"
#include "mixfreq/parallel.hpp"

using mixfreq::jsonio::write_json_file;

namespace {

using namespace mixfreq;

struct GlobalOptions {
    std::string config;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 0;  // 0: MIXFREQ_THREADS or hardware default
};

MixedPanel load_any_panel(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
        return load_panel_from_manifest(path);
    return load_panel(path);
}

int cmd_ingest(const GlobalOptions& g, const std::string& manifest, const std::string& out) {
    const MixedPanel panel = load_panel_from_manifest(manifest);
    save_panel(panel, out);
    std::cout << "panel: " << panel.periods() << " periods, " << panel.n_groups()
              << " groups, kappa_max " << panel.kappa_max().kappa << ", written to " << out
              << "\n";
    (void)g;
    return 0;
}

int cmd_fit(const GlobalOptions& g, const std::string& data, const std::string& model_type,
            const std::string& preset_name, int fit_end, const std::string& out) {
    const MixedPanel panel = load_any_panel(data);
    const int end = fit_end > 0 ? fit_end : panel.periods();
    if (model_type == "mfesn") {
        MfesnFitConfig fc;
        fc.seed = g.seed;
        fc.threads = resolve_threads(g.threads);
        const MfesnModel model = fit_mfesn(panel, 0, end, preset(preset_name), fc);
        save_mfesn(model, out);
    } else if (model_type == "midas") {
        MidasFitConfig fc;
        fc.seed = g.seed;
        fc.threads = resolve_threads(g.threads);
        fc.lags_per_group.assign(panel.n_groups(), 0);
        for (int l = 0; l < panel.n_groups(); ++l)
            fc.lags_per_group[l] = static_cast<int>(panel.group(l).kappa.kappa) * 3;
        save_midas(fit_midas(panel, 0, end, fc), out);
    } else if (model_type == "dfm") {
        DfmFitConfig fc;
        fc.seed = g.seed;
        fc.threads = resolve_threads(g.threads);
        save_dfm(fit_dfm(panel, 0, end, fc), out);
    } else if (model_type == "mean") {
        save_benchmark(fit_mean(panel.target().head(end)), out);
    } else if (model_type == "ar1") {
        save_benchmark(fit_ar1(panel.target().head(end)), out);
    } else {
        throw CLI::ValidationError("unknown model type '" + model_type + "'");
    }
    std::cout << "model written to " << out << "\n";
    return 0;
}

int cmd_forecast(const std::string& data, const std::string& model_path, int origin, int h,
                 const std::string& type) {
    const MixedPanel panel = load_any_panel(data);
    const int o = origin >= 0 ? origin : panel.periods() - 1;
    double value = 0.0;
    if (type == "mfesn")
        value = forecast_mfesn(load_mfesn(model_path), panel, o, h);
    else if (type == "midas")
        value = forecast_midas(load_midas(model_path), panel, o, h);
    else if (type == "dfm")
        value = forecast_dfm_target(load_dfm(model_path), panel, o, 0, h);
    else if (type == "mean")
        value = forecast_mean(load_mean(model_path), h);
    else if (type == "ar1")
        value = forecast_ar1(load_ar1(model_path), panel.target()[o], h);
    else
        throw CLI::ValidationError("unknown model type '" + type + "'");
    std::cout << format_double(value) << "\n";
    return 0;
}

int cmd_evaluate(const std::string& forecasts_csv, const std::string& out) {
    // per-model metrics from a long-form forecast table (forecasts.csv shape)
    const CsvTable table = read_csv(forecasts_csv);
    const int c_model = table.column_index("model");
    const int c_h = table.column_index("horizon");
    const int c_actual = table.column_index("actual");
    const int c_forecast = table.column_index("forecast");
    if (c_model < 0 || c_h < 0 || c_actual < 0 || c_forecast < 0)
        throw std::runtime_error("evaluate: CSV must have model,horizon,actual,forecast columns");

    std::map<std::pair<std::string, int>, std::vector<double>> sq;
    for (const auto& row : table.rows) {
        if (row[c_actual] == "NA" || row[c_forecast] == "NA") continue;
        const double e = std::stod(row[c_actual]) - std::stod(row[c_forecast]);
        sq[{row[c_model], std::stoi(row[c_h])}].push_back(e * e);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& [key, v] : sq) {
        Eigen::VectorXd sqe = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
        rows.push_back({key.first, std::to_string(key.second), format_double(msfe(sqe)),
                        format_double(rmsfe(sqe))});
    }
    write_csv(out, {"model", "horizon", "msfe", "rmsfe"}, rows);
    std::cout << "metrics written to " << out << "\n";
    return 0;
}

int cmd_compare(const GlobalOptions& g, const std::string& forecasts_csv, const std::string& out) {
    const CsvTable table = read_csv(forecasts_csv);
    const int c_model = table.column_index("model");
    const int c_origin = table.column_index("origin");
    const int c_h = table.column_index("horizon");
    const int c_actual = table.column_index("actual");
    const int c_forecast = table.column_index("forecast");
    if (c_model < 0 || c_origin < 0 || c_h < 0 || c_actual < 0 || c_forecast < 0)
        throw std::runtime_error(
            "compare: CSV must have model,origin,horizon,actual,forecast columns");

    std::map<std::string, std::map<std::pair<int, int>, double>> data;  // model -> (h, origin) -> sq
    std::set<int> horizons, origins;
    for (const auto& row : table.rows) {
        if (row[c_actual] == "NA" || row[c_forecast] == "NA") continue;
        const double e = std::stod(row[c_actual]) - std::stod(row[c_forecast]);
        const int h = std::stoi(row[c_h]);
        const int o = std::stoi(row[c_origin]);
        data[row[c_model]][{h, o}] = e * e;
        horizons.insert(h);
        origins.insert(o);
    }

    LossMatrix lm;
    lm.horizons.assign(horizons.begin(), horizons.end());
    lm.origins.assign(origins.begin(), origins.end());
    for (const auto& [model, cells] : data) {
        Eigen::MatrixXd m(lm.horizons.size(), lm.origins.size());
        bool complete = true;
        for (std::size_t hi = 0; hi < lm.horizons.size(); ++hi)
            for (std::size_t oi = 0; oi < lm.origins.size(); ++oi) {
                const auto it = cells.find({lm.horizons[hi], lm.origins[oi]});
                if (it == cells.end()) {
                    complete = false;
                } else {
                    m(hi, oi) = it->second;
                }
            }
        if (complete) {
            lm.models.push_back(model);
            lm.losses.push_back(std::move(m));
        }
    }
    if (lm.models.size() < 2) throw std::runtime_error("compare: need two complete models");

    nlohmann::json doc;
    McsConfig mc;
    mc.seed = g.seed;
    const McsResult mcs = mcs_test(lm, 0, mc);
    doc["mcs"] = {{"models", mcs.models},
                  {"p_values", mcs.mcs_pvalues},
                  {"included_75", mcs.included(0.75)},
                  {"included_90", mcs.included(0.90)}};
    if (lm.horizons.size() >= 2) {
        UmcsConfig uc;
        uc.seed = g.seed;
        const UmcsResult umcs = umcs_test(lm, uc);
        doc["umcs"] = {{"models", umcs.models},
                       {"p_values", umcs.mcs_pvalues},
                       {"included_75", umcs.included(0.75)},
                       {"included_90", umcs.included(0.90)},
                       {"config", {{"bootstrap", umcs.config.bootstrap},
                                   {"inner_alpha", umcs.config.inner_alpha},
                                   {"kernel", umcs.config.kernel}}}};
    }
    write_json_file(doc, out);
    std::cout << "comparison written to " << out << "\n";
    return 0;
}

// MFESN flavor: reservoir-resampling ensemble with pointwise quantile bands.
int cmd_robustness_mfesn(const GlobalOptions& g, const MixedPanel& panel,
                         const std::string& preset_name, int B, int fit_end,
                         const std::string& out) {
    const ModelPreset& p = preset(preset_name);
    WindowScheme scheme;
    scheme.kind = WindowKind::Fixed;
    scheme.initial_fit = fit_end > 0 ? fit_end : (3 * panel.periods()) / 4;
    scheme.test_periods = panel.periods() - scheme.initial_fit;
    MfesnFitConfig fc;
    fc.seed = g.seed;
    fc.threads = resolve_threads(g.threads);
    const ForecastEnsemble ensemble = resample_harness(panel, p, B, scheme, fc);

    std::vector<std::vector<std::string>> rows;
    for (std::size_t s = 0; s < ensemble.origins.size(); ++s) {
        std::vector<std::string> row = {std::to_string(ensemble.origins[s])};
        for (int q = 0; q < 5; ++q)
            row.push_back(format_double(ensemble.quantiles(q, static_cast<Eigen::Index>(s))));
        rows.push_back(std::move(row));
    }
    write_csv(out, {"origin", "q05", "q25", "q50", "q75", "q95"}, rows);
    int failed = 0;
    for (const auto& e : ensemble.errors)
        if (!e.empty()) ++failed;
    std::cout << "ensemble of " << B << " replications (" << failed << " failed), bands written to "
              << out << "\n";
    return failed == 0 ? 0 : 1;
}

// MIDAS flavor: Sobol multistart with the per-start minimizer report.
int cmd_robustness_midas(const GlobalOptions& g, const MixedPanel& panel, int p, int starts,
                         int fit_end, const std::string& out) {
    MidasFitConfig fc;
    fc.p = p;
    fc.multistart = true;
    fc.starts = starts;
    fc.seed = g.seed;
    fc.threads = resolve_threads(g.threads);
    fc.lags_per_group.assign(panel.n_groups(), 0);
    for (int l = 0; l < panel.n_groups(); ++l)
        fc.lags_per_group[l] = static_cast<int>(panel.group(l).kappa.kappa) * 3;
    const int end = fit_end > 0 ? fit_end : panel.periods();
    MidasFitReport report;
    const MidasModel model = fit_midas(panel, 0, end, fc, &report);
    write_midas_report(report, out);
    std::cout << report.starts.size() << " starts, best loss " << format_double(model.loss)
              << ", report written to " << out << "\n";
    return 0;
}

int cmd_robustness(const GlobalOptions& g, const std::string& data, const std::string& type,
                   const std::string& preset_name, int B, int p, int fit_end,
                   const std::string& out) {
    const MixedPanel panel = load_any_panel(data);
    if (type == "mfesn") return cmd_robustness_mfesn(g, panel, preset_name, B, fit_end, out);
    if (type == "midas") return cmd_robustness_midas(g, panel, p, B, fit_end, out);
    throw CLI::ValidationError("robustness supports --type mfesn or midas");
}

int cmd_run(const GlobalOptions& g) {
    if (g.config.empty()) throw CLI::ValidationError("run requires --config");
    ExperimentConfig cfg = load_experiment_config(g.config);
    if (g.seed != 0) cfg.seed = g.seed;
    if (g.threads > 0) cfg.threads = g.threads;
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    const ExperimentResult result = run_experiment(cfg);
    emit_tables(result, cfg, cfg.out_dir);
    for (const CellFailure& f : result.failures)
        std::cerr << "cell failure: model " << f.model << ", window " << f.window << ": "
                  << f.error << "\n";
    std::cout << "results written to " << cfg.out_dir << "\n";
    return result.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-frequency forecasting toolkit"};
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config, "experiment configuration file (JSON)");
    app.add_option("--seed", g.seed, "seed override");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--threads", g.threads, "worker threads (0: MIXFREQ_THREADS or auto)");

    std::string manifest, data, model_path, model_type = "mfesn", preset_name = "singleESN [A]";
    std::string out = "out.csv";
    int fit_end = 0, origin = -1, horizon = 1, replications = 50;

    auto* ingest = app.add_subcommand("ingest", "build a panel from a CSV manifest");
    ingest->add_option("manifest", manifest, "manifest JSON")->required();
    ingest->add_option("out", out, "output panel file")->required();

    auto* fit = app.add_subcommand("fit", "fit one model on a panel");
    fit->add_option("data", data, "panel file or manifest JSON")->required();
    fit->add_option("out", out, "output model file")->required();
    fit->add_option("--type", model_type, "mean|ar1|mfesn|midas|dfm");
    fit->add_option("--preset", preset_name, "MFESN preset name");
    fit->add_option("--fit-end", fit_end, "periods used for fitting (default: all)");

    auto* forecast = app.add_subcommand("forecast", "forecast from a saved model");
    forecast->add_option("data", data, "panel file or manifest JSON")->required();
    forecast->add_option("model", model_path, "model file")->required();
    forecast->add_option("--type", model_type, "mean|ar1|mfesn|midas|dfm");
    forecast->add_option("--origin", origin, "forecast origin (default: last period)");
    forecast->add_option("--horizon", horizon, "steps ahead");

    auto* evaluate = app.add_subcommand("evaluate", "metrics from a forecast table");
    evaluate->add_option("forecasts", data, "forecasts.csv")->required();
    evaluate->add_option("out", out, "metrics CSV")->required();

    auto* compare = app.add_subcommand("compare", "MCS/uMCS tests from a forecast table");
    compare->add_option("forecasts", data, "forecasts.csv")->required();
    compare->add_option("out", out, "output JSON")->required();

    int midas_p = 1;
    auto* robustness = app.add_subcommand(
        "robustness", "reservoir resampling ensemble or MIDAS multistart report");
    robustness->add_option("data", data, "panel file or manifest JSON")->required();
    robustness->add_option("out", out, "output CSV")->required();
    robustness->add_option("--type", model_type, "mfesn|midas");
    robustness->add_option("--preset", preset_name, "MFESN preset name");
    robustness->add_option("--replications", replications, "ensemble size / start count");
    robustness->add_option("--p", midas_p, "MIDAS autoregressive lags");
    robustness->add_option("--fit-end", fit_end, "initial fit span");

    auto* run = app.add_subcommand("run", "run a full experiment from --config");

    // let --seed/--threads/--out-dir appear after the subcommand
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(g, manifest, out);
        if (fit->parsed()) return cmd_fit(g, data, model_type, preset_name, fit_end, out);
        if (forecast->parsed()) return cmd_forecast(data, model_path, origin, horizon, model_type);
        if (evaluate->parsed()) return cmd_evaluate(data, out);
        if (compare->parsed()) return cmd_compare(g, data, out);
        if (robustness->parsed())
            return cmd_robustness(g, data, model_type, preset_name, replications, midas_p,
                                  fit_end, out);
        if (run->parsed()) return cmd_run(g);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
