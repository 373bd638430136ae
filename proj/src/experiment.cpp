#include "mixfreq/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <stdexcept>

#include "mixfreq/benchmarks.hpp"
#include "mixfreq/csv.hpp"
#include "mixfreq/dfm.hpp"
#include "mixfreq/json_io.hpp"
#include "mixfreq/mfesn.hpp"
#include "mixfreq/midas.hpp"
#include "mixfreq/parallel.hpp"
#include "mixfreq/rng.hpp"

namespace mixfreq {

std::string to_string(StepKind kind) {
    switch (kind) {
        case StepKind::Nowcast: return "nowcast";
        case StepKind::LowFrequency: return "lf";
        case StepKind::HighFrequency: return "hf";
    }
    return "?";
}

StepClass classify_step(int l, int kappa) {
    if (l < 1) throw std::invalid_argument("classify_step: l must be >= 1");
    if (kappa < 1) throw std::invalid_argument("classify_step: kappa must be >= 1");
    StepClass out;
    out.h = (l + kappa - 1) / kappa;
    out.ell = l % kappa;
    out.m = out.h - l / kappa;
    if (l <= kappa - 1)
        out.kind = StepKind::Nowcast;
    else if (out.ell == 0)
        out.kind = StepKind::LowFrequency;
    else
        out.kind = StepKind::HighFrequency;
    return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    const nlohmann::json doc = jsonio::read_json_file(path);
    if (doc.value("version", 0) != 1)
        throw std::invalid_argument("experiment config: unsupported version");

    ExperimentConfig cfg;
    const auto& data = doc.at("data");
    cfg.manifest_path = data.value("manifest", "");
    cfg.panel_path = data.value("panel", "");
    if (cfg.manifest_path.empty() == cfg.panel_path.empty())
        throw std::invalid_argument("experiment config: provide exactly one of data.manifest "
                                    "or data.panel");

    const auto& w = doc.at("window");
    cfg.window.kind = window_kind_from_string(w.at("scheme").get<std::string>());
    cfg.window.start = w.value("start", 0);
    cfg.window.initial_fit = w.at("initial_fit").get<int>();
    cfg.window.test_periods = w.at("test").get<int>();
    cfg.window.step = w.value("step", 1);

    cfg.horizons = doc.value("horizons", 1);
    if (cfg.horizons < 1) throw std::invalid_argument("experiment config: horizons >= 1");
    cfg.multicast = doc.value("multicast", 0);

    for (const auto& mj : doc.at("models")) {
        ModelSpec spec;
        spec.type = mj.at("type").get<std::string>();
        spec.name = mj.value("name", spec.type);
        if (spec.type == "mfesn") {
            spec.preset = mj.at("preset").get<std::string>();
            preset(spec.preset);  // fail fast on unknown presets
        } else if (spec.type == "midas") {
            spec.midas_p = mj.value("p", 1);
            spec.midas_lags = mj.at("lags").get<std::vector<int>>();
            spec.midas_multistart = mj.value("multistart", false);
        } else if (spec.type == "dfm") {
            spec.dfm_k = mj.value("k", 1);
            spec.dfm_scheme = mj.value("scheme", "stock");
            if (spec.dfm_scheme != "stock" && spec.dfm_scheme != "almon" &&
                spec.dfm_scheme != "trig")
                throw std::invalid_argument("experiment config: dfm scheme must be stock, almon "
                                            "or trig");
            spec.dfm_iterations = mj.value("iterations", 150);
        } else if (spec.type != "mean" && spec.type != "ar1") {
            throw std::invalid_argument("experiment config: unknown model type '" + spec.type +
                                        "'");
        }
        cfg.models.push_back(std::move(spec));
    }
    if (cfg.models.empty()) throw std::invalid_argument("experiment config: no models");
    std::set<std::string> names;
    for (const ModelSpec& m : cfg.models)
        if (!names.insert(m.name).second)
            throw std::invalid_argument("experiment config: duplicate model name '" + m.name + "'");

    if (doc.contains("cv")) {
        const auto& cv = doc.at("cv");
        if (cv.contains("grid")) cfg.lambda_grid = cv.at("grid").get<std::vector<double>>();
        cfg.cv_initial_folds = cv.value("initial_folds", 10);
        cfg.cv_window_folds = cv.value("window_folds", 5);
        cfg.cv_fold_size = cv.value("fold_size", 5);
        cfg.cv_extra_span = cv.value("extra_span", 0);
    }
    if (doc.contains("tests")) {
        const auto& tests = doc.at("tests");
        cfg.run_mdm = tests.value("mdm", true);
        cfg.run_mcs = tests.value("mcs", true);
        cfg.run_umcs = tests.value("umcs", true);
    }
    cfg.seed = doc.value("seed", 0ULL);
    cfg.threads = doc.value("threads", 1);
    cfg.out_dir = doc.value("out_dir", "out");
    return cfg;
}

namespace {

AggregationKind dfm_scheme_from_string(const std::string& s) {
    if (s == "stock") return AggregationKind::Stock;
    if (s == "almon") return AggregationKind::AlmonLag;
    return AggregationKind::Trigonometric;
}

// Uniform fit/forecast wrapper over the model zoo. Fit happens per window;
// forecasts come in the LF (origin, h) and multicast (origin, l) flavors.
class Forecaster {
   public:
    Forecaster(const ModelSpec& spec, const ExperimentConfig& cfg) : spec_(spec), cfg_(cfg) {}

    void fit(const MixedPanel& panel, int begin, int end, bool initial_window) {
        if (spec_.type == "mean") {
            mean_ = fit_mean(panel.target().segment(begin, end - begin));
        } else if (spec_.type == "ar1") {
            ar1_ = fit_ar1(panel.target().segment(begin, end - begin));
        } else if (spec_.type == "mfesn") {
            const ModelPreset& p = preset(spec_.preset);
            MfesnFitConfig fc;
            fc.lambda_grid = cfg_.lambda_grid;
            fc.cv_folds = initial_window ? cfg_.cv_initial_folds : cfg_.cv_window_folds;
            fc.cv_fold_size = cfg_.cv_fold_size;
            fc.threads = 1;
            fc.seed = derive_seed(cfg_.seed, std::hash<std::string>{}(spec_.name));
            // The initial penalty selection may use a longer presample than
            // the fit window itself (cv.extra_span). Multi-reservoir input
            // penalties stay with the per-group CV inside the fit.
            if (initial_window && cfg_.cv_extra_span > 0) {
                const int ext_begin = std::max(0, begin - cfg_.cv_extra_span);
                const MixedPanel cv_panel = panel.slice(ext_begin, end);
                fc.lambda_target = cv_ridge(cv_panel, p, fc.lambda_grid, fc.cv_folds,
                                            fc.cv_fold_size, fc.seed, fc.threads);
                if (!p.multi)
                    fc.lambda_input = cv_ridge_input(cv_panel, p, fc.lambda_grid, fc.cv_folds,
                                                     fc.cv_fold_size, fc.seed, fc.threads, 0);
            }
            mfesn_ = fit_mfesn(panel, begin, end, p, fc);
        } else if (spec_.type == "midas") {
            MidasFitConfig fc;
            fc.p = spec_.midas_p;
            fc.lags_per_group = spec_.midas_lags;
            fc.multistart = spec_.midas_multistart;
            fc.threads = 1;
            fc.seed = derive_seed(cfg_.seed, std::hash<std::string>{}(spec_.name));
            midas_ = fit_midas(panel, begin, end, fc);
        } else if (spec_.type == "dfm") {
            DfmFitConfig fc;
            fc.k = spec_.dfm_k;
            fc.scheme = dfm_scheme_from_string(spec_.dfm_scheme);
            fc.max_iterations = spec_.dfm_iterations;
            fc.threads = 1;
            fc.seed = derive_seed(cfg_.seed, std::hash<std::string>{}(spec_.name));
            dfm_ = fit_dfm(panel, begin, end, fc);
        }
        fitted_ = true;
    }

    double forecast(const MixedPanel& panel, int origin, int h) const {
        check_fitted();
        if (spec_.type == "mean") return forecast_mean(*mean_, h);
        if (spec_.type == "ar1") return forecast_ar1(*ar1_, panel.target()[origin], h);
        if (spec_.type == "mfesn") return forecast_mfesn(*mfesn_, panel, origin, h);
        if (spec_.type == "midas") return forecast_midas(*midas_, panel, origin, h);
        return forecast_dfm_target(*dfm_, panel, origin, 0, h);
    }

    double multicast(const MixedPanel& panel, int origin, int l) const {
        check_fitted();
        const StepClass step = classify_step(l, static_cast<int>(panel.kappa_max().kappa));
        if (spec_.type == "mean" || spec_.type == "ar1")
            return forecast(panel, origin, step.h);  // no intra-period information
        if (spec_.type == "mfesn")
            return hf_forecast(*mfesn_, panel, origin, step.ell, step.h);
        if (spec_.type == "midas")
            return hf_forecast_midas(*midas_, panel, origin, step.ell, step.h);
        return forecast_dfm_target(*dfm_, panel, origin, step.ell, step.h);
    }

   private:
    void check_fitted() const {
        if (!fitted_) throw std::logic_error("Forecaster: forecast before fit");
    }

    ModelSpec spec_;
    const ExperimentConfig& cfg_;
    bool fitted_ = false;
    std::optional<MeanModel> mean_;
    std::optional<Ar1Model> ar1_;
    std::optional<MfesnModel> mfesn_;
    std::optional<MidasModel> midas_;
    std::optional<MfDfmModel> dfm_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const MixedPanel panel = config.manifest_path.empty()
                                 ? load_panel(config.panel_path)
                                 : load_panel_from_manifest(config.manifest_path);
    const int T = panel.periods();
    const std::vector<EstimationWindow> windows = window_layout(config.window, T);
    const int H = config.horizons;

    ExperimentResult result;
    for (const ModelSpec& m : config.models) result.model_names.push_back(m.name);
    for (int h = 1; h <= H; ++h) result.horizons.push_back(h);

    // Common origin set: drop end-of-sample origins that cannot support the
    // maximal horizon, so every horizon compares the same forecast count.
    for (const EstimationWindow& w : windows)
        for (int o : w.origins)
            if (o + H <= T - 1) result.origins.push_back(o);
    if (result.origins.empty())
        throw std::invalid_argument("run_experiment: no usable origins after horizon trimming");

    const int n_models = static_cast<int>(config.models.size());
    const int n_origins = static_cast<int>(result.origins.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();

    result.actuals.resize(H, n_origins);
    for (int h = 1; h <= H; ++h)
        for (int o = 0; o < n_origins; ++o)
            result.actuals(h - 1, o) = panel.target()[result.origins[o] + h];
    result.forecasts.assign(n_models, Eigen::MatrixXd::Constant(H, n_origins, nan));

    // model x window task grid; each task fits one window and fills the
    // origins it owns. Every task writes only its own slots (forecast cells
    // and per-task buffers), so assembly is race-free and order-independent.
    struct Task {
        int model;
        int window;
    };
    std::vector<Task> tasks;
    for (int m = 0; m < n_models; ++m)
        for (std::size_t w = 0; w < windows.size(); ++w)
            tasks.push_back({m, static_cast<int>(w)});

    std::vector<std::vector<MulticastEntry>> multicast_per_task(tasks.size());
    std::vector<std::vector<CellFailure>> failures_per_task(tasks.size());

    std::vector<int> origin_column(T, -1);
    for (int o = 0; o < n_origins; ++o) origin_column[result.origins[o]] = o;

    parallel_for(tasks.size(), config.threads, [&](std::size_t ti) {
        const Task task = tasks[ti];
        const EstimationWindow& w = windows[task.window];
        const ModelSpec& spec = config.models[task.model];
        try {
            Forecaster forecaster(spec, config);
            forecaster.fit(panel, w.fit_begin, w.fit_end, task.window == 0);
            for (int origin : w.origins) {
                const int col = origin_column[origin];
                if (col >= 0) {
                    for (int h = 1; h <= H; ++h)
                        result.forecasts[task.model](h - 1, col) =
                            forecaster.forecast(panel, origin, h);
                }
                if (config.multicast > 0) {
                    const int kappa = static_cast<int>(panel.kappa_max().kappa);
                    for (int l = 1; l <= config.multicast * kappa; ++l) {
                        const StepClass step = classify_step(l, kappa);
                        if (origin + step.h > T - 1) continue;
                        MulticastEntry entry;
                        entry.model = spec.name;
                        entry.origin = origin;
                        entry.l = l;
                        entry.step = step;
                        entry.forecast = forecaster.multicast(panel, origin, l);
                        entry.actual = panel.target()[origin + step.h];
                        multicast_per_task[ti].push_back(entry);
                    }
                }
            }
        } catch (const std::exception& e) {
            failures_per_task[ti].push_back({spec.name, task.window, e.what()});
        }
    });

    // merge in task order (model-major, then window): deterministic
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        for (auto& entry : multicast_per_task[ti]) result.multicast.push_back(std::move(entry));
        for (auto& f : failures_per_task[ti]) result.failures.push_back(std::move(f));
    }

    // losses on the common grid
    result.losses.models = result.model_names;
    result.losses.horizons = result.horizons;
    result.losses.origins = result.origins;
    for (int m = 0; m < n_models; ++m) {
        Eigen::MatrixXd err = result.forecasts[m] - result.actuals;
        result.losses.losses.push_back(err.cwiseProduct(err));
    }

    // comparison tests run only over models with complete loss series
    std::vector<int> complete;
    for (int m = 0; m < n_models; ++m)
        if (result.forecasts[m].allFinite()) complete.push_back(m);

    LossMatrix tested;
    tested.horizons = result.horizons;
    tested.origins = result.origins;
    for (int m : complete) {
        tested.models.push_back(result.model_names[m]);
        tested.losses.push_back(result.losses.losses[m]);
    }

    if (config.run_mdm && complete.size() >= 2) {
        for (std::size_t i = 0; i < complete.size(); ++i)
            for (std::size_t j = 0; j < complete.size(); ++j) {
                if (i == j) continue;
                for (int h = 1; h <= H; ++h) {
                    try {
                        const MdmResult r = mdm_test(tested.series(static_cast<int>(i), h - 1),
                                                     tested.series(static_cast<int>(j), h - 1), h);
                        result.mdm.push_back({tested.models[i], tested.models[j], h, r.statistic,
                                              r.p_value});
                    } catch (const std::exception&) {
                        // degenerate pair (identical losses); skip the entry
                    }
                }
            }
    }
    if (config.run_mcs && complete.size() >= 2) {
        McsConfig mc;
        mc.seed = derive_seed(config.seed, 0x3c5u);
        result.mcs = mcs_test(tested, 0, mc);
    }
    if (config.run_umcs && H >= 2 && complete.size() >= 2) {
        if (config.window.kind == WindowKind::Expanding) {
            // the uniform test is not valid under expanding-window estimation
            result.umcs_refusal = "uMCS skipped: invalid under expanding-window estimation";
        } else {
            UmcsConfig uc;
            uc.seed = derive_seed(config.seed, 0x0575u);
            result.umcs = umcs_test(tested, uc);
        }
    }
    return result;
}

namespace {

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

}  // namespace

void emit_tables(const ExperimentResult& result, const ExperimentConfig& config,
                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string base = out_dir + "/";

    const int H = static_cast<int>(result.horizons.size());
    const int n_origins = static_cast<int>(result.origins.size());
    const int n_models = static_cast<int>(result.model_names.size());

    {  // forecast panel, long form
        std::vector<std::vector<std::string>> rows;
        for (int m = 0; m < n_models; ++m)
            for (int h = 0; h < H; ++h)
                for (int o = 0; o < n_origins; ++o)
                    rows.push_back({result.model_names[m], std::to_string(result.origins[o]),
                                    std::to_string(result.horizons[h]),
                                    std::to_string(result.origins[o] + result.horizons[h]),
                                    cell(result.actuals(h, o)), cell(result.forecasts[m](h, o)),
                                    cell(result.losses.losses[m](h, o))});
        write_csv(base + "forecasts.csv",
                  {"model", "origin", "horizon", "target_period", "actual", "forecast",
                   "squared_error"},
                  rows);
    }

    // metrics per model/horizon with the mean benchmark as relative reference
    const int mean_index = [&] {
        for (int m = 0; m < n_models; ++m)
            if (config.models[m].type == "mean") return m;
        return -1;
    }();

    nlohmann::json metrics_json = nlohmann::json::array();
    {
        std::vector<std::vector<std::string>> rows;
        for (int m = 0; m < n_models; ++m) {
            for (int h = 0; h < H; ++h) {
                const Eigen::VectorXd sq = result.losses.losses[m].row(h).transpose();
                const bool ok = sq.allFinite();
                double mval = nan(""), rval = nan(""), rel = nan(""), rel_rmsfe = nan("");
                if (ok) {
                    mval = msfe(sq);
                    rval = rmsfe(sq);
                    if (mean_index >= 0 && result.losses.losses[mean_index].row(h).allFinite()) {
                        const double mref =
                            msfe(result.losses.losses[mean_index].row(h).transpose());
                        rel = mval / mref;
                        rel_rmsfe = rval / std::sqrt(mref);
                    }
                }
                std::string mcs_mark, umcs_mark;
                if (result.mcs && h == 0) {
                    const auto& models = result.mcs->models;
                    for (std::size_t i = 0; i < models.size(); ++i)
                        if (models[i] == result.model_names[m]) {
                            if (result.mcs->mcs_pvalues[i] >= 0.25) mcs_mark = "**";
                            else if (result.mcs->mcs_pvalues[i] >= 0.10) mcs_mark = "*";
                        }
                }
                if (result.umcs) {
                    const auto& models = result.umcs->models;
                    for (std::size_t i = 0; i < models.size(); ++i)
                        if (models[i] == result.model_names[m]) {
                            if (result.umcs->mcs_pvalues[i] >= 0.25) umcs_mark = "**";
                            else if (result.umcs->mcs_pvalues[i] >= 0.10) umcs_mark = "*";
                        }
                }
                rows.push_back({result.model_names[m], std::to_string(result.horizons[h]),
                                cell(mval), cell(rval), cell(rel), cell(rel_rmsfe), mcs_mark,
                                umcs_mark});
                metrics_json.push_back({{"model", result.model_names[m]},
                                        {"horizon", result.horizons[h]},
                                        {"msfe", ok ? nlohmann::json(mval) : nlohmann::json()},
                                        {"rmsfe", ok ? nlohmann::json(rval) : nlohmann::json()},
                                        {"relative_msfe", std::isfinite(rel)
                                                              ? nlohmann::json(rel)
                                                              : nlohmann::json()},
                                        {"relative_rmsfe", std::isfinite(rel_rmsfe)
                                                               ? nlohmann::json(rel_rmsfe)
                                                               : nlohmann::json()},
                                        {"mcs", mcs_mark},
                                        {"umcs", umcs_mark}});
            }
        }
        write_csv(base + "metrics.csv",
                  {"model", "horizon", "msfe", "rmsfe", "relative_msfe", "relative_rmsfe",
                   "mcs", "umcs"},
                  rows);
        jsonio::write_json_file(metrics_json, base + "metrics.json");
    }

    {  // plot data: cumulative squared errors and cumulative RMSFE at h = 1
        std::vector<std::vector<std::string>> rows;
        for (int m = 0; m < n_models; ++m) {
            const Eigen::VectorXd sq = result.losses.losses[m].row(0).transpose();
            if (!sq.allFinite()) continue;
            for (int o = 0; o < n_origins; ++o)
                rows.push_back({result.model_names[m], std::to_string(result.origins[o]),
                                format_double(csfe(sq, o)), format_double(crmsfe(sq, o))});
        }
        write_csv(base + "cumulative.csv", {"model", "origin", "csfe", "crmsfe"}, rows);
    }

    {  // plot data: RMSFE by horizon
        std::vector<std::vector<std::string>> rows;
        for (int m = 0; m < n_models; ++m)
            for (int h = 0; h < H; ++h) {
                const Eigen::VectorXd sq = result.losses.losses[m].row(h).transpose();
                rows.push_back({result.model_names[m], std::to_string(result.horizons[h]),
                                sq.allFinite() ? format_double(rmsfe(sq)) : "NA"});
            }
        write_csv(base + "rmsfe_by_horizon.csv", {"model", "horizon", "rmsfe"}, rows);
    }

    if (!result.multicast.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const MulticastEntry& e : result.multicast)
            rows.push_back({e.model, std::to_string(e.origin), std::to_string(e.l),
                            to_string(e.step.kind), std::to_string(e.step.h),
                            std::to_string(e.step.ell), std::to_string(e.step.m),
                            cell(e.actual), cell(e.forecast)});
        write_csv(base + "multicast.csv",
                  {"model", "origin", "l", "kind", "h", "ell", "m", "actual", "forecast"}, rows);
    }

    if (!result.mdm.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const MdmEntry& e : result.mdm)
            rows.push_back({e.row_model, e.col_model, std::to_string(e.horizon),
                            format_double(e.statistic), format_double(e.p_value)});
        write_csv(base + "mdm.csv", {"row_model", "col_model", "horizon", "statistic", "p_value"},
                  rows);
    }

    nlohmann::json tests = nlohmann::json::object();
    if (result.mcs) {
        nlohmann::json mj;
        mj["models"] = result.mcs->models;
        mj["p_values"] = result.mcs->mcs_pvalues;
        mj["elimination_order"] = result.mcs->elimination_order;
        mj["included_75"] = result.mcs->included(0.75);
        mj["included_90"] = result.mcs->included(0.90);
        mj["config"] = {{"bootstrap", result.mcs->config.bootstrap},
                        {"block_length", result.mcs->config.block_length},
                        {"seed", result.mcs->config.seed}};
        tests["mcs"] = mj;
    }
    if (result.umcs) {
        nlohmann::json uj;
        uj["models"] = result.umcs->models;
        uj["p_values"] = result.umcs->mcs_pvalues;
        uj["elimination_order"] = result.umcs->elimination_order;
        uj["included_75"] = result.umcs->included(0.75);
        uj["included_90"] = result.umcs->included(0.90);
        uj["config"] = {{"bootstrap", result.umcs->config.bootstrap},
                        {"inner_alpha", result.umcs->config.inner_alpha},
                        {"block_length", result.umcs->config.block_length},
                        {"kernel", result.umcs->config.kernel},
                        {"seed", result.umcs->config.seed}};
        tests["umcs"] = uj;
    }
    if (!result.umcs_refusal.empty()) tests["umcs_refusal"] = result.umcs_refusal;
    jsonio::write_json_file(tests, base + "tests.json");

    nlohmann::json run;
    run["exit_code"] = result.exit_code();
    run["origins"] = result.origins;
    run["horizons"] = result.horizons;
    run["models"] = result.model_names;
    nlohmann::json fails = nlohmann::json::array();
    for (const CellFailure& f : result.failures)
        fails.push_back({{"model", f.model}, {"window", f.window}, {"error", f.error}});
    run["failures"] = fails;
    run["window"] = {{"scheme", to_string(config.window.kind)},
                     {"start", config.window.start},
                     {"initial_fit", config.window.initial_fit},
                     {"test", config.window.test_periods},
                     {"step", config.window.step}};
    run["seed"] = config.seed;
    jsonio::write_json_file(run, base + "run.json");
}

}  // namespace mixfreq
