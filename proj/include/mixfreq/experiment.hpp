#ifndef MIXFREQ_EXPERIMENT_HPP
#define MIXFREQ_EXPERIMENT_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "mixfreq/comparison.hpp"
#include "mixfreq/metrics.hpp"
#include "mixfreq/panel.hpp"
#include "mixfreq/schedule.hpp"
#include "mixfreq/windows.hpp"

namespace mixfreq {

/// One model entry of an experiment: benchmark, MFESN preset, MIDAS or DFM.
struct ModelSpec {
    std::string name;
    std::string type;  // "mean", "ar1", "mfesn", "midas", "dfm"
    std::string preset;           // mfesn
    int midas_p = 1;              // midas
    std::vector<int> midas_lags;  // midas, per group (descending kappa)
    bool midas_multistart = false;
    int dfm_k = 1;  // dfm
    std::string dfm_scheme = "stock";
    int dfm_iterations = 150;
};

struct ExperimentConfig {
    std::string manifest_path;  // exactly one of manifest_path / panel_path
    std::string panel_path;
    WindowScheme window;
    int horizons = 1;   // LF horizons 1..H
    int multicast = 0;  // multicast depth H (0 = no multicast schedule)
    std::vector<ModelSpec> models;
    std::vector<double> lambda_grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    int cv_initial_folds = 10;
    int cv_window_folds = 5;
    int cv_fold_size = 5;
    int cv_extra_span = 0;  // extra presample periods used only by the initial CV
    bool run_mdm = true;
    bool run_mcs = true;
    bool run_umcs = true;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = "out";
};

/// Parse and validate the JSON experiment file (see README for the schema).
/// Throws on schema errors; the CLI maps that to exit code 2.
ExperimentConfig load_experiment_config(const std::string& path);

struct CellFailure {
    std::string model;
    int window = 0;
    std::string error;
};

struct MdmEntry {
    std::string row_model;
    std::string col_model;
    int horizon = 1;
    double statistic = 0.0;
    double p_value = 1.0;
};

struct MulticastEntry {
    std::string model;
    int origin = 0;
    int l = 0;
    StepClass step;
    double forecast = 0.0;
    double actual = 0.0;
};

struct ExperimentResult {
    std::vector<std::string> model_names;
    std::vector<int> origins;   // trimmed: every origin supports all horizons
    std::vector<int> horizons;  // 1..H
    Eigen::MatrixXd actuals;    // H x origins, actuals[h-1][o] = y[origin + h]
    std::vector<Eigen::MatrixXd> forecasts;  // per model, H x origins (NaN = failed cell)
    LossMatrix losses;                        // squared errors on the same grid
    std::vector<MulticastEntry> multicast;
    std::vector<MdmEntry> mdm;                // pairwise, per horizon
    std::optional<McsResult> mcs;             // horizon 1
    std::optional<UmcsResult> umcs;           // across horizons (skipped for expanding windows)
    std::string umcs_refusal;                 // non-empty when uMCS was refused
    std::vector<CellFailure> failures;

    /// 0 = clean, 1 = partial cell failures.
    int exit_code() const { return failures.empty() ? 0 : 1; }
};

/// Run the full protocol: per window refit/re-validate per scheme, forecast
/// every schedule for every model, assemble the trimmed loss matrix, run the
/// requested comparison tests. Model failures degrade cells, not the run.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Write the result tables under out_dir: forecasts, losses, metrics
/// (CSV + JSON, relative MSFE against the mean benchmark), cumulative-error
/// and per-horizon plot data, test outputs, and a run summary. Outputs are
/// byte-deterministic for a fixed (config, seed).
void emit_tables(const ExperimentResult& result, const ExperimentConfig& config,
                 const std::string& out_dir);

}  // namespace mixfreq

#endif  // MIXFREQ_EXPERIMENT_HPP
