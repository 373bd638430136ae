#ifndef MIXFREQ_MFESN_HPP
#define MIXFREQ_MFESN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mixfreq/panel.hpp"
#include "mixfreq/reservoir.hpp"
#include "mixfreq/windows.hpp"

namespace mixfreq {

/// Configuration of one reservoir (dimension, sparsity, hyperparameters).
struct ReservoirSpec {
    int state_dim = 30;
    double sparsity = 1.0;
    Hyperparams hyper;
};

/// A shipped model configuration. Multi-reservoir presets list one spec per
/// covariate group in panel order (descending kappa: the daily spec first,
/// then the monthly spec).
struct ModelPreset {
    std::string name;
    bool multi = false;
    std::vector<ReservoirSpec> reservoirs;
};

/// Registry of the shipped presets: "singleESN [A]", "singleESN [B]",
/// "multiESN [A]", "multiESN [B]".
const ModelPreset& preset(const std::string& name);
std::vector<std::string> preset_names();

struct MfesnFitConfig {
    std::vector<double> lambda_grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::optional<double> lambda_input;   // skip CV when set
    std::optional<double> lambda_target;  // skip CV when set
    int cv_folds = 10;
    int cv_fold_size = 5;
    int threads = 1;
    std::uint64_t seed = 0;  // reservoir sampling seed
};

/// Single-reservoir multi-frequency ESN: one reservoir runs at kappa_max on
/// the stacked inputs; the target readout uses period-boundary states only.
struct SMfesnModel {
    StateParams params;  // normalized
    Hyperparams hyper;
    Readout input_readout;   // N x K, no intercept
    Readout target_readout;  // N x 1, intercept
    std::vector<std::int64_t> group_kappas;  // stacking order (descending)
    std::vector<int> group_sizes;
    std::int64_t kappa_max = 1;
    int fit_begin = 0;  // absolute period range the model was fitted on
    int fit_end = 0;
    PanelNormalization normalization;
    double lambda_input = 0.0;
    double lambda_target = 0.0;
    std::uint64_t seed = 0;
};

/// Multi-reservoir variant: one reservoir per covariate group, each running
/// at its own kappa_l; the target readout reads the stacked aligned states.
struct MMfesnModel {
    struct GroupReservoir {
        StateParams params;
        Hyperparams hyper;
        Readout input_readout;
        std::int64_t kappa = 1;
        double lambda_input = 0.0;
    };
    std::vector<GroupReservoir> groups;
    Readout target_readout;
    int fit_begin = 0;
    int fit_end = 0;
    PanelNormalization normalization;
    double lambda_target = 0.0;
    std::uint64_t seed = 0;
};

using MfesnModel = std::variant<SMfesnModel, MMfesnModel>;

/// Stacked input vector z_{t,<s>} at the kappa_max grid: group l contributes
/// its most recent release, component (t, floor(s / q_l)). By convention the
/// very first slot (t = 0, s = 0) of a panel is the zero vector.
Eigen::VectorXd stack_inputs(const MixedPanel& panel, std::int64_t t, std::int64_t s);

/// All stacked inputs as a (T * kappa_max) x sum(n_l) matrix (row t*kappa+s).
Eigen::MatrixXd stacked_input_matrix(const MixedPanel& panel);

/// Fit on reference periods [fit_begin, fit_end) of the panel. Data is
/// standardized over the fit window; the statistics ride along on the model.
/// Ridge penalties come from the config or from sequential cross-validation.
SMfesnModel fit_smfesn(const MixedPanel& panel, int fit_begin, int fit_end,
                       const ModelPreset& preset, const MfesnFitConfig& config);
MMfesnModel fit_mmfesn(const MixedPanel& panel, int fit_begin, int fit_end,
                       const ModelPreset& preset, const MfesnFitConfig& config);
MfesnModel fit_mfesn(const MixedPanel& panel, int fit_begin, int fit_end,
                     const ModelPreset& preset, const MfesnFitConfig& config);

/// h-step-ahead forecast of y[origin + h] from the aligned state at period
/// `origin` (so inputs through tempo (origin, <0>) are used). h = 1 reads the
/// aligned state directly; h > 1 composes the aligned autonomous map h - 1
/// times. Forecasts are in raw target units.
double forecast_smfesn(const SMfesnModel& model, const MixedPanel& panel, int origin, int h);
double forecast_mmfesn(const MMfesnModel& model, const MixedPanel& panel, int origin, int h);
double forecast_mfesn(const MfesnModel& model, const MixedPanel& panel, int origin, int h);

/// High-frequency one-step forecast of y[t + 1] from the within-period state
/// at tempo (t, <s>) on the kappa_max grid; s = 0 reproduces the aligned
/// one-step forecast. h > 1 composes the aligned map h - 1 times from that
/// state, predicting y[t + h].
double hf_forecast(const MfesnModel& model, const MixedPanel& panel, std::int64_t t,
                   std::int64_t s, int h = 1);

/// Sequential expanding cross-validation of the ridge penalty (target
/// readout). The last folds*fold_size targets are validated in `folds`
/// blocks; each fold refits on everything before its block and scores
/// one-step forecasts. Returns the grid value with the lowest mean MSE.
double cv_ridge(const MixedPanel& panel, const ModelPreset& preset,
                const std::vector<double>& lambda_grid, int folds, int fold_size,
                std::uint64_t seed, int threads = 1);

/// Same fold geometry for the input readout, scored by one-step-ahead
/// high-frequency input MSE. For multi presets, `group` selects the
/// reservoir whose penalty is validated (each group independently).
double cv_ridge_input(const MixedPanel& panel, const ModelPreset& preset,
                      const std::vector<double>& lambda_grid, int folds, int fold_size,
                      std::uint64_t seed, int threads = 1, int group = 0);

/// Fold layout shared by all sequential CV routines: fold f trains on
/// periods [0, train_end) and validates targets [val_begin, val_end).
struct CvFold {
    int train_end = 0;
    int val_begin = 0;
    int val_end = 0;
};
std::vector<CvFold> cv_fold_layout(int periods, int folds, int fold_size);

struct TuneConfig {
    Hyperparams init;
    double rho_max = 10.0;
    double gamma_max = 10.0;
    double omega_max = 10.0;
    int max_iterations = 100;
    int min_fit_periods = 0;   // T0; defaults to 3/4 of the sample when 0
    bool psi_reparam = false;  // optimize (alpha, psi), omega pinned to 0
    bool expanding_refit = false;
    double lambda = 1e-3;
    std::uint64_t seed = 0;
};

struct TuneResult {
    Hyperparams hyper;
    double loss = 0.0;
    double initial_loss = 0.0;
    bool converged = false;
};

/// Data-driven hyperparameter selection: bounded pattern search over the
/// cumulative one-step forecasting loss, refitting the readout per candidate
/// (once on the presample, or per step when expanding_refit is set).
/// max_iterations = 0 returns the initial point.
TuneResult tune_hyperparams(const MixedPanel& panel, const ModelPreset& preset,
                            const TuneConfig& config);

struct ForecastEnsemble {
    Eigen::MatrixXd paths;       // B x n_origins, one-step forecasts (NaN on failure)
    std::vector<int> origins;    // forecast origins (absolute period indices)
    Eigen::MatrixXd quantiles;   // 5 x n_origins: 5%, 25%, 50%, 75%, 95%
    std::vector<std::string> errors;  // non-empty entries mark failed replications
};

/// Reservoir-resampling robustness harness: B end-to-end replications
/// (sample parameters, cross-validate, window, forecast) with seeds derived
/// per replication; failures degrade the path, not the run.
ForecastEnsemble resample_harness(const MixedPanel& panel, const ModelPreset& preset, int B,
                                  const WindowScheme& scheme, const MfesnFitConfig& config);

/// Versioned JSON model serialization with exact numeric round trip.
void save_mfesn(const MfesnModel& model, const std::string& path);
MfesnModel load_mfesn(const std::string& path);

}  // namespace mixfreq

#endif  // MIXFREQ_MFESN_HPP
