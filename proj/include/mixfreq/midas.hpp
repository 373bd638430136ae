#ifndef MIXFREQ_MIDAS_HPP
#define MIXFREQ_MIDAS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mixfreq/optim.hpp"
#include "mixfreq/panel.hpp"

namespace mixfreq {

/// Exponential Almon coefficients (q = 2).
struct AlmonTheta {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

/// Normalized Almon weights w_k = exp(t1 k + t2 k^2) / sum, k = 0..K.
/// Throws std::domain_error when |t1| K + |t2| K^2 > 700 (the natural-log
/// overflow guard); rescale the starting point in that case.
Eigen::VectorXd almon_weights(const AlmonTheta& theta, int K);

/// Weights plus the per-parameter derivatives
/// dw_k/dtheta_j = w_k (m_k - sum_i w_i m_i), m_k in {k, k^2}.
void almon_weights_grad(const AlmonTheta& theta, int K, Eigen::VectorXd& w, Eigen::VectorXd& dw1,
                        Eigen::VectorXd& dw2);

/// One scalar covariate in the regression: panel coordinates, lag count and
/// its fitted scale and Almon coefficients.
struct MidasRegressor {
    int group = 0;
    int series = 0;
    int lags = 0;  // K: lags 0..K
    std::int64_t kappa = 1;
    double beta = 0.0;
    AlmonTheta theta;
};

struct MidasModel {
    double alpha0 = 0.0;
    Eigen::VectorXd ar;  // p autoregressive coefficients
    std::vector<MidasRegressor> regressors;
    int fit_begin = 0;
    int fit_end = 0;
    PanelNormalization normalization;
    double loss = 0.0;       // at the selected minimizer, standardized units
    double grad_norm = 0.0;  // infinity norm at the minimizer
};

/// Fine-resolution regression substrate: one row per kappa_max slot (t, <s>),
/// response y[t] replicated across the period, AR block (y[t-1] .. y[t-p]),
/// and per-regressor lag blocks (z_r, z_{r-1}, .., z_{r-K}) where r is the
/// regressor's most recent release at that slot. Only rows whose lags all
/// exist are kept (row exclusion, not coarse truncation); the kept rows'
/// tempo coordinates are recorded. Estimation of the model uses the s = 0
/// rows; the later slots carry the nowcast and high-frequency alignments.
struct MidasDesign {
    Eigen::VectorXd response;
    Eigen::MatrixXd ar_block;                  // rows x p
    std::vector<Eigen::MatrixXd> lag_blocks;   // rows x (K_l + 1)
    std::vector<int> row_period;               // t per row
    std::vector<int> row_slot;                 // s per row
    std::vector<MidasRegressor> regressors;    // lag/kappa filled, coefficients zero
    int p = 0;
    std::int64_t full_rows = 0;  // T * kappa_max before any exclusion

    int rows() const { return static_cast<int>(response.size()); }
    int parameter_count() const { return 1 + p + 3 * static_cast<int>(regressors.size()); }
};

/// Lag counts are given per panel group and apply to every series in the
/// group. Enforces the identifiability condition
/// T > 1 + p + sum_l ceil(K_l / kappa_l).
MidasDesign build_design(const MixedPanel& panel, int p, const std::vector<int>& lags_per_group);

/// Packed parameter order: alpha0, ar[0..p), then (beta, theta1, theta2) per
/// regressor.
Eigen::VectorXd pack_midas_params(const MidasModel& model);

/// Sum-of-squares loss over the aligned (s = 0) design rows and its exact
/// analytic gradient. Returns a large finite value (and leaves the gradient
/// usable) when a weight evaluation would overflow.
double midas_loss_grad(const Eigen::VectorXd& params, const MidasDesign& design,
                       Eigen::VectorXd& grad);

struct MidasFitConfig {
    int p = 1;
    std::vector<int> lags_per_group;
    bool multistart = false;
    int starts = 64;
    double hypercube_edge = 0.025;
    std::uint64_t seed = 0;
    int threads = 1;
    bool stratified_fallback = false;  // replace Sobol by Latin-hypercube draws
    optim::LbfgsOptions optimizer{/*max_iterations=*/500, /*grad_tolerance=*/1e-8};
};

/// Per-start record used by the robustness report.
struct MidasStartResult {
    Eigen::VectorXd start;
    Eigen::VectorXd minimizer;
    double loss = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct MidasFitReport {
    std::vector<MidasStartResult> starts;
    int best_index = -1;
};

/// Nonlinear least squares from the zero start, or from `starts` Sobol
/// points in [0, hypercube_edge]^dim when multistart is set. The lowest-loss
/// minimizer wins, ties broken by start index.
MidasModel fit_midas(const MixedPanel& panel, int fit_begin, int fit_end,
                     const MidasFitConfig& config, MidasFitReport* report = nullptr);

/// h-step forecast of y[origin + h]. The AR recursion is iterated with
/// forecasts substituted for unavailable targets; the weighted regressor
/// terms stay on the information set of the origin boundary (t, <0>).
double forecast_midas(const MidasModel& model, const MixedPanel& panel, int origin, int h);

/// Forecast of y[t + h] using covariates through tempo (t, <s>) at
/// kappa_max; s = 0 with h = 1 reproduces forecast_midas at h = 1. AR lags
/// stay frozen at the latest completed low-frequency values.
double hf_forecast_midas(const MidasModel& model, const MixedPanel& panel, std::int64_t t,
                         std::int64_t s, int h = 1);

/// Per-start minimizer, loss and gradient norm as CSV.
void write_midas_report(const MidasFitReport& report, const std::string& path);

void save_midas(const MidasModel& model, const std::string& path);
MidasModel load_midas(const std::string& path);

}  // namespace mixfreq

#endif  // MIXFREQ_MIDAS_HPP
