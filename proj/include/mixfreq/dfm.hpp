#ifndef MIXFREQ_DFM_HPP
#define MIXFREQ_DFM_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixfreq/panel.hpp"

namespace mixfreq {

/// VAR(1) factor dynamics with the spectral-rescaling parameterization
/// A1 = A_bar * rho / max(rho, |lambda_1(A_bar)|), rho in (0, 1): the
/// effective transition always has spectral radius <= rho.
struct FactorDynamics {
    int k = 1;
    Eigen::MatrixXd A_bar;  // k x k, unconstrained
    double rho = 0.95;
    Eigen::VectorXd R;  // k positive innovation scales (diagonal)

    Eigen::MatrixXd effective_transition() const;
};

enum class AggregationKind { Stock, AlmonLag, Trigonometric };

/// Linear map from stacked factor lags (k x L window, most recent first) to
/// one observation block. Stock reads the current factor; AlmonLag weights L
/// fine lags per factor with normalized exponential-Almon weights;
/// Trigonometric shares one normalized positional-encoding weight curve
/// across factors.
struct AggregationScheme {
    AggregationKind kind = AggregationKind::Stock;
    Eigen::MatrixXd beta;  // n_l x k
    int lag_count = 1;     // L (1 for Stock)

    Eigen::MatrixXd psi;  // k x 2 Almon pairs (AlmonLag)

    Eigen::VectorXd trig_lambda;  // K amplitudes (Trigonometric)
    Eigen::VectorXd trig_omega;   // K frequencies in [0, 1]
    Eigen::VectorXd trig_gamma;   // K phases in [-pi, pi]
    double trig_tau = 1.0;        // temperature > 0

    /// Lag weights per factor: k x L, rows sum to 1.
    Eigen::MatrixXd lag_weights() const;
};

/// Apply a scheme to a factor-lag window (column l = v_{j-l}).
Eigen::VectorXd aggregate(const AggregationScheme& scheme, const Eigen::MatrixXd& lag_window);

/// One observation block: sampled every q_l = kappa_max / kappa fine steps,
/// loading the factor lag window through its aggregation scheme, with
/// diagonal noise scales S.
struct DfmBlock {
    std::string name;
    Frequency kappa{1};
    AggregationScheme aggregation;
    Eigen::VectorXd S;  // n_l positive noise scales

    int n_series() const { return static_cast<int>(S.size()); }
};

/// Mixed-frequency linear-Gaussian DFM. Factors update at kappa_max; the
/// state carries enough fine lags (companion form) for the deepest
/// aggregation window, so the Kalman filter is exact for every scheme.
/// Block 0 observes the target (kappa = 1); the remaining blocks map the
/// covariate groups in panel order.
struct MfDfmModel {
    FactorDynamics dynamics;
    std::vector<DfmBlock> blocks;
    std::int64_t kappa_max = 1;
    int fit_begin = 0;
    int fit_end = 0;
    PanelNormalization normalization;
    std::vector<double> fit_trace;  // accepted objective values (log-likelihood)

    int lag_depth() const;          // companion depth P
    int state_dim() const;          // k * P
    Eigen::MatrixXd companion_transition() const;
    Eigen::MatrixXd companion_noise_cov() const;  // R^2 on the top block
    /// Observation rows of one block on the companion state.
    Eigen::MatrixXd loading(int block) const;
};

struct FilterState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double log_likelihood = 0.0;
    std::int64_t fine_index = -1;  // last ingested fine step
};

FilterState initial_filter_state(const MfDfmModel& model);

/// One predict + update cycle at fine step `fine_index`. The observation
/// vector stacks every block's rows (target first); only blocks scheduled at
/// this step (fine_index divisible by their q_l) and finite entries are
/// used. Fully missing steps are predict-only. The log-likelihood
/// accumulates the Gaussian predictive density of the observed subvector.
FilterState kalman_step(const MfDfmModel& model, const FilterState& state,
                        const Eigen::VectorXd& observation, std::int64_t fine_index);

/// Observation vector for a fine step assembled from a (standardized) panel;
/// unscheduled blocks are NaN.
Eigen::VectorXd observation_at(const MfDfmModel& model, const MixedPanel& panel,
                               std::int64_t fine_index);

/// Exact marginal log-likelihood of the panel under the model (filter pass
/// over all fine steps). The panel must already be standardized consistently
/// with the model's fit normalization.
double marginal_loglik(const MfDfmModel& model, const MixedPanel& panel);

/// Filter pass that returns the final state (and optionally a CSV trace of
/// per-step means and cumulative log-likelihood).
FilterState filter_panel(const MfDfmModel& model, const MixedPanel& panel,
                         std::int64_t last_fine_index = -1, const std::string& trace_csv = "");

struct DfmFitConfig {
    int k = 1;
    AggregationKind scheme = AggregationKind::Stock;
    int max_iterations = 200;
    double learning_rate = 0.05;
    double fd_step = 1e-5;
    int threads = 1;
    std::uint64_t seed = 0;
};

/// Maximize the marginal log-likelihood by adaptive-step first-order ascent
/// with central finite-difference gradients (coordinates evaluated in
/// parallel). Positivity of the noise scales via log-parameterization, rho
/// via a logistic map. The best iterate is returned; fit_trace records the
/// accepted (improving) objective values.
MfDfmModel fit_dfm(const MixedPanel& panel, int fit_begin, int fit_end, const DfmFitConfig& config);

/// Forecast one block h_fine factor updates ahead of the filter state:
/// Agg(A^h_fine f_hat). Raw filter units (standardized panel scale).
Eigen::VectorXd forecast_dfm(const MfDfmModel& model, const FilterState& state, int h_fine,
                             int block);

/// Target forecast of y[origin + h] using panel data through tempo
/// (origin, <s>); s = 0 is the aligned low-frequency forecast. Raw units.
double forecast_dfm_target(const MfDfmModel& model, const MixedPanel& panel, int origin,
                           std::int64_t s, int h);

/// Draw a synthetic panel from the model (test and experiment utility).
MixedPanel simulate_dfm(const MfDfmModel& model, int periods, std::uint64_t seed);

void save_dfm(const MfDfmModel& model, const std::string& path);
MfDfmModel load_dfm(const std::string& path);

}  // namespace mixfreq

#endif  // MIXFREQ_DFM_HPP
