#ifndef MIXFREQ_RESERVOIR_HPP
#define MIXFREQ_RESERVOIR_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace mixfreq {

/// Randomly drawn, fixed state parameters of an echo state network. The
/// normalized form stores A_bar with unit spectral radius and C_bar, zeta_bar
/// with unit 2-norm (zero blocks stay zero); hyperparameters scale them in
/// the state recursion.
struct StateParams {
    Eigen::MatrixXd A;     // N x N reservoir matrix
    Eigen::MatrixXd C;     // N x K input matrix
    Eigen::VectorXd zeta;  // N input shift
    double sparsity = 1.0;
    std::uint64_t seed = 0;
    bool normalized = false;

    int state_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(C.cols()); }
};

struct Hyperparams {
    double alpha = 0.0;  // leak rate in [0, 1)
    double rho = 0.0;    // spectral radius scale
    double gamma = 0.0;  // input scaling
    double omega = 0.0;  // shift scaling

    void validate() const;
};

/// Linear readout estimated by ridge regression. When fitted with an
/// intercept, states and targets were centered by their fit-window means
/// before the solve and the intercept recovered afterwards, so the penalty
/// never shrinks it.
struct Readout {
    Eigen::MatrixXd W;          // N x J
    Eigen::RowVectorXd intercept;  // 1 x J, zero when has_intercept is false
    bool has_intercept = false;
    double lambda = 0.0;

    Eigen::RowVectorXd apply(const Eigen::VectorXd& state) const {
        Eigen::RowVectorXd out = state.transpose() * W;
        if (has_intercept) out += intercept;
        return out;
    }
};

/// Draw unnormalized state parameters: A entries iid standard normal, C
/// entries iid uniform(-1, 1), both with iid Bernoulli(sparsity) retention;
/// zeta = 0. Deterministic in the seed.
StateParams sample_params(int state_dim, int input_dim, double sparsity, std::uint64_t seed);

/// A_bar = A / rho(A), C_bar = C / ||C||_2, zeta_bar = zeta / ||zeta||_2;
/// any zero denominator leaves that block as zero.
StateParams normalize_params(const StateParams& raw);

/// Spectral radius: dense eigenvalues for N <= 512, power iteration above.
double spectral_radius(const Eigen::MatrixXd& A);

/// Induced 2-norm (largest singular value) via power iteration on A^T A.
double spectral_norm(const Eigen::MatrixXd& A);

/// ||rho * A_bar||_2. Values below 1 certify the sufficient echo state
/// condition; values at or above 1 are reported, not rejected.
double esp_margin(const StateParams& params, const Hyperparams& hyper);

/// One leaky-tanh step:
/// x' = alpha x + (1 - alpha) tanh(rho A_bar x + gamma C_bar z + omega zeta_bar).
Eigen::VectorXd state_step(const StateParams& params, const Hyperparams& hyper,
                           const Eigen::VectorXd& x_prev, const Eigen::VectorXd& z);

/// Iterate the state recursion over the rows of Z starting from x0; row t of
/// the result is the state after consuming rows 0..t.
Eigen::MatrixXd run_states(const StateParams& params, const Hyperparams& hyper,
                           const Eigen::VectorXd& x0, const Eigen::MatrixXd& Z);

/// Closed-form ridge solve W = (X^T X + lambda * rows * I)^{-1} X^T Y (the
/// penalty is scaled by the row count). with_intercept centers X and Y first
/// and recovers the intercept from the window means.
Readout ridge_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda,
                  bool with_intercept = false);

/// Autonomous (self-feeding) step
/// x' = alpha x + (1 - alpha) tanh((rho A_bar + gamma C_bar W_in^T) x + omega zeta_bar),
/// where W_in is the input readout mapping states to the K input channels.
Eigen::VectorXd autonomous_step(const StateParams& params, const Hyperparams& hyper,
                                const Readout& input_readout, const Eigen::VectorXd& x);

}  // namespace mixfreq

#endif  // MIXFREQ_RESERVOIR_HPP
