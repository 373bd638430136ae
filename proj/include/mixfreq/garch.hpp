#ifndef MIXFREQ_GARCH_HPP
#define MIXFREQ_GARCH_HPP

#include <Eigen/Core>

namespace mixfreq {

/// GARCH(1,1) with constant mean: r_t = mu + eps_t,
/// sigma2_t = omega + a * eps_{t-1}^2 + b * sigma2_{t-1}.
struct Garch11Params {
    double omega = 0.0;
    double a = 0.0;
    double b = 0.0;
    double mu = 0.0;

    bool stationary() const { return a + b < 1.0; }
};

struct Garch11Fit {
    Garch11Params params;
    Eigen::VectorXd volatility;  // sqrt(sigma2_t), same length as the input
    double log_likelihood = 0.0;
};

/// Gaussian ML fit. Inputs are internally rescaled to unit variance for the
/// optimizer and the estimates mapped back, mirroring the usual scale
/// control. sigma2_0 is initialized at the sample variance of the demeaned
/// returns. Requires length >= 50 and non-constant input; a + b < 1 is kept
/// by an in-likelihood penalty and verified on the result.
Garch11Fit fit_garch11(const Eigen::VectorXd& returns);

/// Conditional volatility path implied by fixed parameters (used by the
/// recovery tests and by transform code 8).
Eigen::VectorXd garch11_volatility(const Eigen::VectorXd& returns, const Garch11Params& params);

/// Simulate a GARCH(1,1) path (test utility and synthetic-data generator).
Eigen::VectorXd simulate_garch11(const Garch11Params& params, int length, std::uint64_t seed);

}  // namespace mixfreq

#endif  // MIXFREQ_GARCH_HPP
