#include "mixfreq/garch.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "mixfreq/optim.hpp"
#include "mixfreq/rng.hpp"

namespace mixfreq {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Negative average Gaussian log-likelihood on demeaned returns, with the
// volatility recursion run inside. Parameters enter log-transformed to keep
// omega, a, b positive; a soft barrier keeps a + b < 1.
double garch_negloglik(const Eigen::VectorXd& r, double mu, double omega, double a, double b,
                       Eigen::VectorXd* sigma2_out = nullptr) {
    const Eigen::Index n = r.size();
    const Eigen::VectorXd eps = r.array() - mu;
    const double var0 = eps.squaredNorm() / static_cast<double>(n);

    double sigma2 = var0;
    double nll = 0.0;
    if (sigma2_out) sigma2_out->resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        if (t > 0) sigma2 = omega + a * eps[t - 1] * eps[t - 1] + b * sigma2;
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) return 1e100;
        if (sigma2_out) (*sigma2_out)[t] = sigma2;
        nll += 0.5 * (kLog2Pi + std::log(sigma2) + eps[t] * eps[t] / sigma2);
    }
    return nll / static_cast<double>(n);
}

}  // namespace

Garch11Fit fit_garch11(const Eigen::VectorXd& returns) {
    if (returns.size() < 50)
        throw std::invalid_argument("fit_garch11: need at least 50 observations");

    const double mean = returns.mean();
    const double sd =
        std::sqrt((returns.array() - mean).square().sum() / static_cast<double>(returns.size()));
    if (!(sd > 0.0))
        throw std::invalid_argument("fit_garch11: input series is constant (zero variance)");

    // Work on unit-variance returns; map omega and mu back at the end.
    const Eigen::VectorXd r = (returns.array() - mean) / sd;

    // x = (mu, log omega, log a, log b)
    auto objective = [&r](const Eigen::VectorXd& x) -> double {
        const double mu = x[0];
        const double omega = std::exp(x[1]);
        const double a = std::exp(x[2]);
        const double b = std::exp(x[3]);
        double nll = garch_negloglik(r, mu, omega, a, b);
        const double excess = a + b - 0.999;
        if (excess > 0.0) nll += 1e4 * excess * excess;
        return nll;
    };

    Eigen::VectorXd x0(4);
    x0 << 0.0, std::log(0.1), std::log(0.1), std::log(0.8);

    optim::LbfgsOptions opt;
    opt.max_iterations = 300;
    opt.grad_tolerance = 1e-7;
    optim::OptimResult best = optim::lbfgs_minimize(optim::with_fd_gradient(objective, 1e-6), x0, opt);

    // A couple of alternative starts guard against the flat b-direction.
    for (const double b_init : {0.2, 0.6}) {
        Eigen::VectorXd alt(4);
        alt << 0.0, std::log(1.0 - 0.05 - b_init), std::log(0.05), std::log(b_init);
        const optim::OptimResult r2 =
            optim::lbfgs_minimize(optim::with_fd_gradient(objective, 1e-6), alt, opt);
        if (r2.value < best.value) best = r2;
    }

    Garch11Fit fit;
    fit.params.mu = best.x[0] * sd + mean;
    fit.params.omega = std::exp(best.x[1]) * sd * sd;
    fit.params.a = std::exp(best.x[2]);
    fit.params.b = std::exp(best.x[3]);

    if (!fit.params.stationary())
        throw std::runtime_error("fit_garch11: optimizer left the stationarity region (a + b >= 1); "
                                 "last iterate a=" + std::to_string(fit.params.a) +
                                 " b=" + std::to_string(fit.params.b));

    Eigen::VectorXd sigma2;
    fit.log_likelihood = -garch_negloglik(r, best.x[0], std::exp(best.x[1]), std::exp(best.x[2]),
                                          std::exp(best.x[3]), &sigma2) *
                         static_cast<double>(r.size());
    fit.volatility = sigma2.array().sqrt() * sd;
    return fit;
}

Eigen::VectorXd garch11_volatility(const Eigen::VectorXd& returns, const Garch11Params& p) {
    Eigen::VectorXd sigma2;
    garch_negloglik(returns, p.mu, p.omega, p.a, p.b, &sigma2);
    return sigma2.array().sqrt();
}

Eigen::VectorXd simulate_garch11(const Garch11Params& p, int length, std::uint64_t seed) {
    std::mt19937_64 eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd r(length);
    double sigma2 = p.omega / (1.0 - p.a - p.b);  // stationary variance
    double eps_prev = 0.0;
    for (int t = 0; t < length; ++t) {
        if (t > 0) sigma2 = p.omega + p.a * eps_prev * eps_prev + p.b * sigma2;
        const double eps = std::sqrt(sigma2) * normal(eng);
        r[t] = p.mu + eps;
        eps_prev = eps;
    }
    return r;
}

}  // namespace mixfreq
