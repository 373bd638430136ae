#include <doctest.h>

#include <cmath>

#include "mixfreq/garch.hpp"
#include "mixfreq/rng.hpp"

#include <random>

using namespace mixfreq;

TEST_CASE("iid gaussian input yields small arch/garch terms and unit volatility") {
    std::mt19937_64 eng = make_engine(123);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd r(2000);
    for (int i = 0; i < r.size(); ++i) r[i] = normal(eng);

    const Garch11Fit fit = fit_garch11(r);
    const double sample_var = (r.array() - r.mean()).square().mean();
    CHECK(fit.params.a + fit.params.b < 1.0);
    CHECK(fit.params.a < 0.08);
    // unconditional variance close to the sample variance
    const double uncond = fit.params.omega / (1.0 - fit.params.a - fit.params.b);
    CHECK(uncond == doctest::Approx(sample_var).epsilon(0.15));
    // volatility path flat near 1 within 10%
    CHECK(fit.volatility.mean() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(fit.volatility.minCoeff() > 0.7);
    CHECK(fit.volatility.maxCoeff() < 1.4);
}

TEST_CASE("parameter recovery on a simulated path") {
    Garch11Params truth;
    truth.omega = 0.1;
    truth.a = 0.1;
    truth.b = 0.8;
    truth.mu = 0.0;
    const Eigen::VectorXd r = simulate_garch11(truth, 5000, 77);
    const Garch11Fit fit = fit_garch11(r);
    CHECK(std::abs(fit.params.a - truth.a) < 0.1);
    CHECK(std::abs(fit.params.b - truth.b) < 0.1);
}

TEST_CASE("recovery rate over seeded replications") {
    // a and b within +-0.1 of truth in at least 90% of 20 replications
    Garch11Params truth;
    truth.omega = 0.1;
    truth.a = 0.1;
    truth.b = 0.8;
    int hits = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd r = simulate_garch11(truth, 5000, derive_seed(2024, rep));
        try {
            const Garch11Fit fit = fit_garch11(r);
            if (std::abs(fit.params.a - truth.a) < 0.1 && std::abs(fit.params.b - truth.b) < 0.1)
                ++hits;
        } catch (const std::exception&) {
        }
    }
    CHECK(hits >= 18);
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(fit_garch11(Eigen::VectorXd::Constant(100, 1.5)), std::invalid_argument);
    CHECK_THROWS_AS(fit_garch11(Eigen::VectorXd::Zero(10)), std::invalid_argument);
}

TEST_CASE("volatility path matches the recursion for fixed parameters") {
    Garch11Params p;
    p.omega = 0.2;
    p.a = 0.15;
    p.b = 0.7;
    p.mu = 0.1;
    Eigen::VectorXd r(4);
    r << 0.1, 0.5, -0.3, 0.2;
    const Eigen::VectorXd vol = garch11_volatility(r, p);

    const Eigen::VectorXd eps = r.array() - p.mu;
    double sigma2 = eps.squaredNorm() / 4.0;
    CHECK(vol[0] == doctest::Approx(std::sqrt(sigma2)));
    sigma2 = p.omega + p.a * eps[0] * eps[0] + p.b * sigma2;
    CHECK(vol[1] == doctest::Approx(std::sqrt(sigma2)));
}
