#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "mixfreq/midas.hpp"
#include "mixfreq/optim.hpp"
#include "mixfreq/rng.hpp"
#include "support/test_panels.hpp"

using namespace mixfreq;

namespace {

// Noiseless dynamic MIDAS data generator at the fitted equation's own
// alignment: y[t] = a0 + a1 y[t-1] + beta * w(theta) . z-lags at (t, <0>).
MixedPanel midas_dgp(int periods, int kappa, int K, double a0, double a1, double beta,
                     const AlmonTheta& theta, double noise_sd, std::uint64_t seed,
                     const Eigen::VectorXd* custom_weights = nullptr) {
    std::mt19937_64 eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SeriesGroup g;
    g.kappa = Frequency{kappa};
    g.data.resize(periods * kappa, 1);
    for (int i = 0; i < g.data.rows(); ++i) g.data(i, 0) = normal(eng);
    g.names = {"z"};

    const Eigen::VectorXd w = custom_weights ? *custom_weights : almon_weights(theta, K);
    Eigen::VectorXd y(periods);
    y[0] = normal(eng);
    for (int t = 1; t < periods; ++t) {
        double agg = 0.0;
        const int r = t * kappa;  // release index at the boundary slot
        for (int k = 0; k <= K; ++k)
            agg += w[k] * (r - k >= 0 ? g.data(r - k, 0) : 0.0);
        y[t] = a0 + a1 * y[t - 1] + beta * agg + noise_sd * normal(eng);
    }
    return MixedPanel(y, {g});
}

}  // namespace

TEST_CASE("almon weights") {
    SUBCASE("flat at theta = 0") {
        const Eigen::VectorXd w = almon_weights(AlmonTheta{0.0, 0.0}, 2);
        for (int k = 0; k < 3; ++k) CHECK(w[k] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("exponential decay") {
        const Eigen::VectorXd w = almon_weights(AlmonTheta{-1.0, 0.0}, 2);
        const double z = 1.0 + std::exp(-1.0) + std::exp(-2.0);
        CHECK(w[0] == doctest::Approx(1.0 / z).epsilon(1e-5));
        CHECK(w[1] == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-5));
        CHECK(w[2] == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-5));
    }
    SUBCASE("normalized and nonnegative for arbitrary parameters") {
        std::mt19937_64 eng = make_engine(2);
        std::uniform_real_distribution<double> unif(-0.4, 0.4);
        for (int trial = 0; trial < 50; ++trial) {
            const AlmonTheta theta{unif(eng), unif(eng) * 0.05};
            const Eigen::VectorXd w = almon_weights(theta, 12);
            CHECK(w.minCoeff() >= 0.0);
            CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("shift invariance of the normalized exponent") {
        // adding a constant to the exponent cancels in the softmax; realized
        // here by the internal max-shift, so large positive slopes still work
        const Eigen::VectorXd w = almon_weights(AlmonTheta{20.0, 0.0}, 4);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(w[4] > 0.999);
    }
    SUBCASE("overflow guard") {
        CHECK_THROWS_AS(almon_weights(AlmonTheta{30.0, 0.0}, 30), std::domain_error);
        CHECK_THROWS_AS(almon_weights(AlmonTheta{0.0, 1.0}, 30), std::domain_error);
    }
}

TEST_CASE("build_design") {
    SUBCASE("contemporaneous regression at kappa = 1, p = 0, K = 0") {
        const MixedPanel panel = mixfreq::testing::flat_panel(12, 4);
        const MidasDesign d = build_design(panel, 0, {0});
        CHECK(d.full_rows == 12);
        CHECK(d.rows() == 12);
        for (int i = 0; i < d.rows(); ++i) {
            CHECK(d.response[i] == panel.target()[d.row_period[i]]);
            CHECK(d.lag_blocks[0](i, 0) == panel.group(0).data(d.row_period[i], 0));
        }
    }
    SUBCASE("replication count before exclusion") {
        std::mt19937_64 eng = make_engine(3);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd y(10);
        for (int t = 0; t < 10; ++t) y[t] = normal(eng);
        SeriesGroup g;
        g.kappa = Frequency{3};
        g.data.resize(30, 1);
        for (int i = 0; i < 30; ++i) g.data(i, 0) = normal(eng);
        const MixedPanel panel(y, {g});
        const MidasDesign d = build_design(panel, 0, {0});
        CHECK(d.full_rows == 30);
    }
    SUBCASE("row exclusion keeps only rows with full lag windows") {
        const MixedPanel panel = mixfreq::testing::flat_panel(20, 6);
        const MidasDesign d = build_design(panel, 2, {3});
        // need t >= 2 and release index >= 3 -> t >= 3
        CHECK(d.row_period.front() == 3);
        CHECK(d.rows() == 17);
        // spot-check a random row against direct panel indexing
        for (int i : {0, 5, 16}) {
            const int t = d.row_period[i];
            CHECK(d.response[i] == panel.target()[t]);
            CHECK(d.ar_block(i, 0) == panel.target()[t - 1]);
            CHECK(d.ar_block(i, 1) == panel.target()[t - 2]);
            for (int k = 0; k <= 3; ++k)
                CHECK(d.lag_blocks[0](i, k) == panel.group(0).data(t - k, 0));
        }
    }
    SUBCASE("identifiability condition enforced with the required minimum") {
        const MixedPanel panel = mixfreq::testing::flat_panel(6, 7);
        CHECK_THROWS_WITH_AS(build_design(panel, 3, {2}), doctest::Contains("T >"),
                             std::invalid_argument);
    }
    SUBCASE("production-sized configuration builds") {
        // three AR lags, monthly K=9 and fine K=30 on T=80
        mixfreq::testing::GrangerPanelOptions opt;
        opt.periods = 80;
        opt.kappa_max = 12;
        const MixedPanel panel = mixfreq::testing::granger_panel(opt, 7);
        const MidasDesign d = build_design(panel, 3, {30, 9});
        CHECK(d.rows() > 0);
        CHECK(d.parameter_count() == 1 + 3 + 3 * 2);
    }
}

TEST_CASE("midas loss and gradient") {
    mixfreq::testing::GrangerPanelOptions opt;
    opt.periods = 60;
    opt.kappa_max = 6;
    const MixedPanel panel = mixfreq::testing::granger_panel(opt, 11);
    const MidasDesign design = build_design(panel, 1, {4, 2});
    const int dim = design.parameter_count();

    SUBCASE("gradient matches central finite differences") {
        std::mt19937_64 eng = make_engine(21);
        std::uniform_real_distribution<double> unif(-0.3, 0.3);
        for (int point = 0; point < 20; ++point) {
            Eigen::VectorXd x(dim);
            for (int i = 0; i < dim; ++i) x[i] = unif(eng);
            Eigen::VectorXd grad;
            midas_loss_grad(x, design, grad);
            const Eigen::VectorXd fd = optim::finite_difference_gradient(
                [&design](const Eigen::VectorXd& p) {
                    Eigen::VectorXd g;
                    return midas_loss_grad(p, design, g);
                },
                x, 1e-6);
            for (int i = 0; i < dim; ++i) {
                const double scale = std::max({1.0, std::abs(grad[i]), std::abs(fd[i])});
                CHECK(std::abs(grad[i] - fd[i]) / scale < 1e-5);
            }
        }
    }
    SUBCASE("zero beta kills the theta gradient") {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
        x[0] = 0.3;
        x[1] = 0.2;
        // betas are at offsets 2 and 5; thetas follow each beta
        Eigen::VectorXd grad;
        midas_loss_grad(x, design, grad);
        CHECK(grad[3] == 0.0);
        CHECK(grad[4] == 0.0);
        CHECK(grad[6] == 0.0);
        CHECK(grad[7] == 0.0);
    }
}

TEST_CASE("fit_midas on a noiseless dynamic DGP recovers the truth") {
    const AlmonTheta theta{-0.2, -0.01};
    const MixedPanel panel = midas_dgp(200, 3, 9, 0.3, 0.5, 1.2, theta, 0.0, 31);
    MidasFitConfig cfg;
    cfg.p = 1;
    cfg.lags_per_group = {9};
    const MidasModel model = fit_midas(panel, 0, 200, cfg);

    CHECK(model.loss < 1e-10);  // exact fit
    CHECK(model.grad_norm < 1e-6);
    // coefficients in standardized units map back through the scale ratio
    const double y_sd = model.normalization.target_std;
    const double z_sd = model.normalization.group_std[0][0];
    CHECK(model.ar[0] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(model.regressors[0].beta * y_sd / z_sd ==
          doctest::Approx(1.2).epsilon(1e-3));
    // weight curve recovered pointwise
    const Eigen::VectorXd w_true = almon_weights(theta, 9);
    const Eigen::VectorXd w_fit = almon_weights(model.regressors[0].theta, 9);
    CHECK((w_true - w_fit).lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("default start is the zero vector; multistart uses the sobol cube") {
    const MixedPanel panel = midas_dgp(80, 3, 4, 0.0, 0.3, 0.8, AlmonTheta{-0.3, 0.0}, 0.1, 5);
    MidasFitConfig cfg;
    cfg.p = 1;
    cfg.lags_per_group = {4};

    MidasFitReport report;
    fit_midas(panel, 0, 80, cfg, &report);
    REQUIRE(report.starts.size() == 1);
    CHECK(report.starts[0].start.isZero());

    cfg.multistart = true;
    MidasFitReport multi_report;
    fit_midas(panel, 0, 80, cfg, &multi_report);
    REQUIRE(multi_report.starts.size() == 64);
    for (const MidasStartResult& s : multi_report.starts) {
        CHECK(s.start.minCoeff() >= 0.0);
        CHECK(s.start.maxCoeff() <= 0.025);
    }
    // the multistart winner is no worse than any recorded minimizer
    const double best = multi_report.starts[multi_report.best_index].loss;
    for (const MidasStartResult& s : multi_report.starts) CHECK(best <= s.loss + 1e-12);
}

TEST_CASE("forecasting") {
    const MixedPanel panel = midas_dgp(120, 3, 4, 0.2, 0.5, 1.0, AlmonTheta{-0.4, 0.0}, 0.05, 13);
    MidasFitConfig cfg;
    cfg.p = 1;
    cfg.lags_per_group = {4};
    const MidasModel model = fit_midas(panel, 0, 100, cfg);

    SUBCASE("intercept-only model forecasts its constant") {
        MidasModel flat = model;
        flat.ar.setZero();
        for (auto& r : flat.regressors) r.beta = 0.0;
        flat.alpha0 = 0.7;
        const double expect =
            0.7 * flat.normalization.target_std + flat.normalization.target_mean;
        for (int h = 1; h <= 4; ++h)
            CHECK(forecast_midas(flat, panel, 110, h) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("hf forecast at s = 0 equals the one-step forecast") {
        for (int origin = 100; origin < 110; ++origin)
            CHECK(hf_forecast_midas(model, panel, origin, 0) ==
                  forecast_midas(model, panel, origin, 1));
    }
    SUBCASE("scalar hand trace") {
        // standardized-space manual computation of the one-step forecast
        const MixedPanel std_panel = apply_normalization(panel, model.normalization);
        const int origin = 105;
        const Eigen::VectorXd w = almon_weights(model.regressors[0].theta, 4);
        double pred = model.alpha0 + model.ar[0] * std_panel.target()[origin];
        double agg = 0.0;
        for (int k = 0; k <= 4; ++k)
            agg += w[k] * std_panel.group(0).data(origin * 3 - k, 0);
        pred += model.regressors[0].beta * agg;
        const double manual = inverse_standardize_target(std_panel, pred);
        CHECK(forecast_midas(model, panel, origin, 1) == doctest::Approx(manual).epsilon(1e-12));
    }
    SUBCASE("multistep iterates the AR recursion with frozen regressor terms") {
        const MixedPanel std_panel = apply_normalization(panel, model.normalization);
        const int origin = 102;
        const Eigen::VectorXd w = almon_weights(model.regressors[0].theta, 4);
        double agg = 0.0;
        for (int k = 0; k <= 4; ++k)
            agg += w[k] * std_panel.group(0).data(origin * 3 - k, 0);
        const double direct = model.regressors[0].beta * agg;
        double y1 = model.alpha0 + model.ar[0] * std_panel.target()[origin] + direct;
        double y2 = model.alpha0 + model.ar[0] * y1 + direct;
        CHECK(forecast_midas(model, panel, origin, 2) ==
              doctest::Approx(inverse_standardize_target(std_panel, y2)).epsilon(1e-12));
    }
    SUBCASE("insufficient lag history") {
        CHECK_THROWS_AS(hf_forecast_midas(model, panel, 0, 0), std::out_of_range);
    }
}

TEST_CASE("engineered bimodal DGP exposes local minima to the multistart") {
    // truth mixes two separated Almon modes; single-mode fits are local minima
    const int K = 12;
    Eigen::VectorXd w_early = almon_weights(AlmonTheta{-1.2, 0.0}, K);
    Eigen::VectorXd w_late(K + 1);
    for (int k = 0; k <= K; ++k) w_late[k] = w_early[K - k];
    Eigen::VectorXd w_mix = 0.5 * w_early + 0.5 * w_late;
    const MixedPanel panel =
        midas_dgp(150, 3, K, 0.0, 0.0, 2.0, AlmonTheta{0, 0}, 0.02, 99, &w_mix);

    MidasFitConfig cfg;
    cfg.p = 0;
    cfg.lags_per_group = {K};
    cfg.multistart = true;
    MidasFitReport report;
    fit_midas(panel, 0, 150, cfg, &report);

    double worst = -1.0, best = 1e300;
    for (const MidasStartResult& s : report.starts) {
        if (!std::isfinite(s.loss)) continue;
        worst = std::max(worst, s.loss);
        best = std::min(best, s.loss);
    }
    CHECK(best < worst * 0.999);  // strictly lower than the worst single start
}

TEST_CASE("midas serialization round trips") {
    const MixedPanel panel = midas_dgp(90, 3, 4, 0.1, 0.4, 0.9, AlmonTheta{-0.3, 0.0}, 0.05, 44);
    MidasFitConfig cfg;
    cfg.p = 1;
    cfg.lags_per_group = {4};
    const MidasModel model = fit_midas(panel, 0, 90, cfg);
    const std::string path =
        (std::filesystem::temp_directory_path() / "mixfreq_midas.json").string();
    save_midas(model, path);
    const MidasModel loaded = load_midas(path);
    CHECK(loaded.alpha0 == model.alpha0);
    CHECK(loaded.regressors[0].theta.theta1 == model.regressors[0].theta.theta1);
    CHECK(forecast_midas(loaded, panel, 85, 2) == forecast_midas(model, panel, 85, 2));
    std::remove(path.c_str());
}
