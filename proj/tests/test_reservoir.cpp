#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "mixfreq/reservoir.hpp"
#include "mixfreq/rng.hpp"

using namespace mixfreq;

TEST_CASE("sample_params: distribution shape, sparsity, determinism") {
    const StateParams p = sample_params(30, 9, 1.0 / 3.0, 42);
    CHECK(p.A.rows() == 30);
    CHECK(p.C.cols() == 9);
    CHECK(p.zeta.isZero());

    // about a third of the 900 reservoir entries survive sparsification
    const int nonzeros = static_cast<int>((p.A.array() != 0.0).count());
    CHECK(nonzeros > 230);
    CHECK(nonzeros < 370);

    for (int i = 0; i < p.C.rows(); ++i)
        for (int j = 0; j < p.C.cols(); ++j) CHECK(std::abs(p.C(i, j)) <= 1.0);

    const StateParams dense = sample_params(10, 2, 1.0, 7);
    CHECK((dense.A.array() != 0.0).all());

    const StateParams again = sample_params(30, 9, 1.0 / 3.0, 42);
    CHECK((again.A.array() == p.A.array()).all());
    CHECK((again.C.array() == p.C.array()).all());
}

TEST_CASE("normalize_params scales each block") {
    StateParams raw;
    raw.A.resize(2, 2);
    raw.A << 2.0, 0.0, 0.0, 1.0;
    raw.C.resize(2, 1);
    raw.C << 3.0, 4.0;
    raw.zeta = Eigen::VectorXd::Zero(2);

    const StateParams n = normalize_params(raw);
    CHECK(n.A(0, 0) == doctest::Approx(1.0));
    CHECK(n.A(1, 1) == doctest::Approx(0.5));
    CHECK(n.C(0, 0) == doctest::Approx(0.6));
    CHECK(n.C(1, 0) == doctest::Approx(0.8));
    CHECK(n.zeta.isZero());  // zero block passes through

    CHECK(spectral_radius(n.A) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(spectral_norm(n.C) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("normalized random draws satisfy the unit-scale invariants") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const StateParams n = normalize_params(sample_params(40, 5, 0.25, seed));
        CHECK(std::abs(spectral_radius(n.A) - 1.0) < 1e-8);
        CHECK(std::abs(spectral_norm(n.C) - 1.0) < 1e-8);
    }
}

TEST_CASE("state_step scalar values") {
    StateParams p;
    p.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
    p.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
    p.zeta = Eigen::VectorXd::Zero(1);

    SUBCASE("all-zero hyperparameters give tanh(0)") {
        const Hyperparams h{0.0, 0.0, 0.0, 0.0};
        const Eigen::VectorXd x = state_step(p, h, Eigen::VectorXd::Ones(1),
                                             Eigen::VectorXd::Ones(1));
        CHECK(x[0] == 0.0);
    }
    SUBCASE("leaky tanh evaluation") {
        const Hyperparams h{0.2, 0.5, 1.0, 0.0};
        const Eigen::VectorXd x = state_step(p, h, Eigen::VectorXd::Zero(1),
                                             Eigen::VectorXd::Ones(1));
        CHECK(x[0] == doctest::Approx(0.8 * std::tanh(1.0)).epsilon(1e-12));
    }
    SUBCASE("leak-dominated limit") {
        const Hyperparams h{0.99, 0.0, 0.0, 0.0};
        const Eigen::VectorXd x = state_step(p, h, Eigen::VectorXd::Ones(1),
                                             Eigen::VectorXd::Zero(1));
        CHECK(x[0] == doctest::Approx(0.99).epsilon(1e-12));
    }
    SUBCASE("non-finite input rejected") {
        const Hyperparams h{0.0, 0.5, 1.0, 0.0};
        Eigen::VectorXd bad(1);
        bad << std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(state_step(p, h, bad, Eigen::VectorXd::Zero(1)), std::invalid_argument);
    }
}

TEST_CASE("state boundedness and run_states path semantics") {
    const StateParams p = normalize_params(sample_params(20, 3, 0.5, 5));
    const Hyperparams h{0.3, 0.9, 1.0, 0.0};

    std::mt19937_64 eng = make_engine(9);
    std::normal_distribution<double> normal(0.0, 2.0);
    Eigen::MatrixXd Z(50, 3);
    for (int i = 0; i < Z.size(); ++i) Z(i / 3, i % 3) = normal(eng);

    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(20, 0.4);
    const Eigen::MatrixXd X = run_states(p, h, x0, Z);
    CHECK(X.rows() == 50);

    // convex combination of the previous state and a tanh image
    const double bound = std::max(x0.lpNorm<Eigen::Infinity>(), 1.0);
    CHECK(X.array().abs().maxCoeff() <= bound + 1e-15);

    // row t equals the manual recursion
    Eigen::VectorXd x = x0;
    for (int t = 0; t < 5; ++t) {
        x = state_step(p, h, x, Z.row(t).transpose());
        CHECK((X.row(t).transpose() - x).norm() == 0.0);
    }

    CHECK(run_states(p, h, x0, Eigen::MatrixXd(0, 3)).rows() == 0);
}

TEST_CASE("constant input drives the state to a fixed point") {
    const StateParams p = normalize_params(sample_params(15, 2, 0.6, 11));
    const Hyperparams h{0.1, 0.6, 0.8, 0.0};
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(600, 2, 0.7);
    const Eigen::MatrixXd X = run_states(p, h, Eigen::VectorXd::Zero(15), Z);
    CHECK((X.row(599) - X.row(598)).norm() < 1e-10);
}

TEST_CASE("fading memory under the contractive sufficient condition") {
    std::mt19937_64 eng = make_engine(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int inst = 0; inst < 50; ++inst) {
        const StateParams p = normalize_params(sample_params(12, 2, 0.5, derive_seed(100, inst)));
        // pick rho so the sufficient condition ||rho A_bar||_2 < 1 holds
        // (unit spectral radius does not bound the 2-norm of A_bar)
        const Hyperparams h{0.2, 0.9 / spectral_norm(p.A), 1.0, 0.0};
        const double contraction = h.alpha + (1.0 - h.alpha) * esp_margin(p, h);
        REQUIRE(contraction < 1.0);

        Eigen::MatrixXd Z(40, 2);
        for (int i = 0; i < Z.size(); ++i) Z(i / 2, i % 2) = normal(eng);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(12);
        Eigen::VectorXd b = Eigen::VectorXd::Random(12);
        const double d0 = (a - b).norm();
        for (int t = 0; t < 40; ++t) {
            a = state_step(p, h, a, Z.row(t).transpose());
            b = state_step(p, h, b, Z.row(t).transpose());
            CHECK((a - b).norm() <= std::pow(contraction, t + 1) * d0 + 1e-10);
        }
    }
}

TEST_CASE("esp_margin equals rho times the spectral norm") {
    const StateParams p = normalize_params(sample_params(10, 2, 1.0, 3));
    const Hyperparams h{0.0, 0.5, 1.0, 0.0};
    CHECK(esp_margin(p, h) == doctest::Approx(0.5 * spectral_norm(p.A)).epsilon(1e-10));

    StateParams zero;
    zero.A = Eigen::MatrixXd::Zero(4, 4);
    zero.C = Eigen::MatrixXd::Zero(4, 1);
    zero.zeta = Eigen::VectorXd::Zero(4);
    CHECK(esp_margin(zero, h) == 0.0);

    // orthogonal A_bar: all singular values 1, margin = rho
    Eigen::MatrixXd rot(2, 2);
    rot << std::cos(0.7), -std::sin(0.7), std::sin(0.7), std::cos(0.7);
    StateParams orth;
    orth.A = rot;
    orth.C = Eigen::MatrixXd::Zero(2, 1);
    orth.zeta = Eigen::VectorXd::Zero(2);
    CHECK(esp_margin(orth, h) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("ridge closed form") {
    SUBCASE("scalar example") {
        Eigen::MatrixXd X(2, 1), Y(2, 1);
        X << 1.0, 2.0;
        Y << 2.0, 4.0;
        const Readout w = ridge_fit(X, Y, 0.5, false);
        CHECK(w.W(0, 0) == doctest::Approx(10.0 / 6.0).epsilon(1e-12));
    }
    SUBCASE("small penalty matches least squares") {
        std::mt19937_64 eng = make_engine(17);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd X(50, 4), Y(50, 2);
        for (int i = 0; i < X.size(); ++i) X(i / 4, i % 4) = normal(eng);
        for (int i = 0; i < Y.size(); ++i) Y(i / 2, i % 2) = normal(eng);
        const Readout w = ridge_fit(X, Y, 1e-12, false);
        const Eigen::MatrixXd ols =
            (X.transpose() * X).ldlt().solve(X.transpose() * Y);
        CHECK((w.W - ols).norm() < 1e-6 * ols.norm());
    }
    SUBCASE("huge penalty shrinks to zero") {
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(30, 3);
        Eigen::MatrixXd Y = Eigen::MatrixXd::Random(30, 1);
        const Readout w = ridge_fit(X, Y, 1e12, false);
        CHECK(w.W.norm() <= 1e-6 * (X.transpose() * Y).norm());
    }
    SUBCASE("gradient of the objective vanishes at the solution") {
        std::mt19937_64 eng = make_engine(23);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd X(80, 6), Y(80, 1);
        for (int i = 0; i < X.size(); ++i) X(i / 6, i % 6) = normal(eng);
        for (int i = 0; i < Y.size(); ++i) Y(i, 0) = normal(eng);
        const double lambda = 0.05;
        const Readout w = ridge_fit(X, Y, lambda, false);
        const Eigen::MatrixXd grad =
            -2.0 * X.transpose() * (Y - X * w.W) + 2.0 * lambda * 80.0 * w.W;
        CHECK(grad.norm() < 1e-8 * std::max(1.0, (X.transpose() * Y).norm()));
    }
    SUBCASE("row permutation invariance") {
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(20, 3);
        Eigen::MatrixXd Y = Eigen::MatrixXd::Random(20, 1);
        Eigen::MatrixXd Xp(20, 3), Yp(20, 1);
        for (int i = 0; i < 20; ++i) {
            Xp.row(i) = X.row(19 - i);
            Yp.row(i) = Y.row(19 - i);
        }
        const Readout a = ridge_fit(X, Y, 0.3, false);
        const Readout b = ridge_fit(Xp, Yp, 0.3, false);
        CHECK((a.W - b.W).norm() < 1e-12);
    }
    SUBCASE("intercept recovered from the window means") {
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(40, 2);
        Eigen::MatrixXd Y = (X * Eigen::Vector2d(1.5, -0.5)).rowwise() +
                            Eigen::RowVectorXd::Constant(1, 3.0);
        const Readout w = ridge_fit(X, Y, 1e-10, true);
        CHECK(w.intercept(0) == doctest::Approx(3.0).epsilon(1e-5));
        CHECK(w.apply(X.row(7).transpose())(0) == doctest::Approx(Y(7, 0)).epsilon(1e-5));
    }
    SUBCASE("input validation") {
        Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
        Eigen::MatrixXd Y = Eigen::MatrixXd::Random(4, 1);
        CHECK_THROWS_AS(ridge_fit(X, Y, 0.1), std::invalid_argument);
        Eigen::MatrixXd Y2 = Eigen::MatrixXd::Random(5, 1);
        CHECK_THROWS_AS(ridge_fit(X, Y2, 0.0), std::invalid_argument);
        Y2(2, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(ridge_fit(X, Y2, 0.1), std::invalid_argument);
    }
}

TEST_CASE("autonomous_step") {
    StateParams p;
    p.A = Eigen::MatrixXd::Constant(1, 1, 0.3);
    p.C = Eigen::MatrixXd::Constant(1, 1, 0.5);
    p.zeta = Eigen::VectorXd::Zero(1);
    const Hyperparams h{0.0, 1.0, 1.0, 0.0};

    Readout w_in;
    w_in.W = Eigen::MatrixXd::Constant(1, 1, 0.4);
    w_in.intercept = Eigen::RowVectorXd::Zero(1);

    SUBCASE("scalar evaluation") {
        const Eigen::VectorXd x =
            autonomous_step(p, h, w_in, Eigen::VectorXd::Ones(1));
        CHECK(x[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
    }
    SUBCASE("zero input readout reduces to state_step with zero input") {
        Readout zero = w_in;
        zero.W.setZero();
        const Eigen::VectorXd a = autonomous_step(p, h, zero, Eigen::VectorXd::Ones(1));
        const Eigen::VectorXd b =
            state_step(p, h, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
        CHECK(a == b);
    }
    SUBCASE("fixed point under contraction") {
        Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
        for (int i = 0; i < 200; ++i) x = autonomous_step(p, h, w_in, x);
        const Eigen::VectorXd fx = autonomous_step(p, h, w_in, x);
        CHECK((fx - x).norm() < 1e-10);
    }
    SUBCASE("dimension mismatch") {
        Readout bad;
        bad.W = Eigen::MatrixXd::Zero(2, 1);
        bad.intercept = Eigen::RowVectorXd::Zero(1);
        CHECK_THROWS_AS(autonomous_step(p, h, bad, Eigen::VectorXd::Ones(1)),
                        std::invalid_argument);
    }
}

TEST_CASE("spectral_norm agrees with dense SVD") {
    std::mt19937_64 eng = make_engine(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd A(15, 8);
        for (int i = 0; i < A.size(); ++i) A(i / 8, i % 8) = normal(eng);
        const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
        CHECK(spectral_norm(A) == doctest::Approx(svd).epsilon(1e-8));
    }
}
