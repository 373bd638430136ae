#include "mixfreq/reservoir.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mixfreq/rng.hpp"

namespace mixfreq {

void Hyperparams::validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("Hyperparams: alpha must be in [0, 1)");
    if (rho < 0.0 || gamma < 0.0 || omega < 0.0)
        throw std::invalid_argument("Hyperparams: rho, gamma, omega must be >= 0");
}

StateParams sample_params(int state_dim, int input_dim, double sparsity, std::uint64_t seed) {
    if (state_dim < 1 || input_dim < 1)
        throw std::invalid_argument("sample_params: dimensions must be >= 1");
    if (!(sparsity > 0.0 && sparsity <= 1.0))
        throw std::invalid_argument("sample_params: sparsity must be in (0, 1]");

    std::mt19937_64 eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::uniform_real_distribution<double> keep(0.0, 1.0);

    StateParams p;
    p.sparsity = sparsity;
    p.seed = seed;
    p.A.resize(state_dim, state_dim);
    for (int i = 0; i < state_dim; ++i)
        for (int j = 0; j < state_dim; ++j) {
            const double v = normal(eng);
            p.A(i, j) = keep(eng) < sparsity ? v : 0.0;
        }
    p.C.resize(state_dim, input_dim);
    for (int i = 0; i < state_dim; ++i)
        for (int j = 0; j < input_dim; ++j) {
            const double v = uniform(eng);
            p.C(i, j) = keep(eng) < sparsity ? v : 0.0;
        }
    p.zeta = Eigen::VectorXd::Zero(state_dim);
    return p;
}

namespace {

Eigen::VectorXd power_start(Eigen::Index n) {
    std::mt19937_64 eng = make_engine(0x5eedULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(eng);
    return v.normalized();
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& A) {
    if (A.rows() == 0) return 0.0;
    if (A.rows() <= 512) {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(A, /*computeEigenvectors=*/false);
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    // Geometric growth rate of normalized power iterates. The running
    // geometric mean also converges when the dominant eigenvalue is a
    // complex pair, where single-step growth oscillates.
    Eigen::VectorXd v = power_start(A.rows());
    double log_growth = 0.0;
    double estimate = 0.0;
    double previous = 0.0;
    for (int it = 1; it <= 10000; ++it) {
        Eigen::VectorXd w = A * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        log_growth += std::log(norm);
        v = w / norm;
        estimate = std::exp(log_growth / it);
        if (it > 32 && std::abs(estimate - previous) < 1e-10 * std::max(1.0, estimate))
            return estimate;
        previous = estimate;
    }
    return estimate;
}

double spectral_norm(const Eigen::MatrixXd& A) {
    if (A.size() == 0) return 0.0;
    // Power iteration on A^T A: symmetric PSD, so the Rayleigh quotient
    // converges monotonically to the largest squared singular value.
    Eigen::VectorXd v = power_start(A.cols());
    double sigma2 = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd w = A.transpose() * (A * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / norm;
        if (std::abs(next - sigma2) < 1e-12 * std::max(1.0, next)) {
            sigma2 = next;
            break;
        }
        sigma2 = next;
    }
    return std::sqrt(std::max(0.0, sigma2));
}

StateParams normalize_params(const StateParams& raw) {
    StateParams p = raw;
    const double radius = spectral_radius(raw.A);
    if (radius > 0.0) p.A /= radius;
    const double c_norm = spectral_norm(raw.C);
    if (c_norm > 0.0) p.C /= c_norm;
    const double z_norm = raw.zeta.norm();
    if (z_norm > 0.0) p.zeta /= z_norm;
    p.normalized = true;
    return p;
}

double esp_margin(const StateParams& params, const Hyperparams& hyper) {
    return spectral_norm(hyper.rho * params.A);
}

Eigen::VectorXd state_step(const StateParams& params, const Hyperparams& hyper,
                           const Eigen::VectorXd& x_prev, const Eigen::VectorXd& z) {
    if (x_prev.size() != params.A.rows() || z.size() != params.C.cols())
        throw std::invalid_argument("state_step: dimension mismatch");
    if (!x_prev.allFinite() || !z.allFinite())
        throw std::invalid_argument("state_step: non-finite input");
    const Eigen::VectorXd drive =
        hyper.rho * (params.A * x_prev) + hyper.gamma * (params.C * z) + hyper.omega * params.zeta;
    return hyper.alpha * x_prev + (1.0 - hyper.alpha) * drive.array().tanh().matrix();
}

Eigen::MatrixXd run_states(const StateParams& params, const Hyperparams& hyper,
                           const Eigen::VectorXd& x0, const Eigen::MatrixXd& Z) {
    const Eigen::Index T = Z.rows();
    Eigen::MatrixXd X(T, params.state_dim());
    Eigen::VectorXd x = x0;
    for (Eigen::Index t = 0; t < T; ++t) {
        x = state_step(params, hyper, x, Z.row(t).transpose());
        X.row(t) = x.transpose();
    }
    return X;
}

Readout ridge_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda,
                  bool with_intercept) {
    if (X.rows() != Y.rows()) throw std::invalid_argument("ridge_fit: row counts differ");
    if (X.rows() < 1) throw std::invalid_argument("ridge_fit: empty design");
    if (!(lambda > 0.0)) throw std::invalid_argument("ridge_fit: lambda must be > 0");
    if (!X.allFinite() || !Y.allFinite())
        throw std::invalid_argument("ridge_fit: non-finite entries");

    const double rows = static_cast<double>(X.rows());

    Readout readout;
    readout.lambda = lambda;
    readout.has_intercept = with_intercept;

    if (with_intercept) {
        const Eigen::RowVectorXd x_mean = X.colwise().mean();
        const Eigen::RowVectorXd y_mean = Y.colwise().mean();
        const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
        const Eigen::MatrixXd Yc = Y.rowwise() - y_mean;
        Eigen::MatrixXd gram = Xc.transpose() * Xc;
        gram.diagonal().array() += lambda * rows;
        readout.W = gram.ldlt().solve(Xc.transpose() * Yc);
        readout.intercept = y_mean - x_mean * readout.W;
    } else {
        Eigen::MatrixXd gram = X.transpose() * X;
        gram.diagonal().array() += lambda * rows;
        readout.W = gram.ldlt().solve(X.transpose() * Y);
        readout.intercept = Eigen::RowVectorXd::Zero(Y.cols());
    }
    return readout;
}

Eigen::VectorXd autonomous_step(const StateParams& params, const Hyperparams& hyper,
                                const Readout& input_readout, const Eigen::VectorXd& x) {
    if (input_readout.W.rows() != params.A.rows() || input_readout.W.cols() != params.C.cols())
        throw std::invalid_argument("autonomous_step: input readout dimensions do not match");
    Eigen::VectorXd z = input_readout.W.transpose() * x;
    if (input_readout.has_intercept) z += input_readout.intercept.transpose();
    const Eigen::VectorXd drive =
        hyper.rho * (params.A * x) + hyper.gamma * (params.C * z) + hyper.omega * params.zeta;
    return hyper.alpha * x + (1.0 - hyper.alpha) * drive.array().tanh().matrix();
}

}  // namespace mixfreq
