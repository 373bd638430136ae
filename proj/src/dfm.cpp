#include "mixfreq/dfm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "mixfreq/csv.hpp"
#include "mixfreq/json_io.hpp"
#include "mixfreq/midas.hpp"
#include "mixfreq/optim.hpp"
#include "mixfreq/parallel.hpp"
#include "mixfreq/rng.hpp"

namespace mixfreq {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Eigen::MatrixXd FactorDynamics::effective_transition() const {
    if (A_bar.rows() != k || A_bar.cols() != k)
        throw std::invalid_argument("FactorDynamics: A_bar must be k x k");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("FactorDynamics: rho in (0,1)");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A_bar, false);
    const double lambda1 = A_bar.size() ? solver.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    return A_bar * (rho / std::max(rho, lambda1));
}

Eigen::MatrixXd AggregationScheme::lag_weights() const {
    const int k = static_cast<int>(beta.cols());
    const int L = lag_count;
    Eigen::MatrixXd w(k, L);
    switch (kind) {
        case AggregationKind::Stock:
            if (L != 1) throw std::invalid_argument("Stock aggregation has lag_count 1");
            w.setOnes();
            return w;
        case AggregationKind::AlmonLag: {
            if (psi.rows() != k || psi.cols() != 2)
                throw std::invalid_argument("AlmonLag: psi must be k x 2");
            for (int m = 0; m < k; ++m)
                w.row(m) = almon_weights(AlmonTheta{psi(m, 0), psi(m, 1)}, L - 1).transpose();
            return w;
        }
        case AggregationKind::Trigonometric: {
            if (!(trig_tau > 0.0)) throw std::invalid_argument("Trigonometric: tau must be > 0");
            Eigen::VectorXd e(L);
            for (int l = 0; l < L; ++l) {
                double sum = 0.0;
                for (Eigen::Index j = 0; j < trig_lambda.size(); ++j)
                    sum += trig_lambda[j] * trig_lambda[j] *
                           std::cos(2.0 * M_PI * trig_omega[j] * l + trig_gamma[j]);
                e[l] = sum / trig_tau;
            }
            const Eigen::VectorXd shifted = (e.array() - e.maxCoeff()).exp();
            const Eigen::RowVectorXd row = (shifted / shifted.sum()).transpose();
            for (int m = 0; m < k; ++m) w.row(m) = row;
            return w;
        }
    }
    throw std::logic_error("unreachable");
}

Eigen::VectorXd aggregate(const AggregationScheme& scheme, const Eigen::MatrixXd& lag_window) {
    const int k = static_cast<int>(scheme.beta.cols());
    if (lag_window.rows() != k || lag_window.cols() < scheme.lag_count)
        throw std::invalid_argument("aggregate: lag window must be k x (>= lag_count)");
    const Eigen::MatrixXd w = scheme.lag_weights();
    Eigen::VectorXd weighted(k);
    for (int m = 0; m < k; ++m)
        weighted[m] = w.row(m).dot(lag_window.row(m).head(scheme.lag_count));
    return scheme.beta * weighted;
}

int MfDfmModel::lag_depth() const {
    int depth = 1;
    for (const DfmBlock& b : blocks) depth = std::max(depth, b.aggregation.lag_count);
    return depth;
}

int MfDfmModel::state_dim() const { return dynamics.k * lag_depth(); }

Eigen::MatrixXd MfDfmModel::companion_transition() const {
    const int k = dynamics.k;
    const int P = lag_depth();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k * P, k * P);
    A.topLeftCorner(k, k) = dynamics.effective_transition();
    for (int p = 1; p < P; ++p) A.block(p * k, (p - 1) * k, k, k).setIdentity();
    return A;
}

Eigen::MatrixXd MfDfmModel::companion_noise_cov() const {
    const int k = dynamics.k;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(state_dim(), state_dim());
    Q.topLeftCorner(k, k) = dynamics.R.array().square().matrix().asDiagonal();
    return Q;
}

Eigen::MatrixXd MfDfmModel::loading(int block) const {
    const DfmBlock& b = blocks.at(block);
    const int k = dynamics.k;
    const int P = lag_depth();
    const Eigen::MatrixXd w = b.aggregation.lag_weights();
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(b.n_series(), k * P);
    for (int l = 0; l < b.aggregation.lag_count; ++l)
        for (int m = 0; m < k; ++m)
            lambda.col(l * k + m) = b.aggregation.beta.col(m) * w(m, l);
    return lambda;
}

FilterState initial_filter_state(const MfDfmModel& model) {
    FilterState s;
    s.mean = Eigen::VectorXd::Zero(model.state_dim());
    s.covariance = Eigen::MatrixXd::Identity(model.state_dim(), model.state_dim());
    s.log_likelihood = 0.0;
    s.fine_index = -1;
    return s;
}

namespace {

// Rows of the stacked observation vector belonging to each block.
std::vector<std::pair<int, int>> block_spans(const MfDfmModel& model) {
    std::vector<std::pair<int, int>> spans;
    int off = 0;
    for (const DfmBlock& b : model.blocks) {
        spans.emplace_back(off, b.n_series());
        off += b.n_series();
    }
    return spans;
}

}  // namespace

FilterState kalman_step(const MfDfmModel& model, const FilterState& state,
                        const Eigen::VectorXd& observation, std::int64_t fine_index) {
    const Eigen::MatrixXd A = model.companion_transition();
    const Eigen::MatrixXd Q = model.companion_noise_cov();

    FilterState next;
    next.fine_index = fine_index;
    next.log_likelihood = state.log_likelihood;

    // predict
    next.mean = A * state.mean;
    next.covariance = A * state.covariance * A.transpose() + Q;

    // collect scheduled, observed rows
    const auto spans = block_spans(model);
    std::vector<int> rows;
    std::vector<int> row_block;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const std::int64_t q = model.kappa_max / model.blocks[b].kappa.kappa;
        if (fine_index % q != 0) continue;
        for (int i = 0; i < model.blocks[b].n_series(); ++i) {
            const int r = spans[b].first + i;
            if (r < observation.size() && std::isfinite(observation[r])) {
                rows.push_back(r);
                row_block.push_back(static_cast<int>(b));
            }
        }
    }
    if (rows.empty()) {
        next.covariance = 0.5 * (next.covariance + next.covariance.transpose());
        return next;
    }

    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd lambda(m, model.state_dim());
    Eigen::VectorXd y(m), noise(m);
    std::vector<Eigen::MatrixXd> loadings(model.blocks.size());
    for (int i = 0; i < m; ++i) {
        const int b = row_block[i];
        if (loadings[b].size() == 0) loadings[b] = model.loading(b);
        const int within = rows[i] - spans[b].first;
        lambda.row(i) = loadings[b].row(within);
        y[i] = observation[rows[i]];
        noise[i] = model.blocks[b].S[within];
    }

    Eigen::MatrixXd gamma = lambda * next.covariance * lambda.transpose();
    gamma += noise.array().square().matrix().asDiagonal();
    gamma = 0.5 * (gamma + gamma.transpose());

    // jitter escalation before giving up on the innovation solve
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    for (const double j : {0.0, 1e-10, 1e-8, 1e-6}) {
        Eigen::MatrixXd g = gamma;
        g.diagonal().array() += j;
        llt.compute(g);
        if (llt.info() == Eigen::Success) {
            jitter = j;
            break;
        }
    }
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("kalman_step: innovation covariance not positive definite "
                                 "after jitter escalation");
    gamma.diagonal().array() += jitter;

    const Eigen::VectorXd innovation = y - lambda * next.mean;
    const Eigen::VectorXd solved = llt.solve(innovation);

    double logdet = 0.0;
    for (int i = 0; i < m; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    next.log_likelihood += -0.5 * (m * kLog2Pi + logdet + innovation.dot(solved));

    const Eigen::MatrixXd gain = llt.solve(lambda * next.covariance).transpose();
    next.mean += gain * innovation;
    next.covariance = (Eigen::MatrixXd::Identity(model.state_dim(), model.state_dim()) -
                       gain * lambda) *
                      next.covariance;
    next.covariance = 0.5 * (next.covariance + next.covariance.transpose());
    return next;
}

Eigen::VectorXd observation_at(const MfDfmModel& model, const MixedPanel& panel,
                               std::int64_t fine_index) {
    const std::int64_t kmax = model.kappa_max;
    const std::int64_t t = fine_index / kmax;
    const std::int64_t s = fine_index % kmax;
    int total = 0;
    for (const DfmBlock& b : model.blocks) total += b.n_series();
    Eigen::VectorXd obs = Eigen::VectorXd::Constant(total, std::numeric_limits<double>::quiet_NaN());

    int off = 0;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const DfmBlock& blk = model.blocks[b];
        const std::int64_t q = kmax / blk.kappa.kappa;
        if (s % q == 0) {
            if (b == 0) {
                obs[off] = panel.target()[t];
            } else {
                const SeriesGroup& g = panel.group(static_cast<int>(b) - 1);
                const std::int64_t row = t * g.kappa.kappa + s / q;
                obs.segment(off, g.n_series()) = g.data.row(row).transpose();
            }
        }
        off += blk.n_series();
    }
    return obs;
}

FilterState filter_panel(const MfDfmModel& model, const MixedPanel& panel,
                         std::int64_t last_fine_index, const std::string& trace_csv) {
    const std::int64_t total =
        static_cast<std::int64_t>(panel.periods()) * model.kappa_max;
    const std::int64_t last = last_fine_index < 0 ? total - 1 : last_fine_index;
    if (last >= total) throw std::out_of_range("filter_panel: fine index beyond the panel");

    std::ofstream trace;
    if (!trace_csv.empty()) {
        trace.open(trace_csv, std::ios::binary);
        trace << "fine_index,log_likelihood";
        for (int i = 0; i < model.dynamics.k; ++i) trace << ",factor_" << i;
        trace << "\n";
    }

    FilterState state = initial_filter_state(model);
    for (std::int64_t j = 0; j <= last; ++j) {
        state = kalman_step(model, state, observation_at(model, panel, j), j);
        if (trace.is_open()) {
            trace << j << ',' << format_double(state.log_likelihood);
            for (int i = 0; i < model.dynamics.k; ++i)
                trace << ',' << format_double(state.mean[i]);
            trace << '\n';
        }
    }
    return state;
}

double marginal_loglik(const MfDfmModel& model, const MixedPanel& panel) {
    return filter_panel(model, panel).log_likelihood;
}

namespace {

// Parameter packing for the likelihood ascent:
// [A_bar (k^2), logit(rho), log R (k), per covariate block: beta (n*k),
//  psi (2k, AlmonLag only), log S (n)] and log S for the target block first.
struct DfmParamLayout {
    int k = 0;
    std::vector<int> block_n;
    std::vector<AggregationKind> block_kind;
    std::vector<int> block_lags;

    int size() const {
        int n = k * k + 1 + k;
        for (std::size_t b = 0; b < block_n.size(); ++b) {
            n += block_n[b] * k;  // beta
            if (block_kind[b] == AggregationKind::AlmonLag) n += 2 * k;
            n += block_n[b];  // log S
        }
        return n;
    }
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

Eigen::VectorXd pack_dfm(const MfDfmModel& model, const DfmParamLayout& layout) {
    Eigen::VectorXd x(layout.size());
    int off = 0;
    for (int i = 0; i < layout.k; ++i)
        for (int j = 0; j < layout.k; ++j) x[off++] = model.dynamics.A_bar(i, j);
    x[off++] = logit(model.dynamics.rho);
    for (int i = 0; i < layout.k; ++i) x[off++] = std::log(model.dynamics.R[i]);
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const DfmBlock& blk = model.blocks[b];
        for (int i = 0; i < blk.n_series(); ++i)
            for (int j = 0; j < layout.k; ++j) x[off++] = blk.aggregation.beta(i, j);
        if (layout.block_kind[b] == AggregationKind::AlmonLag)
            for (int m = 0; m < layout.k; ++m) {
                x[off++] = blk.aggregation.psi(m, 0);
                x[off++] = blk.aggregation.psi(m, 1);
            }
        for (int i = 0; i < blk.n_series(); ++i) x[off++] = std::log(blk.S[i]);
    }
    return x;
}

void unpack_dfm(const Eigen::VectorXd& x, const DfmParamLayout& layout, MfDfmModel& model) {
    int off = 0;
    for (int i = 0; i < layout.k; ++i)
        for (int j = 0; j < layout.k; ++j) model.dynamics.A_bar(i, j) = x[off++];
    model.dynamics.rho = std::min(0.999, std::max(1e-4, logistic(x[off++])));
    for (int i = 0; i < layout.k; ++i) model.dynamics.R[i] = std::exp(x[off++]);
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        DfmBlock& blk = model.blocks[b];
        for (int i = 0; i < blk.n_series(); ++i)
            for (int j = 0; j < layout.k; ++j) blk.aggregation.beta(i, j) = x[off++];
        if (layout.block_kind[b] == AggregationKind::AlmonLag)
            for (int m = 0; m < layout.k; ++m) {
                blk.aggregation.psi(m, 0) = x[off++];
                blk.aggregation.psi(m, 1) = x[off++];
            }
        for (int i = 0; i < blk.n_series(); ++i) blk.S[i] = std::exp(x[off++]);
    }
}

}  // namespace

MfDfmModel fit_dfm(const MixedPanel& panel, int fit_begin, int fit_end,
                   const DfmFitConfig& config) {
    if (config.k < 1) throw std::invalid_argument("fit_dfm: k must be >= 1");
    const MixedPanel fit_panel =
        standardize(panel.slice(fit_begin, fit_end), 0, fit_end - fit_begin);

    MfDfmModel model;
    model.kappa_max = fit_panel.kappa_max().kappa;
    model.fit_begin = fit_begin;
    model.fit_end = fit_end;
    model.normalization = *fit_panel.normalization();
    model.dynamics.k = config.k;
    model.dynamics.A_bar = 0.5 * Eigen::MatrixXd::Identity(config.k, config.k);
    model.dynamics.rho = 0.95;
    model.dynamics.R = Eigen::VectorXd::Constant(config.k, 0.5);

    std::mt19937_64 eng = make_engine(config.seed, 0x0dfaULL);
    std::normal_distribution<double> normal(0.0, 0.2);

    auto make_block = [&](const std::string& name, Frequency kappa, int n) {
        DfmBlock b;
        b.name = name;
        b.kappa = kappa;
        b.S = Eigen::VectorXd::Constant(n, 0.7);
        b.aggregation.beta.resize(n, config.k);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < config.k; ++j) b.aggregation.beta(i, j) = normal(eng);
        // Lagged schemes span exactly one coarse stride (q_l fine lags):
        // a monthly block under a 12-step quarter weights 4 fine lags.
        const int q = static_cast<int>(model.kappa_max / kappa.kappa);
        if (config.scheme == AggregationKind::Stock || q == 1) {
            b.aggregation.kind = AggregationKind::Stock;
            b.aggregation.lag_count = 1;
        } else if (config.scheme == AggregationKind::AlmonLag) {
            b.aggregation.kind = AggregationKind::AlmonLag;
            b.aggregation.lag_count = q;
            b.aggregation.psi = Eigen::MatrixXd::Zero(config.k, 2);
        } else {
            b.aggregation.kind = AggregationKind::Trigonometric;
            b.aggregation.lag_count = q;
            b.aggregation.trig_lambda = Eigen::VectorXd::Constant(2, 0.5);
            b.aggregation.trig_omega = Eigen::VectorXd::LinSpaced(2, 0.1, 0.5);
            b.aggregation.trig_gamma = Eigen::VectorXd::Zero(2);
            b.aggregation.trig_tau = 1.0;
        }
        return b;
    };

    model.blocks.push_back(make_block("target", Frequency{1}, 1));
    for (int l = 0; l < fit_panel.n_groups(); ++l)
        model.blocks.push_back(make_block("group" + std::to_string(l), fit_panel.group(l).kappa,
                                          fit_panel.group(l).n_series()));

    DfmParamLayout layout;
    layout.k = config.k;
    for (const DfmBlock& b : model.blocks) {
        layout.block_n.push_back(b.n_series());
        layout.block_kind.push_back(b.aggregation.kind);
        layout.block_lags.push_back(b.aggregation.lag_count);
    }

    // negative average log-likelihood, guarded against filter failures
    auto objective = [&](const Eigen::VectorXd& x) -> double {
        MfDfmModel candidate = model;
        unpack_dfm(x, layout, candidate);
        try {
            const double ll = marginal_loglik(candidate, fit_panel);
            if (!std::isfinite(ll)) return 1e100;
            return -ll;
        } catch (const std::exception&) {
            return 1e100;
        }
    };

    // central differences, coordinates in parallel
    auto objective_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
        grad.resize(x.size());
        parallel_for(static_cast<std::size_t>(x.size()), config.threads, [&](std::size_t i) {
            Eigen::VectorXd p = x;
            const double h = config.fd_step * std::max(1.0, std::abs(x[i]));
            p[i] = x[i] + h;
            const double fp = objective(p);
            p[i] = x[i] - h;
            const double fm = objective(p);
            grad[i] = (fp - fm) / (2.0 * h);
        });
        return objective(x);
    };

    optim::AdamOptions adam;
    adam.max_iterations = config.max_iterations;
    adam.learning_rate = config.learning_rate;

    const Eigen::VectorXd x0 = pack_dfm(model, layout);

    // manual Adam loop so the accepted-objective trace is recorded
    Eigen::VectorXd x = x0, grad(x0.size());
    Eigen::VectorXd mom = Eigen::VectorXd::Zero(x0.size()), vel = Eigen::VectorXd::Zero(x0.size());
    double f = objective_grad(x, grad);
    Eigen::VectorXd best_x = x;
    double best_f = f;
    model.fit_trace.push_back(-best_f);
    for (int iter = 1; iter <= adam.max_iterations; ++iter) {
        mom = adam.beta1 * mom + (1.0 - adam.beta1) * grad;
        vel = adam.beta2 * vel.array().matrix() + (1.0 - adam.beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(adam.beta1, iter);
        const double bc2 = 1.0 - std::pow(adam.beta2, iter);
        x -= (adam.learning_rate * (mom / bc1).array() / ((vel / bc2).array().sqrt() + adam.epsilon))
                 .matrix();
        f = objective_grad(x, grad);
        if (f < best_f) {
            best_f = f;
            best_x = x;
            model.fit_trace.push_back(-best_f);
        }
    }

    unpack_dfm(best_x, layout, model);
    return model;
}

Eigen::VectorXd forecast_dfm(const MfDfmModel& model, const FilterState& state, int h_fine,
                             int block) {
    if (h_fine < 0) throw std::invalid_argument("forecast_dfm: h_fine must be >= 0");
    const Eigen::MatrixXd A = model.companion_transition();
    Eigen::VectorXd mean = state.mean;
    for (int i = 0; i < h_fine; ++i) mean = A * mean;
    return model.loading(block) * mean;
}

double forecast_dfm_target(const MfDfmModel& model, const MixedPanel& panel, int origin,
                           std::int64_t s, int h) {
    if (h < 1) throw std::invalid_argument("forecast_dfm_target: h must be >= 1");
    if (origin < model.fit_begin) throw std::out_of_range("forecast_dfm_target: origin before fit window");
    const MixedPanel view =
        apply_normalization(panel.slice(model.fit_begin, origin + 1), model.normalization);
    const std::int64_t j = static_cast<std::int64_t>(origin - model.fit_begin) * model.kappa_max + s;
    const FilterState state = filter_panel(model, view, j);
    const int h_fine = static_cast<int>(h * model.kappa_max - s);
    const double pred = forecast_dfm(model, state, h_fine, 0)(0);
    return inverse_standardize_target(view, pred);
}

MixedPanel simulate_dfm(const MfDfmModel& model, int periods, std::uint64_t seed) {
    std::mt19937_64 eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const int k = model.dynamics.k;
    const int P = model.lag_depth();
    const Eigen::MatrixXd A1 = model.dynamics.effective_transition();

    const std::int64_t total = static_cast<std::int64_t>(periods) * model.kappa_max;
    Eigen::MatrixXd factors(k, total + P);  // includes warm lags
    for (int c = 0; c < P; ++c)
        for (int i = 0; i < k; ++i) factors(i, c) = normal(eng);
    for (std::int64_t j = P; j < total + P; ++j) {
        Eigen::VectorXd u(k);
        for (int i = 0; i < k; ++i) u[i] = normal(eng) * model.dynamics.R[i];
        factors.col(j) = A1 * factors.col(j - 1) + u;
    }

    auto window_at = [&](std::int64_t fine) {
        Eigen::MatrixXd w(k, P);
        for (int l = 0; l < P; ++l) w.col(l) = factors.col(fine + P - l);
        return w;
    };

    Eigen::VectorXd target(periods);
    std::vector<SeriesGroup> groups;
    for (std::size_t b = 1; b < model.blocks.size(); ++b) {
        SeriesGroup g;
        g.kappa = model.blocks[b].kappa;
        g.data.resize(static_cast<Eigen::Index>(periods) * g.kappa.kappa,
                      model.blocks[b].n_series());
        groups.push_back(std::move(g));
    }

    for (std::int64_t j = 0; j < total; ++j) {
        const std::int64_t t = j / model.kappa_max;
        const std::int64_t s = j % model.kappa_max;
        for (std::size_t b = 0; b < model.blocks.size(); ++b) {
            const DfmBlock& blk = model.blocks[b];
            const std::int64_t q = model.kappa_max / blk.kappa.kappa;
            if (s % q != 0) continue;
            Eigen::VectorXd value = aggregate(blk.aggregation, window_at(j));
            for (int i = 0; i < blk.n_series(); ++i) value[i] += blk.S[i] * normal(eng);
            if (b == 0)
                target[t] = value[0];
            else
                groups[b - 1].data.row(t * blk.kappa.kappa + s / q) = value.transpose();
        }
    }
    return MixedPanel(std::move(target), std::move(groups));
}

void save_dfm(const MfDfmModel& model, const std::string& path) {
    nlohmann::json doc;
    doc["format"] = "mixfreq-model";
    doc["type"] = "dfm";
    doc["version"] = 1;
    doc["k"] = model.dynamics.k;
    doc["A_bar"] = jsonio::matrix_to_json(model.dynamics.A_bar);
    doc["rho"] = model.dynamics.rho;
    doc["R"] = jsonio::vector_to_json(model.dynamics.R);
    doc["kappa_max"] = model.kappa_max;
    doc["fit_begin"] = model.fit_begin;
    doc["fit_end"] = model.fit_end;
    nlohmann::json blocks = nlohmann::json::array();
    for (const DfmBlock& b : model.blocks) {
        nlohmann::json bj;
        bj["name"] = b.name;
        bj["kappa"] = b.kappa.kappa;
        bj["S"] = jsonio::vector_to_json(b.S);
        bj["kind"] = static_cast<int>(b.aggregation.kind);
        bj["beta"] = jsonio::matrix_to_json(b.aggregation.beta);
        bj["lag_count"] = b.aggregation.lag_count;
        bj["psi"] = jsonio::matrix_to_json(b.aggregation.psi);
        bj["trig_lambda"] = jsonio::vector_to_json(b.aggregation.trig_lambda);
        bj["trig_omega"] = jsonio::vector_to_json(b.aggregation.trig_omega);
        bj["trig_gamma"] = jsonio::vector_to_json(b.aggregation.trig_gamma);
        bj["trig_tau"] = b.aggregation.trig_tau;
        blocks.push_back(std::move(bj));
    }
    doc["blocks"] = blocks;
    nlohmann::json means = nlohmann::json::array(), stds = nlohmann::json::array();
    for (const auto& v : model.normalization.group_mean) means.push_back(jsonio::vector_to_json(v));
    for (const auto& v : model.normalization.group_std) stds.push_back(jsonio::vector_to_json(v));
    doc["normalization"] = {{"target_mean", model.normalization.target_mean},
                            {"target_std", model.normalization.target_std},
                            {"group_mean", means},
                            {"group_std", stds}};
    jsonio::write_json_file(doc, path);
}

MfDfmModel load_dfm(const std::string& path) {
    const nlohmann::json doc = jsonio::read_json_file(path);
    jsonio::expect_format(doc, "dfm", 1);
    MfDfmModel m;
    m.dynamics.k = doc.at("k").get<int>();
    m.dynamics.A_bar = jsonio::matrix_from_json(doc.at("A_bar"));
    m.dynamics.rho = doc.at("rho").get<double>();
    m.dynamics.R = jsonio::vector_from_json(doc.at("R"));
    m.kappa_max = doc.at("kappa_max").get<std::int64_t>();
    m.fit_begin = doc.at("fit_begin").get<int>();
    m.fit_end = doc.at("fit_end").get<int>();
    for (const auto& bj : doc.at("blocks")) {
        DfmBlock b;
        b.name = bj.at("name").get<std::string>();
        b.kappa = Frequency{bj.at("kappa").get<std::int64_t>()};
        b.S = jsonio::vector_from_json(bj.at("S"));
        b.aggregation.kind = static_cast<AggregationKind>(bj.at("kind").get<int>());
        b.aggregation.beta = jsonio::matrix_from_json(bj.at("beta"));
        b.aggregation.lag_count = bj.at("lag_count").get<int>();
        b.aggregation.psi = jsonio::matrix_from_json(bj.at("psi"));
        b.aggregation.trig_lambda = jsonio::vector_from_json(bj.at("trig_lambda"));
        b.aggregation.trig_omega = jsonio::vector_from_json(bj.at("trig_omega"));
        b.aggregation.trig_gamma = jsonio::vector_from_json(bj.at("trig_gamma"));
        b.aggregation.trig_tau = bj.at("trig_tau").get<double>();
        m.blocks.push_back(std::move(b));
    }
    const auto& nj = doc.at("normalization");
    m.normalization.target_mean = nj.at("target_mean").get<double>();
    m.normalization.target_std = nj.at("target_std").get<double>();
    for (const auto& v : nj.at("group_mean"))
        m.normalization.group_mean.push_back(jsonio::vector_from_json(v));
    for (const auto& v : nj.at("group_std"))
        m.normalization.group_std.push_back(jsonio::vector_from_json(v));
    return m;
}

}  // namespace mixfreq
