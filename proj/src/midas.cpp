#include "mixfreq/midas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixfreq/csv.hpp"
#include "mixfreq/json_io.hpp"
#include "mixfreq/parallel.hpp"
#include "mixfreq/sobol.hpp"

namespace mixfreq {

namespace {

bool almon_overflows(const AlmonTheta& theta, int K) {
    return std::abs(theta.theta1) * K + std::abs(theta.theta2) * static_cast<double>(K) * K > 700.0;
}

// Shift-invariant evaluation: subtracting the max exponent leaves the
// normalized weights unchanged and keeps exp() in range.
Eigen::VectorXd almon_unchecked(const AlmonTheta& theta, int K) {
    Eigen::VectorXd e(K + 1);
    for (int k = 0; k <= K; ++k)
        e[k] = theta.theta1 * k + theta.theta2 * static_cast<double>(k) * k;
    const double shift = e.maxCoeff();
    Eigen::VectorXd w = (e.array() - shift).exp();
    return w / w.sum();
}

}  // namespace

Eigen::VectorXd almon_weights(const AlmonTheta& theta, int K) {
    if (K < 0) throw std::invalid_argument("almon_weights: K must be >= 0");
    if (almon_overflows(theta, K))
        throw std::domain_error(
            "almon_weights: |theta1| K + |theta2| K^2 > 700 would overflow; rescale the "
            "starting point (the optimizer domain should shrink with the lag count)");
    return almon_unchecked(theta, K);
}

void almon_weights_grad(const AlmonTheta& theta, int K, Eigen::VectorXd& w, Eigen::VectorXd& dw1,
                        Eigen::VectorXd& dw2) {
    w = almon_weights(theta, K);
    Eigen::VectorXd m1(K + 1), m2(K + 1);
    for (int k = 0; k <= K; ++k) {
        m1[k] = k;
        m2[k] = static_cast<double>(k) * k;
    }
    const double mean1 = w.dot(m1);
    const double mean2 = w.dot(m2);
    dw1 = w.array() * (m1.array() - mean1);
    dw2 = w.array() * (m2.array() - mean2);
}

MidasDesign build_design(const MixedPanel& panel, int p, const std::vector<int>& lags_per_group) {
    if (p < 0) throw std::invalid_argument("build_design: p must be >= 0");
    if (static_cast<int>(lags_per_group.size()) != panel.n_groups())
        throw std::invalid_argument("build_design: one lag count per panel group required");

    const int T = panel.periods();
    const std::int64_t kmax = panel.kappa_max().kappa;

    // Identifiability: T > 1 + p + sum over scalar regressors of ceil(K/kappa).
    std::int64_t lag_term = 0;
    for (int l = 0; l < panel.n_groups(); ++l) {
        const std::int64_t kappa = panel.group(l).kappa.kappa;
        const int K = lags_per_group[l];
        if (K < 0) throw std::invalid_argument("build_design: negative lag count");
        lag_term += panel.group(l).n_series() * ((K + kappa - 1) / kappa);
    }
    if (T <= 1 + p + lag_term)
        throw std::invalid_argument("build_design: identifiability requires T > " +
                                    std::to_string(1 + p + lag_term) + ", panel has T = " +
                                    std::to_string(T));

    MidasDesign design;
    design.p = p;
    design.full_rows = static_cast<std::int64_t>(T) * kmax;
    for (int l = 0; l < panel.n_groups(); ++l)
        for (int j = 0; j < panel.group(l).n_series(); ++j) {
            MidasRegressor reg;
            reg.group = l;
            reg.series = j;
            reg.lags = lags_per_group[l];
            reg.kappa = panel.group(l).kappa.kappa;
            design.regressors.push_back(reg);
        }

    // Keep row (t, s) only when every block has its full lag window: AR needs
    // t >= p, regressor at ratio q needs its release index r = floor(j/q) >= K.
    std::vector<std::pair<int, int>> kept;
    for (int t = 0; t < T; ++t) {
        if (t < p) continue;
        for (std::int64_t s = 0; s < kmax; ++s) {
            const std::int64_t j = static_cast<std::int64_t>(t) * kmax + s;
            bool ok = true;
            for (const MidasRegressor& reg : design.regressors) {
                const std::int64_t q = kmax / reg.kappa;
                if (j / q < reg.lags) {
                    ok = false;
                    break;
                }
            }
            if (ok) kept.emplace_back(t, static_cast<int>(s));
        }
    }
    const int rows = static_cast<int>(kept.size());
    if (rows == 0) throw std::invalid_argument("build_design: no usable rows after lag exclusion");

    design.response.resize(rows);
    design.ar_block.resize(rows, p);
    for (const MidasRegressor& reg : design.regressors)
        design.lag_blocks.emplace_back(rows, reg.lags + 1);

    for (int i = 0; i < rows; ++i) {
        const auto [t, s] = kept[i];
        design.row_period.push_back(t);
        design.row_slot.push_back(s);
        design.response[i] = panel.target()[t];
        for (int a = 0; a < p; ++a) design.ar_block(i, a) = panel.target()[t - 1 - a];
        const std::int64_t j = static_cast<std::int64_t>(t) * kmax + s;
        for (std::size_t rix = 0; rix < design.regressors.size(); ++rix) {
            const MidasRegressor& reg = design.regressors[rix];
            const std::int64_t q = kmax / reg.kappa;
            const std::int64_t r = j / q;  // most recent release index
            for (int k = 0; k <= reg.lags; ++k)
                design.lag_blocks[rix](i, k) = panel.group(reg.group).data(r - k, reg.series);
        }
    }
    return design;
}

Eigen::VectorXd pack_midas_params(const MidasModel& model) {
    Eigen::VectorXd x(1 + model.ar.size() + 3 * static_cast<Eigen::Index>(model.regressors.size()));
    x[0] = model.alpha0;
    x.segment(1, model.ar.size()) = model.ar;
    Eigen::Index off = 1 + model.ar.size();
    for (const MidasRegressor& reg : model.regressors) {
        x[off++] = reg.beta;
        x[off++] = reg.theta.theta1;
        x[off++] = reg.theta.theta2;
    }
    return x;
}

namespace {

struct Unpacked {
    double alpha0;
    Eigen::VectorXd ar;
    std::vector<double> beta;
    std::vector<AlmonTheta> theta;
};

Unpacked unpack(const Eigen::VectorXd& x, const MidasDesign& design) {
    if (x.size() != design.parameter_count())
        throw std::invalid_argument("midas: parameter vector has wrong length");
    Unpacked u;
    u.alpha0 = x[0];
    u.ar = x.segment(1, design.p);
    Eigen::Index off = 1 + design.p;
    for (std::size_t l = 0; l < design.regressors.size(); ++l) {
        u.beta.push_back(x[off++]);
        u.theta.push_back(AlmonTheta{x[off], x[off + 1]});
        off += 2;
    }
    return u;
}

// Indices of the aligned (s = 0) rows used for estimation.
std::vector<int> aligned_rows(const MidasDesign& design) {
    std::vector<int> rows;
    for (int i = 0; i < design.rows(); ++i)
        if (design.row_slot[i] == 0) rows.push_back(i);
    return rows;
}

}  // namespace

double midas_loss_grad(const Eigen::VectorXd& params, const MidasDesign& design,
                       Eigen::VectorXd& grad) {
    const Unpacked u = unpack(params, design);
    grad = Eigen::VectorXd::Zero(params.size());

    const std::size_t L = design.regressors.size();
    std::vector<Eigen::VectorXd> w(L), dw1(L), dw2(L);
    for (std::size_t l = 0; l < L; ++l) {
        if (almon_overflows(u.theta[l], design.regressors[l].lags)) {
            grad.setZero();
            return 1e120;  // reject the point; the line search backs off
        }
        almon_weights_grad(u.theta[l], design.regressors[l].lags, w[l], dw1[l], dw2[l]);
    }

    const std::vector<int> rows = aligned_rows(design);
    double loss = 0.0;
    for (int i : rows) {
        double pred = u.alpha0;
        if (design.p > 0) pred += design.ar_block.row(i).dot(u.ar);
        for (std::size_t l = 0; l < L; ++l)
            pred += u.beta[l] * design.lag_blocks[l].row(i).dot(w[l]);
        const double e = design.response[i] - pred;
        loss += e * e;

        grad[0] += -2.0 * e;
        for (int a = 0; a < design.p; ++a) grad[1 + a] += -2.0 * e * design.ar_block(i, a);
        Eigen::Index off = 1 + design.p;
        for (std::size_t l = 0; l < L; ++l) {
            const double agg = design.lag_blocks[l].row(i).dot(w[l]);
            grad[off] += -2.0 * e * agg;
            grad[off + 1] += -2.0 * e * u.beta[l] * design.lag_blocks[l].row(i).dot(dw1[l]);
            grad[off + 2] += -2.0 * e * u.beta[l] * design.lag_blocks[l].row(i).dot(dw2[l]);
            off += 3;
        }
    }
    return loss;
}

MidasModel fit_midas(const MixedPanel& panel, int fit_begin, int fit_end,
                     const MidasFitConfig& config, MidasFitReport* report) {
    if (config.lags_per_group.empty())
        throw std::invalid_argument("fit_midas: lags_per_group must be provided");

    const MixedPanel fit_panel = standardize(panel.slice(fit_begin, fit_end), 0, fit_end - fit_begin);
    const MidasDesign design = build_design(fit_panel, config.p, config.lags_per_group);
    const int dim = design.parameter_count();

    auto objective = [&design](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        return midas_loss_grad(x, design, g);
    };

    Eigen::MatrixXd starts;
    if (config.multistart) {
        if (config.stratified_fallback || dim > SobolSequence::max_dimension())
            starts = config.hypercube_edge *
                     stratified_uniform_points(dim, config.starts, config.seed);
        else {
            SobolSequence sobol(dim);
            starts = config.hypercube_edge * sobol.points(config.starts);
        }
    } else {
        starts = Eigen::MatrixXd::Zero(1, dim);
    }

    std::vector<MidasStartResult> results(starts.rows());
    parallel_for(static_cast<std::size_t>(starts.rows()), config.threads, [&](std::size_t i) {
        MidasStartResult r;
        r.start = starts.row(static_cast<Eigen::Index>(i)).transpose();
        const optim::OptimResult opt = optim::lbfgs_minimize(objective, r.start, config.optimizer);
        r.minimizer = opt.x;
        r.loss = opt.value;
        r.grad_norm = opt.grad_norm;
        r.iterations = opt.iterations;
        r.converged = opt.converged();
        results[i] = std::move(r);
    });

    int best = -1;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!std::isfinite(results[i].loss) || results[i].loss >= 1e120) continue;
        if (best < 0 || results[i].loss < results[best].loss) best = static_cast<int>(i);
    }
    if (best < 0)
        throw std::runtime_error("fit_midas: every start diverged or overflowed; "
                                 "inspect the per-start report");

    if (report) {
        report->starts = results;
        report->best_index = best;
    }

    MidasModel model;
    model.fit_begin = fit_begin;
    model.fit_end = fit_end;
    model.normalization = *fit_panel.normalization();
    model.loss = results[best].loss;
    model.grad_norm = results[best].grad_norm;
    const Unpacked u = unpack(results[best].minimizer, design);
    model.alpha0 = u.alpha0;
    model.ar = u.ar;
    model.regressors = design.regressors;
    for (std::size_t l = 0; l < model.regressors.size(); ++l) {
        model.regressors[l].beta = u.beta[l];
        model.regressors[l].theta = u.theta[l];
    }
    return model;
}

namespace {

// Weighted regressor sum with the lag window ending at release index r of
// each regressor (standardized panel units).
double regressor_terms(const MidasModel& model, const MixedPanel& panel,
                       const std::vector<std::int64_t>& release_index) {
    double sum = 0.0;
    for (std::size_t l = 0; l < model.regressors.size(); ++l) {
        const MidasRegressor& reg = model.regressors[l];
        const Eigen::VectorXd w = almon_weights(reg.theta, reg.lags);
        const std::int64_t r = release_index[l];
        if (r < reg.lags)
            throw std::out_of_range("midas forecast: insufficient lag history at the origin");
        double agg = 0.0;
        for (int k = 0; k <= reg.lags; ++k)
            agg += w[k] * panel.group(reg.group).data(r - k, reg.series);
        sum += reg.beta * agg;
    }
    return sum;
}

double midas_predict(const MidasModel& model, const MixedPanel& std_panel, std::int64_t t,
                     std::int64_t s, int h) {
    const std::int64_t kmax = std_panel.kappa_max().kappa;
    const std::int64_t j = t * kmax + s;

    std::vector<std::int64_t> release(model.regressors.size());
    for (std::size_t l = 0; l < model.regressors.size(); ++l)
        release[l] = j / (kmax / model.regressors[l].kappa);
    const double direct = regressor_terms(model, std_panel, release);

    // AR recursion: actual standardized targets through y[t], forecasts after.
    const int p = static_cast<int>(model.ar.size());
    std::vector<double> path;  // predictions for t+1 .. t+h
    for (int step = 1; step <= h; ++step) {
        double pred = model.alpha0 + direct;
        for (int a = 0; a < p; ++a) {
            const std::int64_t lag_t = t + step - 1 - a;
            double value;
            if (lag_t <= t) {
                if (lag_t < 0)
                    throw std::out_of_range("midas forecast: AR lag before the sample start");
                value = std_panel.target()[lag_t];
            } else {
                value = path[static_cast<std::size_t>(lag_t - t - 1)];
            }
            pred += model.ar[a] * value;
        }
        path.push_back(pred);
    }
    return path.back();
}

}  // namespace

double forecast_midas(const MidasModel& model, const MixedPanel& panel, int origin, int h) {
    if (h < 1) throw std::invalid_argument("forecast_midas: h must be >= 1");
    return hf_forecast_midas(model, panel, origin, 0, h);
}

double hf_forecast_midas(const MidasModel& model, const MixedPanel& panel, std::int64_t t,
                         std::int64_t s, int h) {
    if (h < 1) throw std::invalid_argument("hf_forecast_midas: h must be >= 1");
    if (t < 0 || t >= panel.periods()) throw std::out_of_range("hf_forecast_midas: origin outside panel");
    if (s < 0 || s >= panel.kappa_max().kappa)
        throw std::out_of_range("hf_forecast_midas: sub-period outside [0, kappa_max)");
    const MixedPanel std_panel = apply_normalization(panel, model.normalization);
    const double pred = midas_predict(model, std_panel, t, s, h);
    return inverse_standardize_target(std_panel, pred);
}

void write_midas_report(const MidasFitReport& report, const std::string& path) {
    std::vector<std::string> header = {"start", "best", "converged", "iterations", "loss",
                                       "grad_norm"};
    const int dim = report.starts.empty() ? 0 : static_cast<int>(report.starts[0].minimizer.size());
    for (int d = 0; d < dim; ++d) header.push_back("param_" + std::to_string(d));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < report.starts.size(); ++i) {
        const MidasStartResult& r = report.starts[i];
        std::vector<std::string> row = {std::to_string(i),
                                        static_cast<int>(i) == report.best_index ? "1" : "0",
                                        r.converged ? "1" : "0",
                                        std::to_string(r.iterations),
                                        format_double(r.loss),
                                        format_double(r.grad_norm)};
        for (int d = 0; d < dim; ++d) row.push_back(format_double(r.minimizer[d]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void save_midas(const MidasModel& model, const std::string& path) {
    nlohmann::json doc;
    doc["format"] = "mixfreq-model";
    doc["type"] = "midas";
    doc["version"] = 1;
    doc["alpha0"] = model.alpha0;
    doc["ar"] = jsonio::vector_to_json(model.ar);
    nlohmann::json regs = nlohmann::json::array();
    for (const MidasRegressor& r : model.regressors)
        regs.push_back({{"group", r.group},
                        {"series", r.series},
                        {"lags", r.lags},
                        {"kappa", r.kappa},
                        {"beta", r.beta},
                        {"theta1", r.theta.theta1},
                        {"theta2", r.theta.theta2}});
    doc["regressors"] = regs;
    doc["fit_begin"] = model.fit_begin;
    doc["fit_end"] = model.fit_end;
    doc["loss"] = model.loss;
    doc["grad_norm"] = model.grad_norm;
    nlohmann::json means = nlohmann::json::array(), stds = nlohmann::json::array();
    for (const auto& v : model.normalization.group_mean) means.push_back(jsonio::vector_to_json(v));
    for (const auto& v : model.normalization.group_std) stds.push_back(jsonio::vector_to_json(v));
    doc["normalization"] = {{"target_mean", model.normalization.target_mean},
                            {"target_std", model.normalization.target_std},
                            {"group_mean", means},
                            {"group_std", stds}};
    jsonio::write_json_file(doc, path);
}

MidasModel load_midas(const std::string& path) {
    const nlohmann::json doc = jsonio::read_json_file(path);
    jsonio::expect_format(doc, "midas", 1);
    MidasModel m;
    m.alpha0 = doc.at("alpha0").get<double>();
    m.ar = jsonio::vector_from_json(doc.at("ar"));
    for (const auto& rj : doc.at("regressors")) {
        MidasRegressor r;
        r.group = rj.at("group").get<int>();
        r.series = rj.at("series").get<int>();
        r.lags = rj.at("lags").get<int>();
        r.kappa = rj.at("kappa").get<std::int64_t>();
        r.beta = rj.at("beta").get<double>();
        r.theta = AlmonTheta{rj.at("theta1").get<double>(), rj.at("theta2").get<double>()};
        m.regressors.push_back(r);
    }
    m.fit_begin = doc.at("fit_begin").get<int>();
    m.fit_end = doc.at("fit_end").get<int>();
    m.loss = doc.at("loss").get<double>();
    m.grad_norm = doc.at("grad_norm").get<double>();
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
