#include "mixfreq/mfesn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixfreq/json_io.hpp"
#include "mixfreq/optim.hpp"
#include "mixfreq/parallel.hpp"
#include "mixfreq/rng.hpp"

namespace mixfreq {

namespace {

ModelPreset make_single(const std::string& name, int dim, double sparsity, double rho,
                        double gamma, double alpha) {
    ModelPreset p;
    p.name = name;
    p.multi = false;
    p.reservoirs.push_back({dim, sparsity, Hyperparams{alpha, rho, gamma, 0.0}});
    return p;
}

// Specs ordered to match panel group order (descending kappa): daily first.
ModelPreset make_multi(const std::string& name, ReservoirSpec daily, ReservoirSpec monthly) {
    ModelPreset p;
    p.name = name;
    p.multi = true;
    p.reservoirs = {daily, monthly};
    return p;
}

const std::vector<ModelPreset>& preset_registry() {
    static const std::vector<ModelPreset> presets = {
        make_single("singleESN [A]", 30, 1.0 / 3.0, 0.5, 1.0, 0.1),
        make_single("singleESN [B]", 120, 1.0 / 12.0, 0.5, 1.0, 0.1),
        make_multi("multiESN [A]",
                   ReservoirSpec{20, 0.5, Hyperparams{0.1, 0.5, 0.5, 0.0}},
                   ReservoirSpec{100, 0.1, Hyperparams{0.0, 0.5, 1.5, 0.0}}),
        make_multi("multiESN [B]",
                   ReservoirSpec{20, 0.5, Hyperparams{0.99, 0.01, 0.01, 0.0}},
                   ReservoirSpec{100, 0.1, Hyperparams{0.3, 0.08, 0.25, 0.0}}),
    };
    return presets;
}

}  // namespace

const ModelPreset& preset(const std::string& name) {
    for (const ModelPreset& p : preset_registry())
        if (p.name == name) return p;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const ModelPreset& p : preset_registry()) names.push_back(p.name);
    return names;
}

Eigen::VectorXd stack_inputs(const MixedPanel& panel, std::int64_t t, std::int64_t s) {
    const std::int64_t kmax = panel.kappa_max().kappa;
    if (t < 0 || t >= panel.periods() || s < 0 || s >= kmax)
        throw std::out_of_range("stack_inputs: index outside the panel span");
    Eigen::VectorXd z(panel.total_series());
    if (t == 0 && s == 0) return z.setZero();
    Eigen::Index offset = 0;
    for (int l = 0; l < panel.n_groups(); ++l) {
        const SeriesGroup& g = panel.group(l);
        const std::int64_t q = panel.ratio(l);
        const std::int64_t row = t * g.kappa.kappa + s / q;
        z.segment(offset, g.n_series()) = g.data.row(row).transpose();
        offset += g.n_series();
    }
    return z;
}

Eigen::MatrixXd stacked_input_matrix(const MixedPanel& panel) {
    const std::int64_t kmax = panel.kappa_max().kappa;
    const std::int64_t rows = static_cast<std::int64_t>(panel.periods()) * kmax;
    Eigen::MatrixXd Z(rows, panel.total_series());
    for (std::int64_t j = 0; j < rows; ++j)
        Z.row(j) = stack_inputs(panel, j / kmax, j % kmax).transpose();
    return Z;
}

namespace {

// State path over all fine slots of the panel: row j holds x_{t,<s>} with
// j = t*kappa + s. Row 0 is the zero initial state x_{0,<0>}; the input at
// slot 0 is never consumed.
Eigen::MatrixXd state_path(const StateParams& params, const Hyperparams& hyper,
                           const Eigen::MatrixXd& Z) {
    const Eigen::Index rows = Z.rows();
    Eigen::MatrixXd X(rows, params.state_dim());
    X.row(0).setZero();
    if (rows > 1)
        X.bottomRows(rows - 1) = run_states(params, hyper, Eigen::VectorXd::Zero(params.state_dim()),
                                            Z.bottomRows(rows - 1));
    return X;
}

// Group input matrix on its own kappa_l grid with the first slot zeroed.
Eigen::MatrixXd group_input_matrix(const MixedPanel& panel, int l) {
    Eigen::MatrixXd Z = panel.group(l).data;
    Z.row(0).setZero();
    return Z;
}

// Design for the input readout: states at fine slots [kappa, rows - 1)
// against the next slot's inputs; (T - 1) * kappa - 1 rows.
void input_readout_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z, std::int64_t kappa,
                          Eigen::MatrixXd& Xd, Eigen::MatrixXd& Yd) {
    const Eigen::Index rows = Z.rows();
    const Eigen::Index n = rows - 1 - kappa;
    if (n < 1)
        throw std::invalid_argument("mfesn: sample too short for the input readout (need T >= 3)");
    Xd = X.middleRows(kappa, n);
    Yd = Z.middleRows(kappa + 1, n);
}

// Aligned design for the target readout: x_{t,<0>} against y[t + 1],
// t = 0..T-2.
void target_readout_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::int64_t kappa,
                           Eigen::MatrixXd& Xd, Eigen::MatrixXd& Yd) {
    const int T = static_cast<int>(y.size());
    Xd.resize(T - 1, X.cols());
    Yd.resize(T - 1, 1);
    for (int t = 0; t + 1 < T; ++t) {
        Xd.row(t) = X.row(static_cast<Eigen::Index>(t) * kappa);
        Yd(t, 0) = y[t + 1];
    }
}

Eigen::VectorXd aligned_autonomous(const StateParams& params, const Hyperparams& hyper,
                                   const Readout& input_readout, Eigen::VectorXd x,
                                   std::int64_t kappa, int compositions) {
    for (int c = 0; c < compositions; ++c)
        for (std::int64_t k = 0; k < kappa; ++k) x = autonomous_step(params, hyper, input_readout, x);
    return x;
}

StateParams build_reservoir(const ReservoirSpec& spec, int input_dim, std::uint64_t seed) {
    spec.hyper.validate();
    return normalize_params(sample_params(spec.state_dim, input_dim, spec.sparsity, seed));
}

double mean_or_throw(const std::vector<double>& v) {
    if (v.empty()) throw std::runtime_error("cv_ridge: no validation errors collected");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<CvFold> cv_fold_layout(int periods, int folds, int fold_size) {
    const int reserve = folds * fold_size;
    if (periods <= reserve + 2)
        throw std::invalid_argument("cv_fold_layout: sample too short to reserve " +
                                    std::to_string(reserve) + " validation targets");
    std::vector<CvFold> layout(folds);
    for (int f = 0; f < folds; ++f) {
        layout[f].train_end = periods - reserve + f * fold_size;
        layout[f].val_begin = layout[f].train_end;
        layout[f].val_end = layout[f].val_begin + fold_size;
    }
    return layout;
}

namespace {

// Shared CV engine. For every fold: re-standardize on the training window,
// run states once, then score every grid value. kind selects the loss:
// target readout one-step MSE or input readout one-step (high-frequency) MSE.
enum class CvKind { Target, Input };

// For multi presets, `which_group` selects the reservoir under validation
// when kind == Input; ignored for the target loss (which always uses the
// full model structure of the preset).
double cv_ridge_impl(const MixedPanel& panel, const ModelPreset& preset,
                     const std::vector<double>& grid, int folds, int fold_size,
                     std::uint64_t seed, int threads, CvKind kind, int which_group) {
    if (grid.empty()) throw std::invalid_argument("cv_ridge: empty lambda grid");
    const std::vector<CvFold> layout = cv_fold_layout(panel.periods(), folds, fold_size);

    // One reservoir draw shared by every fold and grid point.
    std::vector<StateParams> reservoirs;
    std::vector<Hyperparams> hypers;
    if (preset.multi) {
        if (static_cast<int>(preset.reservoirs.size()) != panel.n_groups())
            throw std::invalid_argument("cv_ridge: preset has " +
                                        std::to_string(preset.reservoirs.size()) +
                                        " reservoirs for " + std::to_string(panel.n_groups()) +
                                        " panel groups");
        for (int l = 0; l < panel.n_groups(); ++l) {
            reservoirs.push_back(build_reservoir(preset.reservoirs[l], panel.group(l).n_series(),
                                                 derive_seed(seed, l)));
            hypers.push_back(preset.reservoirs[l].hyper);
        }
    } else {
        reservoirs.push_back(build_reservoir(preset.reservoirs.at(0), panel.total_series(), seed));
        hypers.push_back(preset.reservoirs.at(0).hyper);
    }

    // fold-major accumulation: errors[g] collects squared errors per grid value
    std::vector<std::vector<std::vector<double>>> fold_errors(layout.size());

    parallel_for(layout.size(), threads, [&](std::size_t f) {
        const CvFold& fold = layout[f];
        const MixedPanel std_panel = standardize(panel, 0, fold.train_end);
        std::vector<std::vector<double>> errors(grid.size());

        if (!preset.multi || kind == CvKind::Target) {
            // Single state path at kappa_max (single preset), or the stacked
            // multi-reservoir aligned states (multi preset, target loss).
            if (!preset.multi) {
                const Eigen::MatrixXd Z = stacked_input_matrix(std_panel);
                const Eigen::MatrixXd X = state_path(reservoirs[0], hypers[0], Z);
                const std::int64_t kappa = std_panel.kappa_max().kappa;
                if (kind == CvKind::Target) {
                    Eigen::MatrixXd Xd, Yd;
                    target_readout_design(X, std_panel.target(), kappa, Xd, Yd);
                    for (std::size_t g = 0; g < grid.size(); ++g) {
                        const Readout w =
                            ridge_fit(Xd.topRows(fold.train_end - 1), Yd.topRows(fold.train_end - 1),
                                      grid[g], true);
                        for (int v = fold.val_begin; v < fold.val_end; ++v) {
                            const double pred = w.apply(
                                X.row(static_cast<Eigen::Index>(v - 1) * kappa).transpose())(0);
                            const double err = inverse_standardize_target(std_panel, pred) -
                                               panel.target()[v];
                            errors[g].push_back(err * err);
                        }
                    }
                } else {
                    Eigen::MatrixXd Xd, Yd;
                    input_readout_design(X, Z, kappa, Xd, Yd);
                    const Eigen::Index train_rows =
                        static_cast<Eigen::Index>(fold.train_end - 1) * kappa - 1;
                    for (std::size_t g = 0; g < grid.size(); ++g) {
                        const Readout w = ridge_fit(Xd.topRows(train_rows), Yd.topRows(train_rows),
                                                    grid[g], false);
                        for (std::int64_t j = static_cast<std::int64_t>(fold.val_begin) * kappa;
                             j < static_cast<std::int64_t>(fold.val_end) * kappa; ++j) {
                            const Eigen::RowVectorXd pred = w.apply(X.row(j - 1).transpose());
                            errors[g].push_back((pred - Z.row(j)).squaredNorm() / Z.cols());
                        }
                    }
                }
            } else {
                // multi preset, target loss: aligned stacked states
                std::vector<Eigen::MatrixXd> paths;
                for (int l = 0; l < std_panel.n_groups(); ++l)
                    paths.push_back(state_path(reservoirs[l], hypers[l],
                                               group_input_matrix(std_panel, l)));
                const int T = std_panel.periods();
                int total_dim = 0;
                for (const auto& r : reservoirs) total_dim += r.state_dim();
                Eigen::MatrixXd Xd(T - 1, total_dim);
                Eigen::MatrixXd Yd(T - 1, 1);
                for (int t = 0; t + 1 < T; ++t) {
                    Eigen::Index off = 0;
                    for (int l = 0; l < std_panel.n_groups(); ++l) {
                        const std::int64_t kl = std_panel.group(l).kappa.kappa;
                        Xd.block(t, off, 1, reservoirs[l].state_dim()) =
                            paths[l].row(static_cast<Eigen::Index>(t) * kl);
                        off += reservoirs[l].state_dim();
                    }
                    Yd(t, 0) = std_panel.target()[t + 1];
                }
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    const Readout w = ridge_fit(Xd.topRows(fold.train_end - 1),
                                                Yd.topRows(fold.train_end - 1), grid[g], true);
                    for (int v = fold.val_begin; v < fold.val_end; ++v) {
                        const double pred = w.apply(Xd.row(v - 1).transpose())(0);
                        const double err =
                            inverse_standardize_target(std_panel, pred) - panel.target()[v];
                        errors[g].push_back(err * err);
                    }
                }
            }
        } else {
            // multi preset, input loss for one group
            const int l = which_group;
            const std::int64_t kl = std_panel.group(l).kappa.kappa;
            const Eigen::MatrixXd Z = group_input_matrix(std_panel, l);
            const Eigen::MatrixXd X = state_path(reservoirs[l], hypers[l], Z);
            Eigen::MatrixXd Xd, Yd;
            input_readout_design(X, Z, kl, Xd, Yd);
            const Eigen::Index train_rows = static_cast<Eigen::Index>(fold.train_end - 1) * kl - 1;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const Readout w =
                    ridge_fit(Xd.topRows(train_rows), Yd.topRows(train_rows), grid[g], false);
                for (std::int64_t j = static_cast<std::int64_t>(fold.val_begin) * kl;
                     j < static_cast<std::int64_t>(fold.val_end) * kl; ++j) {
                    const Eigen::RowVectorXd pred = w.apply(X.row(j - 1).transpose());
                    errors[g].push_back((pred - Z.row(j)).squaredNorm() / Z.cols());
                }
            }
        }
        fold_errors[f] = std::move(errors);
    });

    // average of fold MSEs per grid value; argmin, ties to the first entry
    double best_lambda = grid[0];
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double loss = 0.0;
        for (std::size_t f = 0; f < layout.size(); ++f) loss += mean_or_throw(fold_errors[f][g]);
        loss /= static_cast<double>(layout.size());
        if (loss < best_loss) {
            best_loss = loss;
            best_lambda = grid[g];
        }
    }
    if (!std::isfinite(best_loss))
        throw std::runtime_error("cv_ridge: every grid value produced a non-finite loss");
    return best_lambda;
}

}  // namespace

double cv_ridge(const MixedPanel& panel, const ModelPreset& preset,
                const std::vector<double>& lambda_grid, int folds, int fold_size,
                std::uint64_t seed, int threads) {
    return cv_ridge_impl(panel, preset, lambda_grid, folds, fold_size, seed, threads,
                         CvKind::Target, 0);
}

double cv_ridge_input(const MixedPanel& panel, const ModelPreset& preset,
                      const std::vector<double>& lambda_grid, int folds, int fold_size,
                      std::uint64_t seed, int threads, int group) {
    return cv_ridge_impl(panel, preset, lambda_grid, folds, fold_size, seed, threads, CvKind::Input,
                         group);
}

SMfesnModel fit_smfesn(const MixedPanel& panel, int fit_begin, int fit_end,
                       const ModelPreset& preset, const MfesnFitConfig& config) {
    if (preset.multi) throw std::invalid_argument("fit_smfesn: preset is multi-reservoir");
    if (fit_end - fit_begin < 3) throw std::invalid_argument("fit_smfesn: need T >= 3");

    const MixedPanel fit_raw = panel.slice(fit_begin, fit_end);

    SMfesnModel model;
    model.seed = config.seed;
    model.fit_begin = fit_begin;
    model.fit_end = fit_end;
    model.kappa_max = panel.kappa_max().kappa;
    for (int l = 0; l < panel.n_groups(); ++l) {
        model.group_kappas.push_back(panel.group(l).kappa.kappa);
        model.group_sizes.push_back(panel.group(l).n_series());
    }
    model.hyper = preset.reservoirs.at(0).hyper;
    model.params = build_reservoir(preset.reservoirs.at(0), panel.total_series(), config.seed);

    model.lambda_input = config.lambda_input
                             ? *config.lambda_input
                             : cv_ridge_impl(fit_raw, preset, config.lambda_grid, config.cv_folds,
                                             config.cv_fold_size, config.seed, config.threads,
                                             CvKind::Input, 0);
    model.lambda_target = config.lambda_target
                              ? *config.lambda_target
                              : cv_ridge_impl(fit_raw, preset, config.lambda_grid, config.cv_folds,
                                              config.cv_fold_size, config.seed, config.threads,
                                              CvKind::Target, 0);

    const MixedPanel fit_panel = standardize(fit_raw, 0, fit_raw.periods());
    model.normalization = *fit_panel.normalization();

    const Eigen::MatrixXd Z = stacked_input_matrix(fit_panel);
    const Eigen::MatrixXd X = state_path(model.params, model.hyper, Z);

    Eigen::MatrixXd Xw, Yw;
    input_readout_design(X, Z, model.kappa_max, Xw, Yw);
    model.input_readout = ridge_fit(Xw, Yw, model.lambda_input, false);

    Eigen::MatrixXd Xt, Yt;
    target_readout_design(X, fit_panel.target(), model.kappa_max, Xt, Yt);
    model.target_readout = ridge_fit(Xt, Yt, model.lambda_target, true);
    return model;
}

MMfesnModel fit_mmfesn(const MixedPanel& panel, int fit_begin, int fit_end,
                       const ModelPreset& preset, const MfesnFitConfig& config) {
    if (!preset.multi) throw std::invalid_argument("fit_mmfesn: preset is single-reservoir");
    if (static_cast<int>(preset.reservoirs.size()) != panel.n_groups())
        throw std::invalid_argument("fit_mmfesn: preset reservoir count does not match panel groups");
    if (fit_end - fit_begin < 3) throw std::invalid_argument("fit_mmfesn: need T >= 3");

    const MixedPanel fit_raw = panel.slice(fit_begin, fit_end);

    MMfesnModel model;
    model.seed = config.seed;
    model.fit_begin = fit_begin;
    model.fit_end = fit_end;

    for (int l = 0; l < panel.n_groups(); ++l) {
        MMfesnModel::GroupReservoir g;
        g.kappa = panel.group(l).kappa.kappa;
        g.hyper = preset.reservoirs[l].hyper;
        g.params = build_reservoir(preset.reservoirs[l], panel.group(l).n_series(),
                                   derive_seed(config.seed, l));
        g.lambda_input = config.lambda_input
                             ? *config.lambda_input
                             : cv_ridge_impl(fit_raw, preset, config.lambda_grid, config.cv_folds,
                                             config.cv_fold_size, config.seed, config.threads,
                                             CvKind::Input, l);
        model.groups.push_back(std::move(g));
    }
    model.lambda_target = config.lambda_target
                              ? *config.lambda_target
                              : cv_ridge_impl(fit_raw, preset, config.lambda_grid, config.cv_folds,
                                              config.cv_fold_size, config.seed, config.threads,
                                              CvKind::Target, 0);

    const MixedPanel fit_panel = standardize(fit_raw, 0, fit_raw.periods());
    model.normalization = *fit_panel.normalization();

    const int T = fit_panel.periods();
    int total_dim = 0;
    std::vector<Eigen::MatrixXd> paths;
    for (int l = 0; l < fit_panel.n_groups(); ++l) {
        MMfesnModel::GroupReservoir& g = model.groups[l];
        const Eigen::MatrixXd Z = group_input_matrix(fit_panel, l);
        const Eigen::MatrixXd X = state_path(g.params, g.hyper, Z);
        Eigen::MatrixXd Xw, Yw;
        input_readout_design(X, Z, g.kappa, Xw, Yw);
        g.input_readout = ridge_fit(Xw, Yw, g.lambda_input, false);
        total_dim += g.params.state_dim();
        paths.push_back(X);
    }

    Eigen::MatrixXd Xt(T - 1, total_dim);
    Eigen::MatrixXd Yt(T - 1, 1);
    for (int t = 0; t + 1 < T; ++t) {
        Eigen::Index off = 0;
        for (int l = 0; l < fit_panel.n_groups(); ++l) {
            Xt.block(t, off, 1, model.groups[l].params.state_dim()) =
                paths[l].row(static_cast<Eigen::Index>(t) * model.groups[l].kappa);
            off += model.groups[l].params.state_dim();
        }
        Yt(t, 0) = fit_panel.target()[t + 1];
    }
    model.target_readout = ridge_fit(Xt, Yt, model.lambda_target, true);
    return model;
}

MfesnModel fit_mfesn(const MixedPanel& panel, int fit_begin, int fit_end,
                     const ModelPreset& preset, const MfesnFitConfig& config) {
    if (preset.multi) return fit_mmfesn(panel, fit_begin, fit_end, preset, config);
    return fit_smfesn(panel, fit_begin, fit_end, preset, config);
}

namespace {

// Panel restricted to [fit_begin, origin] and normalized with the model's
// fit-window statistics: the state recursion always starts at the window
// start from the zero state.
template <typename Model>
MixedPanel forecast_view(const Model& model, const MixedPanel& panel, int origin) {
    if (origin < model.fit_begin || origin >= panel.periods())
        throw std::out_of_range("mfesn forecast: origin outside the panel");
    if (origin - model.fit_begin + 1 < 1) throw std::out_of_range("mfesn forecast: empty view");
    return apply_normalization(panel.slice(model.fit_begin, origin + 1), model.normalization);
}

double smfesn_readout(const SMfesnModel& model, const MixedPanel& view, Eigen::VectorXd state,
                      int h) {
    state = aligned_autonomous(model.params, model.hyper, model.input_readout, std::move(state),
                               model.kappa_max, h - 1);
    return inverse_standardize_target(view, model.target_readout.apply(state)(0));
}

double mmfesn_readout(const MMfesnModel& model, const MixedPanel& view,
                      std::vector<Eigen::VectorXd> states, int h) {
    int total = 0;
    for (const auto& g : model.groups) total += g.params.state_dim();
    Eigen::VectorXd stacked(total);
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < model.groups.size(); ++l) {
        const auto& g = model.groups[l];
        stacked.segment(off, g.params.state_dim()) = aligned_autonomous(
            g.params, g.hyper, g.input_readout, std::move(states[l]), g.kappa, h - 1);
        off += g.params.state_dim();
    }
    return inverse_standardize_target(view, model.target_readout.apply(stacked)(0));
}

}  // namespace

double forecast_smfesn(const SMfesnModel& model, const MixedPanel& panel, int origin, int h) {
    if (h < 1) throw std::invalid_argument("forecast_smfesn: h must be >= 1");
    const MixedPanel view = forecast_view(model, panel, origin);
    const Eigen::MatrixXd Z = stacked_input_matrix(view);
    const Eigen::MatrixXd X = state_path(model.params, model.hyper, Z);
    const Eigen::Index aligned = static_cast<Eigen::Index>(view.periods() - 1) * model.kappa_max;
    return smfesn_readout(model, view, X.row(aligned).transpose(), h);
}

double forecast_mmfesn(const MMfesnModel& model, const MixedPanel& panel, int origin, int h) {
    if (h < 1) throw std::invalid_argument("forecast_mmfesn: h must be >= 1");
    const MixedPanel view = forecast_view(model, panel, origin);
    std::vector<Eigen::VectorXd> states;
    for (std::size_t l = 0; l < model.groups.size(); ++l) {
        const auto& g = model.groups[l];
        const Eigen::MatrixXd Z = group_input_matrix(view, static_cast<int>(l));
        const Eigen::MatrixXd X = state_path(g.params, g.hyper, Z);
        states.push_back(X.row(static_cast<Eigen::Index>(view.periods() - 1) * g.kappa).transpose());
    }
    return mmfesn_readout(model, view, std::move(states), h);
}

double forecast_mfesn(const MfesnModel& model, const MixedPanel& panel, int origin, int h) {
    if (std::holds_alternative<SMfesnModel>(model))
        return forecast_smfesn(std::get<SMfesnModel>(model), panel, origin, h);
    return forecast_mmfesn(std::get<MMfesnModel>(model), panel, origin, h);
}

double hf_forecast(const MfesnModel& model, const MixedPanel& panel, std::int64_t t,
                   std::int64_t s, int h) {
    if (h < 1) throw std::invalid_argument("hf_forecast: h must be >= 1");
    if (s < 0 || s >= panel.kappa_max().kappa)
        throw std::out_of_range("hf_forecast: sub-period outside [0, kappa_max)");

    if (std::holds_alternative<SMfesnModel>(model)) {
        const SMfesnModel& m = std::get<SMfesnModel>(model);
        const MixedPanel view = forecast_view(m, panel, static_cast<int>(t));
        const Eigen::MatrixXd Z = stacked_input_matrix(view);
        const Eigen::MatrixXd X = state_path(m.params, m.hyper, Z);
        const Eigen::Index row =
            static_cast<Eigen::Index>(view.periods() - 1) * m.kappa_max + s;
        return smfesn_readout(m, view, X.row(row).transpose(), h);
    }

    const MMfesnModel& m = std::get<MMfesnModel>(model);
    const MixedPanel view = forecast_view(m, panel, static_cast<int>(t));
    const std::int64_t kmax = view.kappa_max().kappa;
    std::vector<Eigen::VectorXd> states;
    for (std::size_t l = 0; l < m.groups.size(); ++l) {
        const auto& g = m.groups[l];
        const Eigen::MatrixXd Z = group_input_matrix(view, static_cast<int>(l));
        const Eigen::MatrixXd X = state_path(g.params, g.hyper, Z);
        // most recent state of this group at fine slot (t, <s>)
        const std::int64_t q = kmax / g.kappa;
        const Eigen::Index row =
            static_cast<Eigen::Index>(view.periods() - 1) * g.kappa + s / q;
        states.push_back(X.row(row).transpose());
    }
    return mmfesn_readout(m, view, std::move(states), h);
}

TuneResult tune_hyperparams(const MixedPanel& panel, const ModelPreset& preset,
                            const TuneConfig& config) {
    if (preset.multi)
        throw std::invalid_argument("tune_hyperparams: tuning is defined per reservoir; "
                                    "pass a single-reservoir preset");
    const int T = panel.periods();
    const int T0 = config.min_fit_periods > 0 ? config.min_fit_periods : (3 * T) / 4;
    if (T0 < 2 || T0 >= T - 1)
        throw std::invalid_argument("tune_hyperparams: need 2 <= T0 < T - 1");

    const MixedPanel std_panel = standardize(panel, 0, T);
    const StateParams raw =
        sample_params(preset.reservoirs.at(0).state_dim, std_panel.total_series(),
                      preset.reservoirs.at(0).sparsity, config.seed);
    const StateParams params = normalize_params(raw);
    const Eigen::MatrixXd Z = stacked_input_matrix(std_panel);
    const std::int64_t kappa = std_panel.kappa_max().kappa;

    auto loss_at = [&](const Hyperparams& hyper) -> double {
        const Eigen::MatrixXd X = state_path(params, hyper, Z);
        Eigen::MatrixXd Xd, Yd;
        target_readout_design(X, std_panel.target(), kappa, Xd, Yd);
        double loss = 0.0;
        if (config.expanding_refit) {
            for (int t = T0; t <= T - 2; ++t) {
                const Readout w = ridge_fit(Xd.topRows(t), Yd.topRows(t), config.lambda, true);
                const double e = w.apply(Xd.row(t).transpose())(0) - Yd(t, 0);
                loss += e * e;
            }
        } else {
            const Readout w = ridge_fit(Xd.topRows(T0 - 1), Yd.topRows(T0 - 1), config.lambda, true);
            for (int t = T0; t <= T - 2; ++t) {
                const double e = w.apply(Xd.row(t).transpose())(0) - Yd(t, 0);
                loss += e * e;
            }
        }
        return loss;
    };

    TuneResult result;
    result.hyper = config.init;
    result.initial_loss = loss_at(config.init);
    result.loss = result.initial_loss;
    if (config.max_iterations == 0) return result;

    optim::PatternSearchOptions opts;
    opts.max_iterations = config.max_iterations;

    if (config.psi_reparam) {
        // (alpha, psi) with x_t = alpha x + (1-alpha) tanh(psi A x + C z):
        // realized as rho = psi, gamma = 1, omega = 0.
        Eigen::VectorXd x0(2), lo(2), hi(2);
        const double psi0 = config.init.gamma > 0 ? config.init.rho / config.init.gamma
                                                  : config.init.rho;
        x0 << config.init.alpha, std::min(psi0, config.rho_max);
        lo << 0.0, 0.0;
        hi << 1.0 - 1e-6, config.rho_max;
        auto f = [&](const Eigen::VectorXd& x) {
            return loss_at(Hyperparams{x[0], x[1], 1.0, 0.0});
        };
        const optim::OptimResult r = optim::pattern_search(f, x0, lo, hi, opts);
        result.hyper = Hyperparams{r.x[0], r.x[1], 1.0, 0.0};
        result.loss = r.value;
        result.converged = r.converged();
    } else {
        Eigen::VectorXd x0(4), lo(4), hi(4);
        x0 << config.init.alpha, config.init.rho, config.init.gamma, config.init.omega;
        lo.setZero();
        hi << 1.0 - 1e-6, config.rho_max, config.gamma_max, config.omega_max;
        auto f = [&](const Eigen::VectorXd& x) {
            return loss_at(Hyperparams{x[0], x[1], x[2], x[3]});
        };
        const optim::OptimResult r = optim::pattern_search(f, x0, lo, hi, opts);
        result.hyper = Hyperparams{r.x[0], r.x[1], r.x[2], r.x[3]};
        result.loss = r.value;
        result.converged = r.converged();
    }
    return result;
}

ForecastEnsemble resample_harness(const MixedPanel& panel, const ModelPreset& preset, int B,
                                  const WindowScheme& scheme, const MfesnFitConfig& config) {
    if (B < 1) throw std::invalid_argument("resample_harness: B must be >= 1");
    const std::vector<EstimationWindow> windows = window_layout(scheme, panel.periods());

    ForecastEnsemble ensemble;
    for (const EstimationWindow& w : windows)
        for (int o : w.origins) ensemble.origins.push_back(o);
    const int S = static_cast<int>(ensemble.origins.size());
    ensemble.paths = Eigen::MatrixXd::Constant(B, S, std::numeric_limits<double>::quiet_NaN());
    ensemble.errors.assign(B, "");

    parallel_for(static_cast<std::size_t>(B), config.threads, [&](std::size_t b) {
        try {
            MfesnFitConfig rep = config;
            rep.seed = derive_seed(config.seed, b);
            rep.threads = 1;  // parallelism lives at the replication level
            int col = 0;
            for (const EstimationWindow& w : windows) {
                const MfesnModel model = fit_mfesn(panel, w.fit_begin, w.fit_end, preset, rep);
                for (int o : w.origins)
                    ensemble.paths(static_cast<Eigen::Index>(b), col++) =
                        forecast_mfesn(model, panel, o, 1);
            }
        } catch (const std::exception& e) {
            ensemble.errors[b] = e.what();
        }
    });

    // pointwise quantile bands over the successful replications
    const std::vector<double> probs = {0.05, 0.25, 0.5, 0.75, 0.95};
    ensemble.quantiles.resize(5, S);
    for (int s = 0; s < S; ++s) {
        std::vector<double> column;
        for (int b = 0; b < B; ++b)
            if (std::isfinite(ensemble.paths(b, s))) column.push_back(ensemble.paths(b, s));
        if (column.empty()) {
            ensemble.quantiles.col(s).setConstant(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        std::sort(column.begin(), column.end());
        for (std::size_t p = 0; p < probs.size(); ++p) {
            const double pos = probs[p] * (column.size() - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i);
            const double v = i + 1 < column.size()
                                 ? column[i] * (1.0 - frac) + column[i + 1] * frac
                                 : column[i];
            ensemble.quantiles(static_cast<Eigen::Index>(p), s) = v;
        }
    }
    return ensemble;
}

namespace {

nlohmann::json readout_to_json(const Readout& r) {
    return {{"W", jsonio::matrix_to_json(r.W)},
            {"intercept", jsonio::vector_to_json(r.intercept.transpose())},
            {"has_intercept", r.has_intercept},
            {"lambda", r.lambda}};
}

Readout readout_from_json(const nlohmann::json& j) {
    Readout r;
    r.W = jsonio::matrix_from_json(j.at("W"));
    r.intercept = jsonio::vector_from_json(j.at("intercept")).transpose();
    r.has_intercept = j.at("has_intercept").get<bool>();
    r.lambda = j.at("lambda").get<double>();
    return r;
}

nlohmann::json params_to_json(const StateParams& p) {
    return {{"A", jsonio::matrix_to_json(p.A)},   {"C", jsonio::matrix_to_json(p.C)},
            {"zeta", jsonio::vector_to_json(p.zeta)}, {"sparsity", p.sparsity},
            {"seed", p.seed},                     {"normalized", p.normalized}};
}

StateParams params_from_json(const nlohmann::json& j) {
    StateParams p;
    p.A = jsonio::matrix_from_json(j.at("A"));
    p.C = jsonio::matrix_from_json(j.at("C"));
    p.zeta = jsonio::vector_from_json(j.at("zeta"));
    p.sparsity = j.at("sparsity").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.normalized = j.at("normalized").get<bool>();
    return p;
}

nlohmann::json hyper_to_json(const Hyperparams& h) {
    return {{"alpha", h.alpha}, {"rho", h.rho}, {"gamma", h.gamma}, {"omega", h.omega}};
}

Hyperparams hyper_from_json(const nlohmann::json& j) {
    return Hyperparams{j.at("alpha").get<double>(), j.at("rho").get<double>(),
                       j.at("gamma").get<double>(), j.at("omega").get<double>()};
}

nlohmann::json normalization_to_json(const PanelNormalization& n) {
    nlohmann::json means = nlohmann::json::array(), stds = nlohmann::json::array();
    for (const auto& v : n.group_mean) means.push_back(jsonio::vector_to_json(v));
    for (const auto& v : n.group_std) stds.push_back(jsonio::vector_to_json(v));
    return {{"target_mean", n.target_mean},
            {"target_std", n.target_std},
            {"group_mean", means},
            {"group_std", stds}};
}

PanelNormalization normalization_from_json(const nlohmann::json& j) {
    PanelNormalization n;
    n.target_mean = j.at("target_mean").get<double>();
    n.target_std = j.at("target_std").get<double>();
    for (const auto& v : j.at("group_mean")) n.group_mean.push_back(jsonio::vector_from_json(v));
    for (const auto& v : j.at("group_std")) n.group_std.push_back(jsonio::vector_from_json(v));
    return n;
}

}  // namespace

void save_mfesn(const MfesnModel& model, const std::string& path) {
    nlohmann::json doc;
    doc["format"] = "mixfreq-model";
    doc["version"] = 1;
    if (std::holds_alternative<SMfesnModel>(model)) {
        const SMfesnModel& m = std::get<SMfesnModel>(model);
        doc["type"] = "smfesn";
        doc["params"] = params_to_json(m.params);
        doc["hyper"] = hyper_to_json(m.hyper);
        doc["input_readout"] = readout_to_json(m.input_readout);
        doc["target_readout"] = readout_to_json(m.target_readout);
        doc["group_kappas"] = m.group_kappas;
        doc["group_sizes"] = m.group_sizes;
        doc["kappa_max"] = m.kappa_max;
        doc["fit_begin"] = m.fit_begin;
        doc["fit_end"] = m.fit_end;
        doc["normalization"] = normalization_to_json(m.normalization);
        doc["lambda_input"] = m.lambda_input;
        doc["lambda_target"] = m.lambda_target;
        doc["seed"] = m.seed;
    } else {
        const MMfesnModel& m = std::get<MMfesnModel>(model);
        doc["type"] = "mmfesn";
        nlohmann::json groups = nlohmann::json::array();
        for (const auto& g : m.groups)
            groups.push_back({{"params", params_to_json(g.params)},
                              {"hyper", hyper_to_json(g.hyper)},
                              {"input_readout", readout_to_json(g.input_readout)},
                              {"kappa", g.kappa},
                              {"lambda_input", g.lambda_input}});
        doc["groups"] = groups;
        doc["target_readout"] = readout_to_json(m.target_readout);
        doc["fit_begin"] = m.fit_begin;
        doc["fit_end"] = m.fit_end;
        doc["normalization"] = normalization_to_json(m.normalization);
        doc["lambda_target"] = m.lambda_target;
        doc["seed"] = m.seed;
    }
    jsonio::write_json_file(doc, path);
}

MfesnModel load_mfesn(const std::string& path) {
    const nlohmann::json doc = jsonio::read_json_file(path);
    if (doc.value("format", "") != "mixfreq-model" || doc.value("version", 0) != 1)
        throw std::runtime_error("load_mfesn: '" + path + "' is not a v1 mixfreq model");
    const std::string type = doc.value("type", "");
    if (type == "smfesn") {
        SMfesnModel m;
        m.params = params_from_json(doc.at("params"));
        m.hyper = hyper_from_json(doc.at("hyper"));
        m.input_readout = readout_from_json(doc.at("input_readout"));
        m.target_readout = readout_from_json(doc.at("target_readout"));
        m.group_kappas = doc.at("group_kappas").get<std::vector<std::int64_t>>();
        m.group_sizes = doc.at("group_sizes").get<std::vector<int>>();
        m.kappa_max = doc.at("kappa_max").get<std::int64_t>();
        m.fit_begin = doc.at("fit_begin").get<int>();
        m.fit_end = doc.at("fit_end").get<int>();
        m.normalization = normalization_from_json(doc.at("normalization"));
        m.lambda_input = doc.at("lambda_input").get<double>();
        m.lambda_target = doc.at("lambda_target").get<double>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        return m;
    }
    if (type == "mmfesn") {
        MMfesnModel m;
        for (const auto& gj : doc.at("groups")) {
            MMfesnModel::GroupReservoir g;
            g.params = params_from_json(gj.at("params"));
            g.hyper = hyper_from_json(gj.at("hyper"));
            g.input_readout = readout_from_json(gj.at("input_readout"));
            g.kappa = gj.at("kappa").get<std::int64_t>();
            g.lambda_input = gj.at("lambda_input").get<double>();
            m.groups.push_back(std::move(g));
        }
        m.target_readout = readout_from_json(doc.at("target_readout"));
        m.fit_begin = doc.at("fit_begin").get<int>();
        m.fit_end = doc.at("fit_end").get<int>();
        m.normalization = normalization_from_json(doc.at("normalization"));
        m.lambda_target = doc.at("lambda_target").get<double>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        return m;
    }
    throw std::runtime_error("load_mfesn: unknown model type '" + type + "'");
}

}  // namespace mixfreq
