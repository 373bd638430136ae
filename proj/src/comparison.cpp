#include "mixfreq/comparison.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <stdexcept>

#include "mixfreq/rng.hpp"

namespace mixfreq {

double newey_west_lrv(const Eigen::VectorXd& series, int lags) {
    const Eigen::Index n = series.size();
    if (n < 2) throw std::invalid_argument("newey_west_lrv: need at least 2 observations");
    const double mean = series.mean();
    const Eigen::VectorXd centered = series.array() - mean;

    double lrv = centered.squaredNorm() / n;
    for (int k = 1; k <= lags && k < n; ++k) {
        const double gamma =
            (centered.tail(n - k).array() * centered.head(n - k).array()).sum() / n;
        const double weight = 1.0 - static_cast<double>(k) / (lags + 1);
        lrv += 2.0 * weight * gamma;
    }
    return lrv;
}

std::vector<int> moving_block_indices(int n, int block, std::uint64_t seed) {
    if (n < 1 || block < 1) throw std::invalid_argument("moving_block_indices: bad sizes");
    block = std::min(block, n);
    std::mt19937_64 eng = make_engine(seed);
    std::uniform_int_distribution<int> start(0, n - block);
    std::vector<int> idx;
    idx.reserve(n + block);
    while (static_cast<int>(idx.size()) < n) {
        const int s = start(eng);
        for (int j = 0; j < block && static_cast<int>(idx.size()) < n; ++j) idx.push_back(s + j);
    }
    return idx;
}

MdmResult mdm_test(const Eigen::VectorXd& loss_a, const Eigen::VectorXd& loss_b, int h) {
    if (loss_a.size() != loss_b.size()) throw std::invalid_argument("mdm_test: length mismatch");
    if (h < 1) throw std::invalid_argument("mdm_test: h must be >= 1");
    const int n = static_cast<int>(loss_a.size());
    if (n < h + 2) throw std::invalid_argument("mdm_test: need T >= h + 2");

    const Eigen::VectorXd d = loss_a - loss_b;
    const double d_mean = d.mean();
    const double lrv = newey_west_lrv(d, h - 1);
    if (!(lrv > 0.0))
        throw std::invalid_argument("mdm_test: degenerate loss differential (zero variance)");

    const double dm = d_mean / std::sqrt(lrv / n);
    const double correction =
        std::sqrt((n + 1.0 - 2.0 * h + h * (h - 1.0) / n) / static_cast<double>(n));

    MdmResult out;
    out.statistic = correction * dm;
    out.sample_size = n;
    out.horizon = h;
    out.correction = correction;
    out.hac_lags = h - 1;
    const boost::math::students_t dist(n - 1);
    out.p_value = 1.0 - boost::math::cdf(dist, out.statistic);
    return out;
}

std::vector<std::string> McsResult::included(double confidence) const {
    std::vector<std::string> in;
    for (std::size_t i = 0; i < models.size(); ++i)
        if (mcs_pvalues[i] >= 1.0 - confidence) in.push_back(models[i]);
    return in;
}

McsResult mcs_test(const LossMatrix& losses, int horizon_index, const McsConfig& config) {
    losses.validate();
    const int M = static_cast<int>(losses.models.size());
    if (M < 1) throw std::invalid_argument("mcs_test: need at least one model");
    const int n = static_cast<int>(losses.origins.size());
    if (n < 3) throw std::invalid_argument("mcs_test: need at least 3 origins");
    const int block = config.block_length > 0
                          ? config.block_length
                          : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));

    McsResult result;
    result.models = losses.models;
    result.mcs_pvalues.assign(M, 1.0);
    result.config = config;
    result.config.block_length = block;

    if (M == 1) return result;  // a single model is trivially retained

    Eigen::MatrixXd loss(n, M);
    for (int m = 0; m < M; ++m) loss.col(m) = losses.series(m, horizon_index);

    // Pre-draw bootstrap index sets shared by every elimination round.
    std::vector<std::vector<int>> draws(config.bootstrap);
    for (int b = 0; b < config.bootstrap; ++b)
        draws[b] = moving_block_indices(n, block, derive_seed(config.seed, 0x3c5u, b));

    std::vector<int> active(M);
    for (int m = 0; m < M; ++m) active[m] = m;

    double running_p = 0.0;
    while (active.size() > 1) {
        const int a = static_cast<int>(active.size());

        // mean loss differentials and their bootstrap variances
        Eigen::MatrixXd dbar = Eigen::MatrixXd::Zero(a, a);
        for (int i = 0; i < a; ++i)
            for (int j = 0; j < a; ++j)
                dbar(i, j) = (loss.col(active[i]) - loss.col(active[j])).mean();

        std::vector<Eigen::MatrixXd> dbar_boot(config.bootstrap);
        for (int b = 0; b < config.bootstrap; ++b) {
            Eigen::MatrixXd db = Eigen::MatrixXd::Zero(a, a);
            Eigen::VectorXd col_means(a);
            for (int i = 0; i < a; ++i) {
                double s = 0.0;
                for (int idx : draws[b]) s += loss(idx, active[i]);
                col_means[i] = s / n;
            }
            for (int i = 0; i < a; ++i)
                for (int j = 0; j < a; ++j) db(i, j) = col_means[i] - col_means[j];
            dbar_boot[b] = std::move(db);
        }

        Eigen::MatrixXd var = Eigen::MatrixXd::Zero(a, a);
        for (int b = 0; b < config.bootstrap; ++b) {
            const Eigen::MatrixXd dev = dbar_boot[b] - dbar;
            var += dev.cwiseProduct(dev);
        }
        var /= static_cast<double>(config.bootstrap);

        auto t_stat = [&](const Eigen::MatrixXd& d, int i, int j) {
            const double v = var(i, j);
            return v > 0.0 ? d(i, j) / std::sqrt(v) : 0.0;
        };

        double t_range = 0.0;
        int worst = 0;
        double worst_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < a; ++i) {
            double score = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < a; ++j) {
                if (i == j) continue;
                const double t = t_stat(dbar, i, j);
                t_range = std::max(t_range, std::abs(t));
                score = std::max(score, t);
            }
            if (score > worst_score) {
                worst_score = score;
                worst = i;
            }
        }

        int exceed = 0;
        for (int b = 0; b < config.bootstrap; ++b) {
            double t_b = 0.0;
            const Eigen::MatrixXd dev = dbar_boot[b] - dbar;
            for (int i = 0; i < a; ++i)
                for (int j = 0; j < a; ++j)
                    if (i != j) t_b = std::max(t_b, std::abs(t_stat(dev, i, j)));
            if (t_b >= t_range) ++exceed;
        }
        const double p = static_cast<double>(exceed) / config.bootstrap;

        running_p = std::max(running_p, p);
        result.mcs_pvalues[active[worst]] = running_p;
        result.elimination_order.push_back(losses.models[active[worst]]);
        active.erase(active.begin() + worst);
    }
    result.mcs_pvalues[active[0]] = 1.0;
    return result;
}

std::vector<std::string> UmcsResult::included(double confidence) const {
    std::vector<std::string> in;
    for (std::size_t i = 0; i < models.size(); ++i)
        if (mcs_pvalues[i] >= 1.0 - confidence) in.push_back(models[i]);
    return in;
}

namespace {

// Uniform-SPA statistic for ordered pair (i, j): min over horizons of the
// studentized mean of d = loss_j - loss_i. Large positive values mean model
// i dominates j at every horizon. `center` recenters the bootstrap version.
double uspa_statistic(const std::vector<Eigen::MatrixXd>& losses,
                      const std::vector<int>& horizons, int i, int j,
                      const std::vector<int>* indices, const Eigen::VectorXd* center) {
    const int H = static_cast<int>(horizons.size());
    const int n = static_cast<int>(losses[i].cols());
    double stat = std::numeric_limits<double>::infinity();
    for (int h = 0; h < H; ++h) {
        Eigen::VectorXd d(n);
        if (indices) {
            for (int t = 0; t < n; ++t)
                d[t] = losses[j](h, (*indices)[t]) - losses[i](h, (*indices)[t]);
        } else {
            d = (losses[j].row(h) - losses[i].row(h)).transpose();
        }
        double mean = d.mean();
        if (center) mean -= (*center)[h];
        const double lrv = newey_west_lrv(d, horizons[h] - 1);
        const double se = std::sqrt(std::max(lrv, 1e-300) / n);
        stat = std::min(stat, mean / se);
    }
    return stat;
}

}  // namespace

UmcsResult umcs_test(const LossMatrix& losses, const UmcsConfig& config) {
    losses.validate();
    const int M = static_cast<int>(losses.models.size());
    if (M < 1) throw std::invalid_argument("umcs_test: need at least one model");
    const int n = static_cast<int>(losses.origins.size());
    if (n < 3) throw std::invalid_argument("umcs_test: need at least 3 origins");
    const int block = config.block_length > 0
                          ? config.block_length
                          : static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));

    UmcsResult result;
    result.models = losses.models;
    result.mcs_pvalues.assign(M, 1.0);
    result.config = config;
    result.config.block_length = block;
    if (M == 1) return result;

    const int B = config.bootstrap;
    std::vector<std::vector<int>> inner_draws(B), outer_draws(B);
    for (int b = 0; b < B; ++b) {
        inner_draws[b] = moving_block_indices(n, block, derive_seed(config.seed, 0x1111u, b));
        outer_draws[b] = moving_block_indices(n, block, derive_seed(config.seed, 0x2222u, b));
    }

    std::vector<int> active(M);
    for (int m = 0; m < M; ++m) active[m] = m;
    double running_p = 0.0;

    while (active.size() > 1) {
        const int a = static_cast<int>(active.size());

        // per-pair horizon-wise mean differentials (for recentering)
        auto pair_means = [&](int i, int j) {
            Eigen::VectorXd mu(losses.horizons.size());
            for (std::size_t h = 0; h < losses.horizons.size(); ++h)
                mu[static_cast<Eigen::Index>(h)] =
                    (losses.losses[j].row(static_cast<Eigen::Index>(h)) -
                     losses.losses[i].row(static_cast<Eigen::Index>(h)))
                        .mean();
            return mu;
        };

        // observed statistics and inner-bootstrap critical values
        Eigen::MatrixXd s_obs(a, a);
        Eigen::MatrixXd c_inner(a, a);
        for (int i = 0; i < a; ++i) {
            for (int j = 0; j < a; ++j) {
                if (i == j) {
                    s_obs(i, j) = -std::numeric_limits<double>::infinity();
                    c_inner(i, j) = 0.0;
                    continue;
                }
                s_obs(i, j) = uspa_statistic(losses.losses, losses.horizons, active[i], active[j],
                                             nullptr, nullptr);
                const Eigen::VectorXd mu = pair_means(active[i], active[j]);
                std::vector<double> s_b(B);
                for (int b = 0; b < B; ++b)
                    s_b[b] = uspa_statistic(losses.losses, losses.horizons, active[i], active[j],
                                            &inner_draws[b], &mu);
                std::sort(s_b.begin(), s_b.end());
                const int q = std::min(B - 1, static_cast<int>(std::ceil((1.0 - config.inner_alpha) * B)) - 1);
                c_inner(i, j) = s_b[std::max(0, q)];
            }
        }

        // recentered max statistic and its outer-bootstrap distribution
        double t_obs = -std::numeric_limits<double>::infinity();
        int worst_j = 0;
        for (int i = 0; i < a; ++i)
            for (int j = 0; j < a; ++j) {
                if (i == j) continue;
                const double v = s_obs(i, j) - c_inner(i, j);
                if (v > t_obs) {
                    t_obs = v;
                    worst_j = j;  // the dominated model of the extreme pair
                }
            }

        int exceed = 0;
        for (int b = 0; b < B; ++b) {
            double t_b = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < a; ++i)
                for (int j = 0; j < a; ++j) {
                    if (i == j) continue;
                    const Eigen::VectorXd mu = pair_means(active[i], active[j]);
                    const double s = uspa_statistic(losses.losses, losses.horizons, active[i],
                                                    active[j], &outer_draws[b], &mu);
                    t_b = std::max(t_b, s - c_inner(i, j));
                }
            if (t_b >= t_obs) ++exceed;
        }
        const double p = static_cast<double>(exceed) / B;

        running_p = std::max(running_p, p);
        result.mcs_pvalues[active[worst_j]] = running_p;
        result.elimination_order.push_back(losses.models[active[worst_j]]);
        active.erase(active.begin() + worst_j);
    }
    result.mcs_pvalues[active[0]] = 1.0;
    return result;
}

}  // namespace mixfreq
