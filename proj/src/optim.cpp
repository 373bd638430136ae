#include "mixfreq/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace mixfreq::optim {

namespace {

bool finite(double v) { return std::isfinite(v); }
bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

OptimResult lbfgs_minimize(const ObjectiveGrad& fg, const Eigen::VectorXd& x0,
                           const LbfgsOptions& opt) {
    const Eigen::Index n = x0.size();
    OptimResult res;
    res.x = x0;

    Eigen::VectorXd grad(n);
    double f = fg(res.x, grad);
    if (!finite(f) || !finite(grad))
        throw std::invalid_argument("lbfgs_minimize: objective not finite at the starting point");

    res.value = f;
    res.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (res.grad_norm <= opt.grad_tolerance) {
        res.status = OptimStatus::Converged;
        return res;
    }

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    Eigen::VectorXd x = x0, x_new(n), grad_new(n), direction(n), q(n);
    double gamma = 1.0;

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        // Two-loop recursion for the search direction.
        q = grad;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        q *= gamma;
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        direction = -q;

        double dg = direction.dot(grad);
        if (dg >= 0.0) {  // not a descent direction, reset to steepest descent
            direction = -grad;
            dg = -grad.squaredNorm();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Bracketing Wolfe line search: shrink on Armijo failure, expand on
        // curvature failure. Expansion matters: without it, a stale tiny
        // direction satisfies Armijo at step 1 and the iteration crawls.
        double step = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        double armijo_step = -1.0, armijo_f = 0.0;
        Eigen::VectorXd armijo_x, armijo_g;
        for (int ls = 0; ls < opt.max_line_search; ++ls) {
            x_new = x + step * direction;
            f_new = fg(x_new, grad_new);
            const bool armijo =
                finite(f_new) && finite(grad_new) && f_new <= f + opt.armijo_c1 * step * dg;
            if (!armijo) {
                hi = step;
                step = 0.5 * (lo + hi);
                continue;
            }
            if (armijo_step < 0.0 || f_new < armijo_f) {
                armijo_step = step;
                armijo_f = f_new;
                armijo_x = x_new;
                armijo_g = grad_new;
            }
            if (grad_new.dot(direction) < opt.wolfe_c2 * dg) {
                lo = step;
                step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
                continue;
            }
            accepted = true;
            break;
        }
        if (!accepted && armijo_step > 0.0) {
            // curvature never held within the budget; take the best
            // sufficient-decrease point (the pair check below guards the
            // memory update)
            x_new = armijo_x;
            grad_new = armijo_g;
            f_new = armijo_f;
            accepted = true;
        }
        if (!accepted) {
            // unusable direction; retry once from steepest descent
            if (!s_hist.empty()) {
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                gamma = 1.0;
                res.iterations = iter + 1;
                continue;
            }
            res.status = OptimStatus::LineSearchFailed;
            return res;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            gamma = sy / y.squaredNorm();
            if (static_cast<int>(s_hist.size()) > opt.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        x = x_new;
        grad = grad_new;
        f = f_new;
        res.x = x;
        res.value = f;
        res.grad_norm = grad.lpNorm<Eigen::Infinity>();
        res.iterations = iter + 1;

        if (res.grad_norm <= opt.grad_tolerance) {
            res.status = OptimStatus::Converged;
            return res;
        }
    }

    res.status = OptimStatus::MaxIterations;
    return res;
}

OptimResult pattern_search(const Objective& f, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const PatternSearchOptions& opt) {
    const Eigen::Index n = x0.size();
    if (lower.size() != n || upper.size() != n)
        throw std::invalid_argument("pattern_search: bound dimensions do not match x0");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(lower[i] <= x0[i] && x0[i] <= upper[i]))
            throw std::invalid_argument("pattern_search: x0 outside the box");
    }

    OptimResult res;
    res.x = x0;
    res.value = f(x0);
    if (!finite(res.value))
        throw std::invalid_argument("pattern_search: objective not finite at the starting point");

    Eigen::VectorXd step = opt.initial_step * (upper - lower);
    for (Eigen::Index i = 0; i < n; ++i)
        if (step[i] <= 0.0) step[i] = opt.initial_step;

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        res.iterations = iter + 1;
        double best_value = res.value;
        Eigen::VectorXd best_x = res.x;

        for (Eigen::Index i = 0; i < n; ++i) {
            for (const double sign : {+1.0, -1.0}) {
                Eigen::VectorXd cand = res.x;
                cand[i] = std::clamp(cand[i] + sign * step[i], lower[i], upper[i]);
                if (cand[i] == res.x[i]) continue;
                const double v = f(cand);
                if (finite(v) && v < best_value) {
                    best_value = v;
                    best_x = cand;
                }
            }
        }

        if (best_value < res.value) {
            res.value = best_value;
            res.x = best_x;
        } else {
            step *= opt.shrink;
            if (step.maxCoeff() < opt.step_tolerance) {
                res.status = OptimStatus::Converged;
                return res;
            }
        }
    }

    res.status = OptimStatus::MaxIterations;
    return res;
}

OptimResult adam_minimize(const ObjectiveGrad& fg, const Eigen::VectorXd& x0,
                          const AdamOptions& opt) {
    const Eigen::Index n = x0.size();
    Eigen::VectorXd x = x0, grad(n);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);

    OptimResult res;
    res.x = x0;
    res.value = fg(x, grad);
    if (!finite(res.value) || !finite(grad))
        throw std::invalid_argument("adam_minimize: objective not finite at the starting point");
    res.grad_norm = grad.lpNorm<Eigen::Infinity>();

    int since_best = 0;
    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
        v = opt.beta2 * v.array().matrix() + (1.0 - opt.beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(opt.beta1, iter);
        const double bc2 = 1.0 - std::pow(opt.beta2, iter);
        x -= (opt.learning_rate * (m / bc1).array() / ((v / bc2).array().sqrt() + opt.epsilon))
                 .matrix();

        const double f = fg(x, grad);
        res.iterations = iter;
        if (!finite(f) || !finite(grad)) break;  // stop at the last sane iterate

        if (f < res.value) {
            res.value = f;
            res.x = x;
            res.grad_norm = grad.lpNorm<Eigen::Infinity>();
            since_best = 0;
        } else if (++since_best >= opt.patience) {
            res.status = OptimStatus::Converged;
            return res;
        }
        if (grad.lpNorm<Eigen::Infinity>() <= opt.grad_tolerance) {
            res.status = OptimStatus::Converged;
            return res;
        }
    }

    res.status = OptimStatus::MaxIterations;
    return res;
}

Eigen::VectorXd finite_difference_gradient(const Objective& f, const Eigen::VectorXd& x,
                                           double step) {
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        p[i] = x[i] + h;
        const double fp = f(p);
        p[i] = x[i] - h;
        const double fm = f(p);
        p[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

ObjectiveGrad with_fd_gradient(const Objective& f, double step) {
    return [f, step](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad = finite_difference_gradient(f, x, step);
        return f(x);
    };
}

}  // namespace mixfreq::optim
