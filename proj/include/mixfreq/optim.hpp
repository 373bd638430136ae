#ifndef MIXFREQ_OPTIM_HPP
#define MIXFREQ_OPTIM_HPP

#include <Eigen/Core>
#include <functional>

namespace mixfreq::optim {

/// Objective callback: returns f(x) and fills grad (same size as x).
using ObjectiveGrad = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
/// Value-only objective for derivative-free methods.
using Objective = std::function<double(const Eigen::VectorXd& x)>;

enum class OptimStatus { Converged, MaxIterations, LineSearchFailed, Degenerate };

struct OptimResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_norm = 0.0;  // infinity norm at x (when gradients are used)
    int iterations = 0;
    OptimStatus status = OptimStatus::MaxIterations;

    bool converged() const { return status == OptimStatus::Converged; }
};

struct LbfgsOptions {
    int max_iterations = 500;
    double grad_tolerance = 1e-8;  // infinity norm of the gradient
    int memory = 8;
    double armijo_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_line_search = 40;
};

/// Limited-memory BFGS with a bracketing-free Armijo/curvature backtracking
/// line search. Minimizes fg over R^n from x0.
OptimResult lbfgs_minimize(const ObjectiveGrad& fg, const Eigen::VectorXd& x0,
                           const LbfgsOptions& options = {});

struct PatternSearchOptions {
    int max_iterations = 200;
    double initial_step = 0.25;  // relative to the box width per coordinate
    double step_tolerance = 1e-6;
    double shrink = 0.5;
};

/// Coordinate pattern search on a box [lower, upper]. Polls +/- step moves
/// per coordinate, accepts the best improving move, halves the mesh
/// otherwise. Never evaluates outside the box; never returns a point worse
/// than x0.
OptimResult pattern_search(const Objective& f, const Eigen::VectorXd& x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const PatternSearchOptions& options = {});

struct AdamOptions {
    int max_iterations = 300;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_tolerance = 1e-7;
    int patience = 50;  // stop after this many iterations without improving the best value
};

/// Adam descent on fg; keeps and returns the best iterate seen.
OptimResult adam_minimize(const ObjectiveGrad& fg, const Eigen::VectorXd& x0,
                          const AdamOptions& options = {});

/// Central finite-difference gradient of f at x.
Eigen::VectorXd finite_difference_gradient(const Objective& f, const Eigen::VectorXd& x,
                                           double step = 1e-5);

/// Wrap a value-only objective as an ObjectiveGrad via central differences.
/// Coordinates are evaluated in a fixed order, so results are deterministic.
ObjectiveGrad with_fd_gradient(const Objective& f, double step = 1e-5);

}  // namespace mixfreq::optim

#endif  // MIXFREQ_OPTIM_HPP
