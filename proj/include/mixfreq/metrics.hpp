#ifndef MIXFREQ_METRICS_HPP
#define MIXFREQ_METRICS_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace mixfreq {

/// Squared forecast errors on a common origin grid: one (horizons x origins)
/// matrix per model. The origin set is shared across horizons (end-of-sample
/// trimming applied by the harness), so per-horizon metrics compare equal
/// sample counts.
struct LossMatrix {
    std::vector<std::string> models;
    std::vector<int> horizons;
    std::vector<int> origins;  // forecast origins (period index)
    std::vector<Eigen::MatrixXd> losses;

    void validate() const;
    int model_index(const std::string& name) const;
    /// Loss series of one model at one horizon (length = origins).
    Eigen::VectorXd series(int model, int horizon_index) const;
};

/// All metrics take a vector of squared errors ordered by origin; tau is a
/// 0-based position in that ordering.
double msfe(const Eigen::VectorXd& sq_errors);
double rmsfe(const Eigen::VectorXd& sq_errors);
double csfe(const Eigen::VectorXd& sq_errors, int tau);              // sum over s <= tau
double crmsfe(const Eigen::VectorXd& sq_errors, int tau);            // sqrt mean over s <= tau
double ahead_rmsfe(const Eigen::VectorXd& sq_errors, int tau);       // sqrt mean over s >= tau
double one_year_ahead_rmsfe(const Eigen::VectorXd& sq_errors, int tau);  // s >= tau + 4

}  // namespace mixfreq

#endif  // MIXFREQ_METRICS_HPP
