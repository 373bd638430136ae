#ifndef MIXFREQ_COMPARISON_HPP
#define MIXFREQ_COMPARISON_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "mixfreq/metrics.hpp"

namespace mixfreq {

/// Bartlett-kernel (Newey-West) long-run variance of a series with the given
/// number of lags: gamma_0 + 2 sum_{k=1..lags} (1 - k/(lags+1)) gamma_k.
double newey_west_lrv(const Eigen::VectorXd& series, int lags);

/// Moving-block bootstrap indices: blocks of length `block` with uniform
/// starts, concatenated and trimmed to n.
std::vector<int> moving_block_indices(int n, int block, std::uint64_t seed);

struct MdmResult {
    double statistic = 0.0;
    double p_value = 1.0;  // one-sided: small p rejects "model a forecasts at least as well"
    int sample_size = 0;
    int horizon = 1;
    double correction = 1.0;  // small-sample factor applied to the DM statistic
    std::string kernel = "bartlett";
    int hac_lags = 0;
};

/// Modified Diebold-Mariano test on squared-error series of two models at
/// horizon h. The loss differential is loss_a - loss_b; the null is that
/// model a forecasts at least as accurately, rejected for large positive
/// statistics (Student-t with T-1 degrees of freedom).
MdmResult mdm_test(const Eigen::VectorXd& loss_a, const Eigen::VectorXd& loss_b, int h);

struct McsConfig {
    int bootstrap = 1000;
    int block_length = 0;  // 0: ceil(T^(1/3))
    std::uint64_t seed = 0;
    std::vector<double> confidences = {0.75, 0.90};
};

struct McsResult {
    std::vector<std::string> models;
    std::vector<double> mcs_pvalues;          // aligned with models
    std::vector<std::string> elimination_order;  // first eliminated first
    McsConfig config;

    /// Models whose MCS p-value is >= 1 - confidence.
    std::vector<std::string> included(double confidence) const;
};

/// Hansen-style model confidence set with the range statistic over pairwise
/// mean loss differentials and a moving-block bootstrap.
McsResult mcs_test(const LossMatrix& losses, int horizon_index, const McsConfig& config = {});

struct UmcsConfig {
    int bootstrap = 100;        // outer and inner replications
    double inner_alpha = 0.1;   // inner bootstrap critical-value level
    int block_length = 0;       // 0: ceil(T^(1/3))
    std::uint64_t seed = 0;
    std::vector<double> confidences = {0.75, 0.90};
    std::string kernel = "bartlett";
};

struct UmcsResult {
    std::vector<std::string> models;
    std::vector<double> mcs_pvalues;
    std::vector<std::string> elimination_order;
    UmcsConfig config;

    std::vector<std::string> included(double confidence) const;
};

/// Uniform multi-horizon MCS: pairwise uniform-SPA statistics (minimum over
/// horizons of the studentized mean loss differential, Newey-West with h-1
/// lags at horizon h) with a double moving-block bootstrap. The inner
/// bootstrap sets per-pair critical values at inner_alpha; the outer
/// bootstrap delivers the elimination p-value of the recentered max
/// statistic.
UmcsResult umcs_test(const LossMatrix& losses, const UmcsConfig& config = {});

}  // namespace mixfreq

#endif  // MIXFREQ_COMPARISON_HPP
