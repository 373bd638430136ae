#ifndef MIXFREQ_BENCHMARKS_HPP
#define MIXFREQ_BENCHMARKS_HPP

#include <Eigen/Core>
#include <string>

namespace mixfreq {

/// Unconditional-mean benchmark: forecasts the fit-window mean at every
/// horizon.
struct MeanModel {
    double mu = 0.0;
};

MeanModel fit_mean(const Eigen::VectorXd& window);
inline double forecast_mean(const MeanModel& model, int /*h*/) { return model.mu; }

/// AR(1) fitted by OLS of y_t on (1, y_{t-1}). Stationarity is not enforced;
/// |phi| >= 1 is flagged, not rejected.
struct Ar1Model {
    double c = 0.0;
    double phi = 0.0;
    bool explosive = false;  // |phi| >= 1
};

Ar1Model fit_ar1(const Eigen::VectorXd& window);

/// h-step forecast c (1 - phi^h) / (1 - phi) + phi^h y_T; the phi = 1 branch
/// uses the drift form c h + y_T.
double forecast_ar1(const Ar1Model& model, double y_last, int h);

void save_benchmark(const MeanModel& model, const std::string& path);
void save_benchmark(const Ar1Model& model, const std::string& path);
MeanModel load_mean(const std::string& path);
Ar1Model load_ar1(const std::string& path);

}  // namespace mixfreq

#endif  // MIXFREQ_BENCHMARKS_HPP
