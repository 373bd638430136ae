#include "mixfreq/benchmarks.hpp"

#include <cmath>
#include <stdexcept>

#include "mixfreq/json_io.hpp"

namespace mixfreq {

MeanModel fit_mean(const Eigen::VectorXd& window) {
    if (window.size() < 1) throw std::invalid_argument("fit_mean: empty window");
    if (!window.allFinite()) throw std::invalid_argument("fit_mean: non-finite values");
    return MeanModel{window.mean()};
}

Ar1Model fit_ar1(const Eigen::VectorXd& window) {
    const Eigen::Index n = window.size();
    if (n < 3) throw std::invalid_argument("fit_ar1: need at least 3 observations");
    if (!window.allFinite()) throw std::invalid_argument("fit_ar1: non-finite values");

    const Eigen::VectorXd lag = window.head(n - 1);
    const Eigen::VectorXd resp = window.tail(n - 1);
    const double lag_mean = lag.mean();
    const double resp_mean = resp.mean();
    const double sxx = (lag.array() - lag_mean).square().sum();
    if (!(sxx > 0.0))
        throw std::invalid_argument("fit_ar1: degenerate regressor (constant lagged values)");
    const double sxy = ((lag.array() - lag_mean) * (resp.array() - resp_mean)).sum();

    Ar1Model model;
    model.phi = sxy / sxx;
    model.c = resp_mean - model.phi * lag_mean;
    model.explosive = std::abs(model.phi) >= 1.0;
    return model;
}

double forecast_ar1(const Ar1Model& model, double y_last, int h) {
    if (h < 1) throw std::invalid_argument("forecast_ar1: h must be >= 1");
    const double phi_h = std::pow(model.phi, h);
    if (model.phi == 1.0) return model.c * h + y_last;
    return model.c * (1.0 - phi_h) / (1.0 - model.phi) + phi_h * y_last;
}

void save_benchmark(const MeanModel& model, const std::string& path) {
    jsonio::write_json_file({{"format", "mixfreq-model"},
                             {"type", "mean"},
                             {"version", 1},
                             {"mu", model.mu}},
                            path);
}

void save_benchmark(const Ar1Model& model, const std::string& path) {
    jsonio::write_json_file({{"format", "mixfreq-model"},
                             {"type", "ar1"},
                             {"version", 1},
                             {"c", model.c},
                             {"phi", model.phi},
                             {"explosive", model.explosive}},
                            path);
}

MeanModel load_mean(const std::string& path) {
    const nlohmann::json doc = jsonio::read_json_file(path);
    jsonio::expect_format(doc, "mean", 1);
    return MeanModel{doc.at("mu").get<double>()};
}

Ar1Model load_ar1(const std::string& path) {
    const nlohmann::json doc = jsonio::read_json_file(path);
    jsonio::expect_format(doc, "ar1", 1);
    Ar1Model m;
    m.c = doc.at("c").get<double>();
    m.phi = doc.at("phi").get<double>();
    m.explosive = doc.at("explosive").get<bool>();
    return m;
}

}  // namespace mixfreq
