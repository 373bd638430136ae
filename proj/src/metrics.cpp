#include "mixfreq/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace mixfreq {

void LossMatrix::validate() const {
    if (models.size() != losses.size())
        throw std::invalid_argument("LossMatrix: one loss matrix per model required");
    for (const Eigen::MatrixXd& m : losses) {
        if (m.rows() != static_cast<Eigen::Index>(horizons.size()) ||
            m.cols() != static_cast<Eigen::Index>(origins.size()))
            throw std::invalid_argument("LossMatrix: loss matrix shape mismatch");
    }
}

int LossMatrix::model_index(const std::string& name) const {
    for (std::size_t i = 0; i < models.size(); ++i)
        if (models[i] == name) return static_cast<int>(i);
    return -1;
}

Eigen::VectorXd LossMatrix::series(int model, int horizon_index) const {
    return losses.at(model).row(horizon_index).transpose();
}

namespace {
void check_nonempty(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw std::invalid_argument("metric: empty index set");
}
}  // namespace

double msfe(const Eigen::VectorXd& sq) {
    check_nonempty(sq);
    return sq.mean();
}

double rmsfe(const Eigen::VectorXd& sq) { return std::sqrt(msfe(sq)); }

double csfe(const Eigen::VectorXd& sq, int tau) {
    check_nonempty(sq);
    if (tau < 0 || tau >= sq.size()) throw std::invalid_argument("csfe: tau outside the index set");
    return sq.head(tau + 1).sum();
}

double crmsfe(const Eigen::VectorXd& sq, int tau) {
    check_nonempty(sq);
    if (tau < 0 || tau >= sq.size())
        throw std::invalid_argument("crmsfe: tau outside the index set");
    return std::sqrt(sq.head(tau + 1).mean());
}

double ahead_rmsfe(const Eigen::VectorXd& sq, int tau) {
    check_nonempty(sq);
    if (tau < 0 || tau >= sq.size())
        throw std::invalid_argument("ahead_rmsfe: tau outside the index set");
    return std::sqrt(sq.tail(sq.size() - tau).mean());
}

double one_year_ahead_rmsfe(const Eigen::VectorXd& sq, int tau) {
    check_nonempty(sq);
    const int from = tau + 4;
    if (from < 0 || from >= sq.size())
        throw std::invalid_argument("one_year_ahead_rmsfe: tau + 4 outside the index set");
    return std::sqrt(sq.tail(sq.size() - from).mean());
}

}  // namespace mixfreq
