#ifndef MIXFREQ_PANEL_HPP
#define MIXFREQ_PANEL_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "mixfreq/tempo.hpp"

namespace mixfreq {

/// One ingested series before preprocessing: ordered values with possible
/// missing entries, its sampling frequency and the transformation to apply.
/// Codes: 1 none, 2 diff, 3 double diff, 4 log, 5 diff-log, 6 double
/// diff-log, 7 percentage change, 8 GARCH(1,1) conditional volatility.
struct RawSeries {
    std::string name;
    Frequency kappa{1};
    std::vector<std::optional<double>> values;
    int transform_code = 1;
};

/// Load one value column of a CSV file. The first column is treated as the
/// index key and must be strictly increasing (as strings after numeric
/// normalization is the caller's concern; duplicates are rejected).
RawSeries load_csv(const std::string& path, const std::string& column, Frequency kappa,
                   int transform_code);

/// Apply the series' transform code. Differencing shortens the output by the
/// differencing order; log codes require strictly positive inputs; code 7
/// requires nonzero predecessors; code 8 fits a GARCH(1,1) on the (fully
/// observed) series and returns the conditional volatility path.
Eigen::VectorXd apply_transform(const RawSeries& series);
Eigen::VectorXd apply_transform(const Eigen::VectorXd& values, int code,
                                const std::string& name = "");

/// How much shorter apply_transform output is than its input.
int transform_shortening(int code);

/// Fill interior missing entries by the mean of up to five previous observed
/// values (holiday rule). Leading missing entries stay missing.
std::vector<std::optional<double>> fill_missing_trailing5(
    const std::vector<std::optional<double>>& values);

/// Force every reference block to exactly per_period values. Blocks are
/// delimited by block_sizes (raw observation counts per reference period).
/// Short blocks are filled by linear interpolation of the leading slots,
/// anchored at the previous block's last value; long blocks keep the most
/// recent per_period values. A short first block repeats its first value.
Eigen::VectorXd interpolate_to_fixed_grid(const Eigen::VectorXd& values,
                                          const std::vector<int>& block_sizes, int per_period);

/// Non-overlapping block means; length must be divisible by block.
Eigen::VectorXd average_blocks(const Eigen::VectorXd& values, int block);

/// One frequency group of a mixed panel: (T * kappa) x n matrix, row t*kappa+s.
struct SeriesGroup {
    Frequency kappa{1};
    Eigen::MatrixXd data;
    std::vector<std::string> names;

    int n_series() const { return static_cast<int>(data.cols()); }
};

/// Per-series normalization recorded when a panel is standardized.
struct PanelNormalization {
    double target_mean = 0.0;
    double target_std = 1.0;
    std::vector<Eigen::VectorXd> group_mean;
    std::vector<Eigen::VectorXd> group_std;
};

/// Reference-frequency target plus covariate groups ordered by descending
/// kappa. Every group spans the same T reference periods as the target.
class MixedPanel {
   public:
    MixedPanel(Eigen::VectorXd target, std::vector<SeriesGroup> groups);

    int periods() const { return static_cast<int>(target_.size()); }
    int n_groups() const { return static_cast<int>(groups_.size()); }
    Frequency kappa_max() const { return kappa_max_; }
    std::int64_t ratio(int group) const { return kappa_max_.kappa / groups_[group].kappa.kappa; }
    int total_series() const;

    const Eigen::VectorXd& target() const { return target_; }
    const SeriesGroup& group(int l) const { return groups_.at(l); }
    const std::vector<SeriesGroup>& groups() const { return groups_; }

    /// Group value at tempo (t, <s>) on the group's own kappa_l grid.
    double value(int group, std::int64_t t, std::int64_t s, int series) const;

    const std::optional<PanelNormalization>& normalization() const { return normalization_; }

    /// Restrict to reference periods [first, last).
    MixedPanel slice(int first, int last) const;

   private:
    friend MixedPanel standardize(const MixedPanel&, int, int);
    friend MixedPanel apply_normalization(const MixedPanel&, const PanelNormalization&);
    Eigen::VectorXd target_;
    std::vector<SeriesGroup> groups_;
    Frequency kappa_max_{1};
    std::optional<PanelNormalization> normalization_;
};

/// Center and scale every series by its statistics over reference periods
/// [first, last); the statistics are stored on the result for
/// inverse-transforming forecasts. Population standard deviations. A series
/// with zero window variance is an error naming the series.
MixedPanel standardize(const MixedPanel& panel, int first, int last);

/// Re-apply previously recorded statistics (used when forecasting: the panel
/// grows past the fit window but keeps the fit-window normalization).
MixedPanel apply_normalization(const MixedPanel& panel, const PanelNormalization& norm);

double inverse_standardize_target(const MixedPanel& panel, double value);

/// Versioned binary panel serialization with bit-exact round trip.
void save_panel(const MixedPanel& panel, const std::string& path);
MixedPanel load_panel(const std::string& path);

/// Manifest-driven ingestion: JSON listing the target and covariate series
/// as {file, column, kappa, transform} entries (see README for the schema).
/// Applies transforms, trims all series to a common span of reference
/// periods, groups covariates by kappa (descending).
MixedPanel load_panel_from_manifest(const std::string& manifest_path);

}  // namespace mixfreq

#endif  // MIXFREQ_PANEL_HPP
