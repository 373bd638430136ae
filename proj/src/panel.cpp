#include "mixfreq/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "mixfreq/csv.hpp"
#include "mixfreq/garch.hpp"

namespace mixfreq {

RawSeries load_csv(const std::string& path, const std::string& column, Frequency kappa,
                   int transform_code) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 2)
        throw std::runtime_error("load_csv: '" + path + "' needs an index column and a value column");

    const int col = table.column_index(column);
    if (col < 0) throw std::runtime_error("load_csv: no column '" + column + "' in '" + path + "'");
    if (col == 0) throw std::runtime_error("load_csv: column 0 of '" + path + "' is the index key");

    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& key = table.rows[r][0];
        if (!seen.insert(key).second)
            throw std::runtime_error("load_csv: '" + path + "' row " + std::to_string(r + 1) +
                                     ": duplicate index '" + key + "'");
        if (r > 0 && !(table.rows[r - 1][0] < key))
            throw std::runtime_error("load_csv: '" + path + "' row " + std::to_string(r + 1) +
                                     ": index not increasing at '" + key + "'");
    }

    RawSeries series;
    series.name = column;
    series.kappa = kappa;
    series.transform_code = transform_code;
    series.values = numeric_column(table, col, path);
    return series;
}

int transform_shortening(int code) {
    switch (code) {
        case 1: case 4: case 8: return 0;
        case 2: case 5: case 7: return 1;
        case 3: case 6: return 2;
        default: throw std::invalid_argument("transform code must be in 1..8");
    }
}

namespace {

Eigen::VectorXd diff(const Eigen::VectorXd& x) {
    return x.tail(x.size() - 1) - x.head(x.size() - 1);
}

Eigen::VectorXd log_checked(const Eigen::VectorXd& x, const std::string& name) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0))
            throw std::domain_error("apply_transform: log of nonpositive value at index " +
                                    std::to_string(i) + (name.empty() ? "" : " in series " + name));
    return x.array().log();
}

}  // namespace

Eigen::VectorXd apply_transform(const Eigen::VectorXd& x, int code, const std::string& name) {
    switch (code) {
        case 1:
            return x;
        case 2:
            return diff(x);
        case 3:
            return diff(diff(x));
        case 4:
            return log_checked(x, name);
        case 5:
            return diff(log_checked(x, name));
        case 6:
            return diff(diff(log_checked(x, name)));
        case 7: {
            Eigen::VectorXd out(x.size() - 1);
            for (Eigen::Index i = 1; i < x.size(); ++i) {
                if (x[i - 1] == 0.0)
                    throw std::domain_error(
                        "apply_transform: percentage change over zero at index " +
                        std::to_string(i - 1) + (name.empty() ? "" : " in series " + name));
                out[i - 1] = (x[i] - x[i - 1]) / x[i - 1];
            }
            return out;
        }
        case 8:
            return fit_garch11(x).volatility;
        default:
            throw std::invalid_argument("apply_transform: transform code must be in 1..8");
    }
}

Eigen::VectorXd apply_transform(const RawSeries& series) {
    Eigen::VectorXd x(series.values.size());
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (!series.values[i])
            throw std::invalid_argument("apply_transform: series " + series.name +
                                        " has a missing value at index " + std::to_string(i) +
                                        "; fill before transforming");
        x[static_cast<Eigen::Index>(i)] = *series.values[i];
    }
    return apply_transform(x, series.transform_code, series.name);
}

std::vector<std::optional<double>> fill_missing_trailing5(
    const std::vector<std::optional<double>>& values) {
    std::vector<std::optional<double>> out = values;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i]) continue;
        double sum = 0.0;
        int count = 0;
        for (std::size_t back = 1; back <= 5 && back <= i; ++back) {
            if (out[i - back]) {
                sum += *out[i - back];
                ++count;
            }
        }
        if (count > 0) out[i] = sum / count;
    }
    return out;
}

Eigen::VectorXd interpolate_to_fixed_grid(const Eigen::VectorXd& values,
                                          const std::vector<int>& block_sizes, int per_period) {
    if (per_period < 1) throw std::invalid_argument("interpolate_to_fixed_grid: per_period >= 1");
    std::int64_t total = 0;
    for (int b : block_sizes) total += b;
    if (total != values.size())
        throw std::invalid_argument("interpolate_to_fixed_grid: block sizes do not sum to length");

    Eigen::VectorXd out(static_cast<Eigen::Index>(block_sizes.size()) * per_period);
    std::optional<double> anchor;
    Eigen::Index in_pos = 0, out_pos = 0;
    for (std::size_t blk = 0; blk < block_sizes.size(); ++blk) {
        const int raw = block_sizes[blk];
        if (raw == 0 && !anchor)
            throw std::runtime_error("interpolate_to_fixed_grid: empty block " +
                                     std::to_string(blk) + " with no previous anchor");
        if (raw >= per_period) {
            // keep the most recent per_period values
            out.segment(out_pos, per_period) =
                values.segment(in_pos + raw - per_period, per_period);
        } else {
            const int missing = per_period - raw;
            const double first_raw = raw > 0 ? values[in_pos] : *anchor;
            const double start = anchor ? *anchor : first_raw;
            // missing leading slots, linear between the anchor and the first raw value
            for (int m = 0; m < missing; ++m)
                out[out_pos + m] = start + (first_raw - start) * (m + 1) / (missing + 1);
            if (raw > 0) out.segment(out_pos + missing, raw) = values.segment(in_pos, raw);
            if (raw == 0)
                for (int m = 0; m < per_period; ++m) out[out_pos + m] = *anchor;
        }
        anchor = out[out_pos + per_period - 1];
        in_pos += raw;
        out_pos += per_period;
    }
    return out;
}

Eigen::VectorXd average_blocks(const Eigen::VectorXd& values, int block) {
    if (block < 1) throw std::invalid_argument("average_blocks: block >= 1");
    if (values.size() % block != 0)
        throw std::invalid_argument("average_blocks: length " + std::to_string(values.size()) +
                                    " not divisible by block " + std::to_string(block));
    const Eigen::Index m = values.size() / block;
    Eigen::VectorXd out(m);
    for (Eigen::Index i = 0; i < m; ++i) out[i] = values.segment(i * block, block).mean();
    return out;
}

MixedPanel::MixedPanel(Eigen::VectorXd target, std::vector<SeriesGroup> groups)
    : target_(std::move(target)), groups_(std::move(groups)) {
    if (target_.size() < 2) throw std::invalid_argument("MixedPanel: target length must be >= 2");
    std::stable_sort(groups_.begin(), groups_.end(),
                     [](const SeriesGroup& a, const SeriesGroup& b) {
                         return a.kappa.kappa > b.kappa.kappa;
                     });
    if (groups_.empty()) throw std::invalid_argument("MixedPanel: need at least one group");
    kappa_max_ = groups_.front().kappa;
    const int T = periods();
    for (const SeriesGroup& g : groups_) {
        if (kappa_max_.kappa % g.kappa.kappa != 0)
            throw std::invalid_argument("MixedPanel: kappa " + std::to_string(g.kappa.kappa) +
                                        " does not divide kappa_max " +
                                        std::to_string(kappa_max_.kappa));
        if (g.data.rows() != static_cast<Eigen::Index>(T) * g.kappa.kappa)
            throw std::invalid_argument(
                "MixedPanel: group at kappa " + std::to_string(g.kappa.kappa) + " has " +
                std::to_string(g.data.rows()) + " rows, expected " +
                std::to_string(static_cast<long long>(T) * g.kappa.kappa));
        if (g.data.cols() < 1) throw std::invalid_argument("MixedPanel: empty group");
    }
}

int MixedPanel::total_series() const {
    int n = 0;
    for (const SeriesGroup& g : groups_) n += g.n_series();
    return n;
}

double MixedPanel::value(int group, std::int64_t t, std::int64_t s, int series) const {
    const SeriesGroup& g = groups_[group];
    const std::int64_t row = t * g.kappa.kappa + s;
    if (row < 0 || row >= g.data.rows())
        throw std::out_of_range("MixedPanel::value: tempo index outside the panel span");
    return g.data(row, series);
}

MixedPanel MixedPanel::slice(int first, int last) const {
    if (first < 0 || last > periods() || first >= last)
        throw std::out_of_range("MixedPanel::slice: bad period range");
    std::vector<SeriesGroup> gs;
    gs.reserve(groups_.size());
    for (const SeriesGroup& g : groups_) {
        SeriesGroup out;
        out.kappa = g.kappa;
        out.names = g.names;
        out.data = g.data.middleRows(static_cast<Eigen::Index>(first) * g.kappa.kappa,
                                     static_cast<Eigen::Index>(last - first) * g.kappa.kappa);
        gs.push_back(std::move(out));
    }
    MixedPanel out(target_.segment(first, last - first), std::move(gs));
    out.normalization_ = normalization_;
    return out;
}

MixedPanel standardize(const MixedPanel& panel, int first, int last) {
    if (first < 0 || last > panel.periods() || first >= last)
        throw std::invalid_argument("standardize: empty or invalid window");

    PanelNormalization norm;
    auto moments = [](const Eigen::VectorXd& x, const std::string& name) {
        const double mean = x.mean();
        const double sd = std::sqrt((x.array() - mean).square().sum() / x.size());
        if (!(sd > 0.0))
            throw std::runtime_error("standardize: series '" + name + "' has zero variance "
                                     "over the window");
        return std::pair<double, double>(mean, sd);
    };

    std::tie(norm.target_mean, norm.target_std) =
        moments(panel.target().segment(first, last - first), "target");

    Eigen::VectorXd target = (panel.target().array() - norm.target_mean) / norm.target_std;

    std::vector<SeriesGroup> groups;
    groups.reserve(panel.n_groups());
    for (int l = 0; l < panel.n_groups(); ++l) {
        const SeriesGroup& g = panel.group(l);
        SeriesGroup out = g;
        Eigen::VectorXd mean(g.n_series()), sd(g.n_series());
        const Eigen::Index w0 = static_cast<Eigen::Index>(first) * g.kappa.kappa;
        const Eigen::Index wn = static_cast<Eigen::Index>(last - first) * g.kappa.kappa;
        for (int j = 0; j < g.n_series(); ++j) {
            const std::string nm = j < static_cast<int>(g.names.size()) ? g.names[j]
                                                                        : "group" + std::to_string(l);
            std::tie(mean[j], sd[j]) = moments(g.data.col(j).segment(w0, wn), nm);
            out.data.col(j) = (g.data.col(j).array() - mean[j]) / sd[j];
        }
        norm.group_mean.push_back(std::move(mean));
        norm.group_std.push_back(std::move(sd));
        groups.push_back(std::move(out));
    }

    MixedPanel out(std::move(target), std::move(groups));
    out.normalization_ = std::move(norm);
    return out;
}

MixedPanel apply_normalization(const MixedPanel& panel, const PanelNormalization& norm) {
    if (static_cast<int>(norm.group_mean.size()) != panel.n_groups())
        throw std::invalid_argument("apply_normalization: group count mismatch");
    Eigen::VectorXd target = (panel.target().array() - norm.target_mean) / norm.target_std;
    std::vector<SeriesGroup> groups;
    groups.reserve(panel.n_groups());
    for (int l = 0; l < panel.n_groups(); ++l) {
        const SeriesGroup& g = panel.group(l);
        if (norm.group_mean[l].size() != g.n_series())
            throw std::invalid_argument("apply_normalization: series count mismatch in group " +
                                        std::to_string(l));
        SeriesGroup out = g;
        for (int j = 0; j < g.n_series(); ++j)
            out.data.col(j) = (g.data.col(j).array() - norm.group_mean[l][j]) / norm.group_std[l][j];
        groups.push_back(std::move(out));
    }
    MixedPanel out(std::move(target), std::move(groups));
    out.normalization_ = norm;
    return out;
}

double inverse_standardize_target(const MixedPanel& panel, double value) {
    if (!panel.normalization()) return value;
    return value * panel.normalization()->target_std + panel.normalization()->target_mean;
}

namespace {

constexpr std::uint32_t kPanelMagic = 0x4d46504eu;  // "MFPN"
constexpr std::uint32_t kPanelVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("load_panel: truncated file");
    return v;
}
void write_string(std::ofstream& out, const std::string& s) {
    write_pod<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::ifstream& in) {
    const auto n = read_pod<std::uint64_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("load_panel: truncated file");
    return s;
}
void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * v.size()));
}
Eigen::VectorXd read_vector(std::ifstream& in) {
    const auto n = read_pod<std::uint64_t>(in);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
    if (!in) throw std::runtime_error("load_panel: truncated file");
    return v;
}

}  // namespace

void save_panel(const MixedPanel& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_panel: cannot open '" + path + "'");
    write_pod(out, kPanelMagic);
    write_pod(out, kPanelVersion);
    write_vector(out, panel.target());
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(panel.n_groups()));
    for (int l = 0; l < panel.n_groups(); ++l) {
        const SeriesGroup& g = panel.group(l);
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(g.kappa.kappa));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(g.n_series()));
        for (int j = 0; j < g.n_series(); ++j)
            write_string(out, j < static_cast<int>(g.names.size()) ? g.names[j] : "");
        for (int j = 0; j < g.n_series(); ++j) write_vector(out, g.data.col(j));
    }
    if (!out) throw std::runtime_error("save_panel: write failed for '" + path + "'");
}

MixedPanel load_panel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_panel: cannot open '" + path + "'");
    if (read_pod<std::uint32_t>(in) != kPanelMagic)
        throw std::runtime_error("load_panel: '" + path + "' is not a panel file");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kPanelVersion)
        throw std::runtime_error("load_panel: unsupported version " + std::to_string(version));
    Eigen::VectorXd target = read_vector(in);
    const auto n_groups = read_pod<std::uint32_t>(in);
    std::vector<SeriesGroup> groups;
    for (std::uint32_t l = 0; l < n_groups; ++l) {
        SeriesGroup g;
        g.kappa = Frequency{static_cast<std::int64_t>(read_pod<std::uint64_t>(in))};
        const auto n = read_pod<std::uint32_t>(in);
        for (std::uint32_t j = 0; j < n; ++j) g.names.push_back(read_string(in));
        std::vector<Eigen::VectorXd> cols;
        for (std::uint32_t j = 0; j < n; ++j) cols.push_back(read_vector(in));
        g.data.resize(cols.front().size(), n);
        for (std::uint32_t j = 0; j < n; ++j) g.data.col(j) = cols[j];
        groups.push_back(std::move(g));
    }
    return MixedPanel(std::move(target), std::move(groups));
}

MixedPanel load_panel_from_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("manifest: cannot open '" + manifest_path + "'");
    nlohmann::json doc = nlohmann::json::parse(in);

    if (doc.value("version", 1) != 1)
        throw std::runtime_error("manifest: unsupported version");

    const std::string base = manifest_path.find('/') != std::string::npos
                                 ? manifest_path.substr(0, manifest_path.find_last_of('/') + 1)
                                 : "";

    auto load_one = [&](const nlohmann::json& entry) {
        const std::string file = entry.at("file").get<std::string>();
        const std::string column = entry.at("column").get<std::string>();
        const Frequency kappa{entry.at("kappa").get<std::int64_t>()};
        const int code = entry.value("transform", 1);
        RawSeries raw = load_csv(base + file, column, kappa, code);
        raw.values = fill_missing_trailing5(raw.values);
        for (std::size_t i = 0; i < raw.values.size(); ++i)
            if (!raw.values[i])
                throw std::runtime_error("manifest: series '" + column +
                                         "' has an unfillable missing value at row " +
                                         std::to_string(i + 1));
        return std::pair<Frequency, Eigen::VectorXd>(kappa, apply_transform(raw));
    };

    auto [target_kappa, target] = load_one(doc.at("target"));
    if (target_kappa.kappa != 1)
        throw std::runtime_error("manifest: the target must be at the reference frequency "
                                 "(kappa = 1)");

    // Collect covariates grouped by kappa; track the usable span in reference
    // periods (transforms shorten series from the front).
    std::map<std::int64_t, std::vector<std::pair<std::string, Eigen::VectorXd>>> by_kappa;
    int usable_T = static_cast<int>(target.size());
    for (const auto& entry : doc.at("series")) {
        const std::string column = entry.at("column").get<std::string>();
        auto [kappa, values] = load_one(entry);
        usable_T = std::min(usable_T, static_cast<int>(values.size() / kappa.kappa));
        by_kappa[kappa.kappa].emplace_back(column, std::move(values));
    }
    if (usable_T < 2) throw std::runtime_error("manifest: fewer than 2 usable reference periods");

    // Keep the most recent usable_T periods everywhere.
    Eigen::VectorXd t = target.tail(usable_T);
    std::vector<SeriesGroup> groups;
    for (auto& [kappa, series_list] : by_kappa) {
        SeriesGroup g;
        g.kappa = Frequency{kappa};
        g.data.resize(static_cast<Eigen::Index>(usable_T) * kappa,
                      static_cast<Eigen::Index>(series_list.size()));
        for (std::size_t j = 0; j < series_list.size(); ++j) {
            g.names.push_back(series_list[j].first);
            const Eigen::VectorXd& v = series_list[j].second;
            g.data.col(static_cast<Eigen::Index>(j)) =
                v.tail(static_cast<Eigen::Index>(usable_T) * kappa);
        }
        groups.push_back(std::move(g));
    }
    return MixedPanel(std::move(t), std::move(groups));
}

}  // namespace mixfreq
