#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mixfreq/csv.hpp"
#include "mixfreq/panel.hpp"

using namespace mixfreq;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

MixedPanel small_panel() {
    Eigen::VectorXd y(4);
    y << 1.0, 2.0, 3.0, 4.0;
    SeriesGroup monthly;
    monthly.kappa = Frequency{3};
    monthly.data.resize(12, 1);
    for (int i = 0; i < 12; ++i) monthly.data(i, 0) = i + 1.0;
    monthly.names = {"m0"};
    return MixedPanel(y, {monthly});
}

}  // namespace

TEST_CASE("csv parsing honors RFC 4180 quoting") {
    const CsvTable t = parse_csv("date,a,b\n2000,\"1,5\",2\n2001,\"say \"\"hi\"\"\",3\n");
    REQUIRE(t.header.size() == 3);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "1,5");
    CHECK(t.rows[1][1] == "say \"hi\"");
}

TEST_CASE("load_csv reads one series in index order") {
    const std::string path = write_temp("mixfreq_series.csv", "date,x\n2000,1\n2001,2\n2002,3\n");
    const RawSeries s = load_csv(path, "x", Frequency{1}, 1);
    REQUIRE(s.values.size() == 3);
    CHECK(*s.values[0] == 1.0);
    CHECK(*s.values[2] == 3.0);
}

TEST_CASE("load_csv reports blank, malformed and duplicate cells") {
    const std::string blank = write_temp("mixfreq_blank.csv", "date,x\n2000,1\n2001,\n2002,3\n");
    const RawSeries s = load_csv(blank, "x", Frequency{1}, 1);
    CHECK(!s.values[1].has_value());

    const std::string bad = write_temp("mixfreq_bad.csv", "date,x\n2000,1\n2001,oops\n");
    CHECK_THROWS_WITH_AS(load_csv(bad, "x", Frequency{1}, 1),
                         doctest::Contains("row 2"), std::runtime_error);

    const std::string dup = write_temp("mixfreq_dup.csv", "date,x\n2000,1\n2000,2\n");
    CHECK_THROWS_WITH_AS(load_csv(dup, "x", Frequency{1}, 1),
                         doctest::Contains("duplicate"), std::runtime_error);
}

TEST_CASE("transform codes") {
    Eigen::VectorXd x(3);
    x << 1.0, 3.0, 6.0;
    const Eigen::VectorXd d = apply_transform(x, 2);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == 2.0);
    CHECK(d[1] == 3.0);

    Eigen::VectorXd expo(3);
    expo << 1.0, std::exp(1.0), std::exp(2.0);
    const Eigen::VectorXd dl = apply_transform(expo, 5);
    CHECK(dl[0] == doctest::Approx(1.0));
    CHECK(dl[1] == doctest::Approx(1.0));

    Eigen::VectorXd pc(2);
    pc << 2.0, 3.0;
    CHECK(apply_transform(pc, 7)[0] == doctest::Approx(0.5));

    Eigen::VectorXd neg(2);
    neg << 1.0, -2.0;
    CHECK_THROWS_AS(apply_transform(neg, 4), std::domain_error);
    CHECK_THROWS_AS(apply_transform(Eigen::VectorXd::Zero(3), 7), std::domain_error);
}

TEST_CASE("code 3 equals code 2 twice; code 6 equals diff-diff of log") {
    Eigen::VectorXd x(6);
    x << 2.0, 3.0, 5.0, 8.0, 13.0, 21.0;
    CHECK(apply_transform(x, 3).isApprox(apply_transform(apply_transform(x, 2), 2)));
    CHECK(apply_transform(x, 6).isApprox(
        apply_transform(apply_transform(apply_transform(x, 4), 2), 2)));
}

TEST_CASE("trailing-5 missing fill") {
    std::vector<std::optional<double>> v = {1.0, 2.0, 3.0, 4.0, 5.0, std::nullopt, 7.0};
    const auto filled = fill_missing_trailing5(v);
    CHECK(*filled[5] == doctest::Approx(3.0));  // mean of 1..5
    std::vector<std::optional<double>> lead = {std::nullopt, 2.0};
    CHECK(!fill_missing_trailing5(lead)[0].has_value());
}

TEST_CASE("fixed-grid interpolation fills leading slots from the previous anchor") {
    SUBCASE("full block unchanged") {
        Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(24, 1.0, 24.0);
        const Eigen::VectorXd out = interpolate_to_fixed_grid(x, {24}, 24);
        CHECK(out.isApprox(x));
    }
    SUBCASE("two raw values after an anchor of zero") {
        Eigen::VectorXd x(6);
        x << 0.0, 0.0, 0.0, 0.0, 2.0, 4.0;  // anchor block then short block
        const Eigen::VectorXd out = interpolate_to_fixed_grid(x, {4, 2}, 4);
        REQUIRE(out.size() == 8);
        CHECK(out[4] == doctest::Approx(2.0 / 3.0));
        CHECK(out[5] == doctest::Approx(4.0 / 3.0));
        CHECK(out[6] == doctest::Approx(2.0));
        CHECK(out[7] == doctest::Approx(4.0));
    }
    SUBCASE("long block keeps the most recent values") {
        Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(26, 1.0, 26.0);
        const Eigen::VectorXd out = interpolate_to_fixed_grid(x, {26}, 24);
        REQUIRE(out.size() == 24);
        CHECK(out[0] == 3.0);
        CHECK(out[23] == 26.0);
    }
    SUBCASE("output length is always blocks x per_period") {
        Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, 1.0, 10.0);
        CHECK(interpolate_to_fixed_grid(x, {3, 4, 3}, 5).size() == 15);
    }
    SUBCASE("empty block with no anchor fails") {
        Eigen::VectorXd x(2);
        x << 1.0, 2.0;
        CHECK_THROWS_AS(interpolate_to_fixed_grid(x, {0, 2}, 4), std::runtime_error);
    }
}

TEST_CASE("block averaging") {
    Eigen::VectorXd x(6);
    x << 1, 2, 3, 4, 5, 6;
    const Eigen::VectorXd out = average_blocks(x, 6);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(3.5));

    CHECK(average_blocks(Eigen::VectorXd::Constant(12, 3.3), 6).isApproxToConstant(3.3));
    CHECK_THROWS_AS(average_blocks(Eigen::VectorXd::Zero(7), 6), std::invalid_argument);

    // block means survive the expand-average round trip
    Eigen::VectorXd arbitrary(12);
    arbitrary << 3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8;
    const Eigen::VectorXd means = average_blocks(arbitrary, 4);
    Eigen::VectorXd expanded(12);
    for (int i = 0; i < 12; ++i) expanded[i] = means[i / 4];
    CHECK(average_blocks(expanded, 4).isApprox(means));
}

TEST_CASE("standardize records and inverts the normalization") {
    const MixedPanel panel = small_panel();
    const MixedPanel std_panel = standardize(panel, 0, 4);
    REQUIRE(std_panel.normalization());

    // z-scores with population std
    CHECK(std_panel.target()[0] ==
          doctest::Approx((1.0 - 2.5) / std::sqrt(1.25)));

    // the canonical three-point series maps to +-1.2247 around zero
    Eigen::VectorXd three(3);
    three << 1.0, 2.0, 3.0;
    SeriesGroup g3;
    g3.kappa = Frequency{1};
    g3.data = three;
    g3.names = {"z"};
    const MixedPanel p3(three, {g3});
    const MixedPanel s3 = standardize(p3, 0, 3);
    CHECK(s3.target()[0] == doctest::Approx(-1.224744871).epsilon(1e-8));
    CHECK(s3.target()[1] == doctest::Approx(0.0));
    CHECK(s3.target()[2] == doctest::Approx(1.224744871).epsilon(1e-8));

    // round trip through the recorded statistics
    for (int t = 0; t < 4; ++t)
        CHECK(inverse_standardize_target(std_panel, std_panel.target()[t]) ==
              doctest::Approx(panel.target()[t]));

    const MixedPanel again = apply_normalization(panel, *std_panel.normalization());
    CHECK(again.target().isApprox(std_panel.target()));
    CHECK(again.group(0).data.isApprox(std_panel.group(0).data));
}

TEST_CASE("standardize rejects constant series naming them") {
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    SeriesGroup g;
    g.kappa = Frequency{1};
    g.data = Eigen::MatrixXd::Constant(3, 1, 7.0);
    g.names = {"flat"};
    const MixedPanel panel(y, {g});
    CHECK_THROWS_WITH_AS(standardize(panel, 0, 3), doctest::Contains("flat"), std::runtime_error);
}

TEST_CASE("panel binary serialization round trips bit-exactly") {
    const MixedPanel panel = small_panel();
    const std::string path =
        (std::filesystem::temp_directory_path() / "mixfreq_panel.bin").string();
    save_panel(panel, path);
    const MixedPanel loaded = load_panel(path);
    CHECK(loaded.periods() == panel.periods());
    CHECK((loaded.target().array() == panel.target().array()).all());
    CHECK((loaded.group(0).data.array() == panel.group(0).data.array()).all());
    CHECK(loaded.group(0).names == panel.group(0).names);
    std::remove(path.c_str());
}

TEST_CASE("manifest ingestion groups by frequency and trims to a common span") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mixfreq_manifest_test";
    fs::create_directories(dir);

    {
        std::ofstream q((dir / "q.csv").string());
        q << "date,gdp\n";
        for (int t = 0; t < 8; ++t) q << "t" << t << "," << 100 + t << "\n";
    }
    {
        std::ofstream m((dir / "m.csv").string());
        m << "date,emp\n";
        for (int i = 0; i < 24; ++i) m << "t" << (i < 10 ? "0" : "") << i << "," << 50 + i << "\n";
    }
    {
        std::ofstream man((dir / "manifest.json").string());
        man << R"({"version": 1,
                   "target": {"file": "q.csv", "column": "gdp", "kappa": 1, "transform": 2},
                   "series": [{"file": "m.csv", "column": "emp", "kappa": 3, "transform": 1}]})";
    }

    const MixedPanel panel = load_panel_from_manifest((dir / "manifest.json").string());
    CHECK(panel.periods() == 7);  // differencing the target drops one period
    CHECK(panel.n_groups() == 1);
    CHECK(panel.group(0).kappa.kappa == 3);
    CHECK(panel.group(0).data.rows() == 21);
    // most recent 7 periods kept: monthly values 53..73 onward
    CHECK(panel.group(0).data(0, 0) == 53.0);
    CHECK(panel.target()[0] == 1.0);
    fs::remove_all(dir);
}

TEST_CASE("mixed panel slicing keeps group alignment") {
    const MixedPanel panel = small_panel();
    const MixedPanel s = panel.slice(1, 3);
    CHECK(s.periods() == 2);
    CHECK(s.target()[0] == 2.0);
    CHECK(s.group(0).data(0, 0) == 4.0);  // first monthly row of period 1
    CHECK(s.value(0, 1, 2, 0) == 9.0);
}
