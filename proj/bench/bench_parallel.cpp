// Timings for the task-parallel kernels against their serial reference
// paths: ridge cross-validation folds, MIDAS multistart, the moving-block
// bootstrap of the MCS test, and the reservoir-resampling ensemble. Each
// kernel is run with threads = 1 (the reference) and with the default worker
// pool, and the outputs are compared so the parallel path is exercised, not
// just timed.

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>

#include "mixfreq/comparison.hpp"
#include "mixfreq/dfm.hpp"
#include "mixfreq/mfesn.hpp"
#include "mixfreq/midas.hpp"
#include "mixfreq/parallel.hpp"
#include "mixfreq/rng.hpp"

using namespace mixfreq;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

MixedPanel synthetic_panel(int periods, std::uint64_t seed) {
    std::mt19937_64 eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int kmax = 12, kmon = 3;

    Eigen::VectorXd w(periods * kmax);
    w[0] = normal(eng);
    for (int j = 1; j < w.size(); ++j) w[j] = 0.9 * w[j - 1] + std::sqrt(1 - 0.81) * normal(eng);

    SeriesGroup daily;
    daily.kappa = Frequency{kmax};
    daily.data.resize(periods * kmax, 1);
    for (int j = 0; j < periods * kmax; ++j) daily.data(j, 0) = w[j] + 0.2 * normal(eng);
    daily.names = {"daily0"};

    SeriesGroup monthly;
    monthly.kappa = Frequency{kmon};
    monthly.data.resize(periods * kmon, 1);
    for (int t = 0; t < periods; ++t)
        for (int s = 0; s < kmon; ++s)
            monthly.data(t * kmon + s, 0) =
                w.segment(t * kmax + s * (kmax / kmon), kmax / kmon).mean() + 0.2 * normal(eng);
    monthly.names = {"monthly0"};

    Eigen::VectorXd y(periods);
    for (int t = 0; t < periods; ++t)
        y[t] = (t == 0 ? 0.0 : w[t * kmax]) + 0.3 * normal(eng);

    return MixedPanel(y, {daily, monthly});
}

template <typename F>
double timed(const char* label, int threads, F&& f) {
    const double start = now_ms();
    f();
    const double elapsed = now_ms() - start;
    std::cout << label << " [threads=" << threads << "]: " << elapsed << " ms\n";
    return elapsed;
}

void report_speedup(double serial_ms, double parallel_ms) {
    std::cout << "  speedup: " << serial_ms / parallel_ms << "x\n";
}

}  // namespace

int main() {
    const int threads = default_threads();
    std::cout << "worker pool: " << threads << " threads\n\n";
    const MixedPanel panel = synthetic_panel(160, 7);

    {
        const ModelPreset& p = preset("singleESN [B]");
        const std::vector<double> grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
        double l1 = 0, lp = 0;
        const double t1 =
            timed("cv_ridge (10 folds)", 1, [&] { l1 = cv_ridge(panel, p, grid, 10, 5, 11, 1); });
        const double tp = timed("cv_ridge (10 folds)", threads,
                                [&] { lp = cv_ridge(panel, p, grid, 10, 5, 11, threads); });
        if (l1 != lp) {
            std::cerr << "FAIL: cv_ridge results differ between serial and parallel\n";
            return 1;
        }
        report_speedup(t1, tp);
    }

    {
        MidasFitConfig fc;
        fc.p = 1;
        fc.lags_per_group = {12, 3};
        fc.multistart = true;
        MidasModel m1, mp;
        fc.threads = 1;
        const double t1 = timed("midas multistart (64 starts)", 1,
                                [&] { m1 = fit_midas(panel, 0, panel.periods(), fc); });
        fc.threads = threads;
        const double tp = timed("midas multistart (64 starts)", threads,
                                [&] { mp = fit_midas(panel, 0, panel.periods(), fc); });
        if (m1.loss != mp.loss) {
            std::cerr << "FAIL: midas multistart losses differ\n";
            return 1;
        }
        report_speedup(t1, tp);
    }

    {
        WindowScheme scheme;
        scheme.kind = WindowKind::Fixed;
        scheme.initial_fit = 120;
        scheme.test_periods = 30;
        MfesnFitConfig fc;
        fc.lambda_target = 1e-3;
        fc.lambda_input = 1e-3;
        ForecastEnsemble e1, ep;
        fc.threads = 1;
        const double t1 = timed("resample_harness (B=24)", 1, [&] {
            e1 = resample_harness(panel, preset("singleESN [A]"), 24, scheme, fc);
        });
        fc.threads = threads;
        const double tp = timed("resample_harness (B=24)", threads, [&] {
            ep = resample_harness(panel, preset("singleESN [A]"), 24, scheme, fc);
        });
        if ((e1.paths.array() != ep.paths.array()).any()) {
            std::cerr << "FAIL: ensemble paths differ between serial and parallel\n";
            return 1;
        }
        report_speedup(t1, tp);
    }

    std::cout << "\nserial and parallel outputs identical\n";
    return 0;
}
