#ifndef MIXFREQ_WINDOWS_HPP
#define MIXFREQ_WINDOWS_HPP

#include <string>
#include <vector>

namespace mixfreq {

enum class WindowKind { Fixed, Expanding, Rolling };

WindowKind window_kind_from_string(const std::string& name);
std::string to_string(WindowKind kind);

/// Estimation window scheme over a panel of T reference periods. The first
/// fit window covers periods [start, start + initial_fit); periods before
/// `start` are presample, available only to the initial penalty selection.
/// Window w produces forecasts originating at start + initial_fit - 1 + w*step.
struct WindowScheme {
    WindowKind kind = WindowKind::Fixed;
    int start = 0;         // first period of the first fit window
    int initial_fit = 0;   // periods in the first fit window
    int test_periods = 0;  // forecast targets after the first window
    int step = 1;          // origins per window advance

    void validate(int total_periods) const;
};

/// One refit window: fit on [fit_begin, fit_end), forecast from the listed
/// origins (period indices; the h-step forecast targets origin + h).
struct EstimationWindow {
    int fit_begin = 0;
    int fit_end = 0;
    std::vector<int> origins;
};

/// Lay out the refit windows of a scheme over `total_periods` periods.
/// Fixed: one window, every test origin. Expanding: fit_begin stays 0 and
/// fit_end grows by `step`. Rolling: the window slides with constant length.
std::vector<EstimationWindow> window_layout(const WindowScheme& scheme, int total_periods);

}  // namespace mixfreq

#endif  // MIXFREQ_WINDOWS_HPP
