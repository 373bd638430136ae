#include "mixfreq/windows.hpp"

#include <stdexcept>

namespace mixfreq {

WindowKind window_kind_from_string(const std::string& name) {
    if (name == "fixed") return WindowKind::Fixed;
    if (name == "expanding") return WindowKind::Expanding;
    if (name == "rolling") return WindowKind::Rolling;
    throw std::invalid_argument("unknown window scheme '" + name +
                                "' (expected fixed, expanding or rolling)");
}

std::string to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::Fixed: return "fixed";
        case WindowKind::Expanding: return "expanding";
        case WindowKind::Rolling: return "rolling";
    }
    return "?";
}

void WindowScheme::validate(int total_periods) const {
    if (start < 0) throw std::invalid_argument("WindowScheme: start must be >= 0");
    if (initial_fit < 3) throw std::invalid_argument("WindowScheme: initial_fit must be >= 3");
    if (test_periods < 1) throw std::invalid_argument("WindowScheme: test_periods must be >= 1");
    if (step < 1) throw std::invalid_argument("WindowScheme: step must be >= 1");
    if (start + initial_fit + test_periods > total_periods)
        throw std::invalid_argument(
            "WindowScheme: start plus fit span plus test span exceeds the panel (" +
            std::to_string(start + initial_fit + test_periods) + " > " +
            std::to_string(total_periods) + ")");
}

std::vector<EstimationWindow> window_layout(const WindowScheme& scheme, int total_periods) {
    scheme.validate(total_periods);
    std::vector<EstimationWindow> windows;
    const int first_origin = scheme.start + scheme.initial_fit - 1;

    if (scheme.kind == WindowKind::Fixed) {
        EstimationWindow w;
        w.fit_begin = scheme.start;
        w.fit_end = scheme.start + scheme.initial_fit;
        for (int o = first_origin; o < first_origin + scheme.test_periods; ++o)
            w.origins.push_back(o);
        windows.push_back(std::move(w));
        return windows;
    }

    for (int shift = 0; shift < scheme.test_periods; shift += scheme.step) {
        EstimationWindow w;
        w.fit_begin = scheme.kind == WindowKind::Expanding ? scheme.start : scheme.start + shift;
        w.fit_end = scheme.start + scheme.initial_fit + shift;
        const int last_shift = std::min(shift + scheme.step, scheme.test_periods);
        for (int o = first_origin + shift; o < first_origin + last_shift; ++o)
            w.origins.push_back(o);
        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace mixfreq
