#ifndef MIXFREQ_SCHEDULE_HPP
#define MIXFREQ_SCHEDULE_HPP

#include <string>

namespace mixfreq {

enum class StepKind { Nowcast, LowFrequency, HighFrequency };

std::string to_string(StepKind kind);

/// Decomposition of a multicast step l >= 1 at frequency kappa:
/// h = ceil(l / kappa), ell = l mod kappa, m = h - floor(l / kappa).
/// Steps with 0 < l <= kappa - 1 are nowcasts; l divisible by kappa is a
/// low-frequency forecast; everything else is a high-frequency forecast
/// (ell = 0 never occurs there, it is absorbed into the low-frequency case).
struct StepClass {
    StepKind kind = StepKind::LowFrequency;
    int h = 1;
    int ell = 0;
    int m = 0;
};

StepClass classify_step(int l, int kappa);

}  // namespace mixfreq

#endif  // MIXFREQ_SCHEDULE_HPP
