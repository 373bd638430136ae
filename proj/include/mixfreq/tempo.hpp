#ifndef MIXFREQ_TEMPO_HPP
#define MIXFREQ_TEMPO_HPP

#include <cstdint>
#include <stdexcept>

namespace mixfreq {

/// Sub-periods per reference period (e.g. 3 for monthly data under a
/// quarterly reference, 72 for 24-day months over a quarter).
struct Frequency {
    std::int64_t kappa = 1;

    constexpr explicit Frequency(std::int64_t k) : kappa(k) {
        if (k < 1) throw std::invalid_argument("Frequency: kappa must be >= 1");
    }
    constexpr Frequency() = default;

    friend constexpr bool operator==(Frequency a, Frequency b) { return a.kappa == b.kappa; }
};

/// Coordinate (t, s) on a mixed-frequency time axis: reference period t,
/// sub-period offset s at frequency kappa. Canonical form has 0 <= s < kappa;
/// non-canonical offsets are meaningful and resolved by canonicalize().
struct TempoIndex {
    std::int64_t t = 0;
    std::int64_t s = 0;
    Frequency kappa{1};

    friend constexpr bool operator==(const TempoIndex& a, const TempoIndex& b) {
        return a.t == b.t && a.s == b.s && a.kappa == b.kappa;
    }
};

/// Ratio q_l = kappa_max / kappa_l between the finest panel frequency and a
/// coarser one. The division must be exact.
struct FrequencyRatio {
    std::int64_t q = 1;

    constexpr FrequencyRatio(Frequency fine, Frequency coarse) : q(fine.kappa / coarse.kappa) {
        if (coarse.kappa < 1 || fine.kappa % coarse.kappa != 0)
            throw std::invalid_argument("FrequencyRatio: kappa_max must be an exact multiple of kappa_l");
    }
    constexpr explicit FrequencyRatio(std::int64_t ratio) : q(ratio) {
        if (ratio < 1) throw std::invalid_argument("FrequencyRatio: ratio must be >= 1");
    }
};

namespace detail {
// Floor division, exact for negative numerators.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}
}  // namespace detail

/// Unique representative with 0 <= s < kappa. Carrying the whole (t, s) pair
/// through Euclidean division composes the identification rules
/// (t, <kappa>) == (t+1, <0>) and the negative-offset rule in one step, and
/// is idempotent.
constexpr TempoIndex canonicalize(const TempoIndex& idx) {
    const std::int64_t k = idx.kappa.kappa;
    const std::int64_t carry = detail::floor_div(idx.s, k);
    return TempoIndex{idx.t + carry, idx.s - carry * k, idx.kappa};
}

constexpr bool is_canonical(const TempoIndex& idx) {
    return idx.s >= 0 && idx.s < idx.kappa.kappa;
}

/// Advance by delta sub-periods (delta may be negative); result is canonical.
/// shift(shift(i, a), b) == shift(i, a + b).
constexpr TempoIndex shift(const TempoIndex& idx, std::int64_t delta) {
    return canonicalize(TempoIndex{idx.t, idx.s + delta, idx.kappa});
}

/// Most recent coarse-frequency sub-period at or before a fine index:
/// (t, <s>) at kappa_max maps to (t, <floor(s / q)>) at kappa_max / q.
constexpr TempoIndex project_to_coarse(const TempoIndex& idx, FrequencyRatio ratio) {
    if (!is_canonical(idx)) throw std::invalid_argument("project_to_coarse: index must be canonical");
    if (idx.kappa.kappa % ratio.q != 0)
        throw std::invalid_argument("project_to_coarse: ratio does not divide kappa");
    return TempoIndex{idx.t, idx.s / ratio.q, Frequency{idx.kappa.kappa / ratio.q}};
}

/// Position on the flat fine-step timeline, t * kappa + s. Canonicalizes
/// first, so out-of-range offsets are valid inputs.
constexpr std::int64_t flat_index(const TempoIndex& idx) {
    const TempoIndex c = canonicalize(idx);
    return c.t * c.kappa.kappa + c.s;
}

constexpr TempoIndex from_flat(std::int64_t flat, Frequency kappa) {
    const std::int64_t t = detail::floor_div(flat, kappa.kappa);
    return TempoIndex{t, flat - t * kappa.kappa, kappa};
}

}  // namespace mixfreq

#endif  // MIXFREQ_TEMPO_HPP
