#include "mixfreq/sobol.hpp"

#include <random>
#include <stdexcept>

#include "mixfreq/rng.hpp"

namespace mixfreq {

namespace {

constexpr int kBits = 52;  // enough resolution for doubles in [0,1)

// Primitive polynomials over GF(2), full bit encoding (degree 1 through 8).
// One polynomial per dimension after the van der Corput dimension.
const std::vector<std::uint32_t> kPolynomials = {
    3,                                  // degree 1
    7,                                  // degree 2
    11, 13,                             // degree 3
    19, 25,                             // degree 4
    37, 41, 47, 55, 59, 61,             // degree 5
    67, 91, 97, 103, 109, 115,          // degree 6
    131, 137, 143, 145, 157, 167,       // degree 7
    171, 185, 191, 193, 203, 211,
    213, 229, 239, 241, 247, 253,
    285, 299, 301, 333, 351, 355,       // degree 8
    357, 361, 391, 397, 425, 451,
    487, 501,
};

int degree_of(std::uint32_t poly) {
    int d = -1;
    while (poly) {
        poly >>= 1;
        ++d;
    }
    return d;
}

}  // namespace

const std::vector<std::uint32_t>& SobolSequence::polynomial_table() { return kPolynomials; }

int SobolSequence::max_dimension() { return static_cast<int>(kPolynomials.size()) + 1; }

SobolSequence::SobolSequence(int dim, std::uint64_t init_seed) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("SobolSequence: dim must be >= 1");
    if (dim > max_dimension())
        throw std::invalid_argument("SobolSequence: dim exceeds the direction-number table; "
                                    "use stratified_uniform_points instead");

    v_.assign(dim_, std::vector<std::uint64_t>(kBits));
    state_.assign(dim_, 0);

    // Dimension 0: van der Corput, m_i = 1.
    for (int b = 0; b < kBits; ++b) v_[0][b] = 1ULL << (kBits - 1 - b);

    for (int d = 1; d < dim_; ++d) {
        const std::uint32_t poly = kPolynomials[d - 1];
        const int s = degree_of(poly);

        std::mt19937_64 eng = make_engine(init_seed, static_cast<std::uint64_t>(d));
        std::vector<std::uint64_t> m(kBits);
        for (int i = 0; i < s && i < kBits; ++i) {
            // m_i odd, uniform in [1, 2^(i+1)).
            const std::uint64_t bound = 1ULL << (i + 1);
            std::uniform_int_distribution<std::uint64_t> dist(0, bound / 2 - 1);
            m[i] = 2 * dist(eng) + 1;
        }
        for (int i = s; i < kBits; ++i) {
            // Recurrence m_i = 2 a_1 m_{i-1} ^ ... ^ 2^{s-1} a_{s-1} m_{i-s+1}
            //                  ^ 2^s m_{i-s} ^ m_{i-s}.
            std::uint64_t mi = m[i - s] ^ (m[i - s] << s);
            for (int j = 1; j < s; ++j) {
                const std::uint32_t a_j = (poly >> (s - j)) & 1u;
                if (a_j) mi ^= m[i - j] << j;
            }
            m[i] = mi;
        }
        for (int b = 0; b < kBits; ++b) v_[d][b] = m[b] << (kBits - 1 - b);
    }
}

Eigen::VectorXd SobolSequence::next() {
    Eigen::VectorXd point(dim_);
    const double scale = 1.0 / static_cast<double>(1ULL << kBits);
    for (int d = 0; d < dim_; ++d) point[d] = static_cast<double>(state_[d]) * scale;

    // Gray-code update: flip the direction number of the lowest zero bit.
    std::uint64_t c = count_++;
    int bit = 0;
    while (c & 1ULL) {
        c >>= 1;
        ++bit;
    }
    for (int d = 0; d < dim_; ++d) state_[d] ^= v_[d][bit];
    return point;
}

Eigen::MatrixXd SobolSequence::points(int n) {
    Eigen::MatrixXd out(n, dim_);
    for (int i = 0; i < n; ++i) out.row(i) = next().transpose();
    return out;
}

Eigen::MatrixXd stratified_uniform_points(int dim, int n, std::uint64_t seed) {
    Eigen::MatrixXd out(n, dim);
    for (int d = 0; d < dim; ++d) {
        std::mt19937_64 eng = make_engine(seed, static_cast<std::uint64_t>(d));
        std::vector<int> strata(n);
        for (int i = 0; i < n; ++i) strata[i] = i;
        std::shuffle(strata.begin(), strata.end(), eng);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int i = 0; i < n; ++i) out(i, d) = (strata[i] + unif(eng)) / n;
    }
    return out;
}

}  // namespace mixfreq
