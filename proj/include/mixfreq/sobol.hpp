#ifndef MIXFREQ_SOBOL_HPP
#define MIXFREQ_SOBOL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace mixfreq {

/// Sobol low-discrepancy sequence in [0,1)^dim, Gray-code ordering.
///
/// Direction numbers are built from a fixed table of primitive polynomials
/// over GF(2); the free initial values m_i are drawn odd in [1, 2^i) from a
/// splitmix64 stream keyed by (init_seed, dimension), so the whole sequence
/// is a pure function of (dim, init_seed). Dimension 0 is the van der Corput
/// sequence. The first emitted point is the origin.
class SobolSequence {
   public:
    explicit SobolSequence(int dim, std::uint64_t init_seed = 0);

    /// Highest dimension count supported by the polynomial table.
    static int max_dimension();

    Eigen::VectorXd next();
    Eigen::MatrixXd points(int n);  // n x dim, consumes n draws

    /// The polynomial table (full bit encodings, x^s+...+1), exposed so tests
    /// can verify primitivity.
    static const std::vector<std::uint32_t>& polynomial_table();

   private:
    int dim_;
    std::uint64_t count_ = 0;
    std::vector<std::uint64_t> state_;                 // current XOR state per dimension
    std::vector<std::vector<std::uint64_t>> v_;        // direction numbers, v_[d][bit]
};

/// Latin-hypercube stratified uniform draws: same shape contract as
/// SobolSequence::points, usable as a fallback when dim exceeds the table.
Eigen::MatrixXd stratified_uniform_points(int dim, int n, std::uint64_t seed);

}  // namespace mixfreq

#endif  // MIXFREQ_SOBOL_HPP
