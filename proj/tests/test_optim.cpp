#include <doctest.h>

#include <cmath>
#include <set>

#include "mixfreq/optim.hpp"
#include "mixfreq/sobol.hpp"

using namespace mixfreq;

TEST_CASE("lbfgs minimizes a quadratic exactly") {
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2.0 * x;
        return x.squaredNorm();
    };
    Eigen::VectorXd x0(3);
    x0 << 4.0, -2.0, 1.0;
    const optim::OptimResult r = optim::lbfgs_minimize(fg, x0);
    CHECK(r.converged());
    CHECK(r.x.norm() < 1e-7);
}

TEST_CASE("lbfgs handles rosenbrock") {
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g.resize(2);
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const optim::OptimResult r = optim::lbfgs_minimize(fg, x0);
    CHECK(r.converged());
    CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-5);
}

TEST_CASE("pattern search respects bounds and improves") {
    auto f = [](const Eigen::VectorXd& x) {
        return (x[0] - 0.7) * (x[0] - 0.7) + (x[1] + 2.0) * (x[1] + 2.0);
    };
    Eigen::VectorXd x0(2), lo(2), hi(2);
    x0 << 0.1, 0.5;
    lo << 0.0, 0.0;
    hi << 1.0, 1.0;
    const optim::OptimResult r = optim::pattern_search(f, x0, lo, hi);
    CHECK(r.value <= f(x0));
    CHECK(std::abs(r.x[0] - 0.7) < 1e-4);
    CHECK(r.x[1] == 0.0);  // constrained optimum on the boundary
}

TEST_CASE("finite differences match an analytic gradient") {
    auto f = [](const Eigen::VectorXd& x) {
        return std::sin(x[0]) + x[1] * x[1] * x[0];
    };
    Eigen::VectorXd x(2);
    x << 0.3, -1.2;
    const Eigen::VectorXd g = optim::finite_difference_gradient(f, x, 1e-6);
    CHECK(std::abs(g[0] - (std::cos(0.3) + 1.44)) < 1e-6);
    CHECK(std::abs(g[1] - (2.0 * -1.2 * 0.3)) < 1e-6);
}

TEST_CASE("adam reaches a quadratic minimum") {
    auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2.0 * (x.array() - 3.0).matrix();
        return (x.array() - 3.0).square().sum();
    };
    optim::AdamOptions opt;
    opt.max_iterations = 2000;
    opt.learning_rate = 0.1;
    const optim::OptimResult r = optim::adam_minimize(fg, Eigen::VectorXd::Zero(4), opt);
    CHECK((r.x.array() - 3.0).abs().maxCoeff() < 1e-2);
}

namespace {

// GF(2) polynomial arithmetic on bit encodings, small degrees only.
int poly_degree(std::uint32_t p) {
    int d = -1;
    while (p) {
        p >>= 1;
        ++d;
    }
    return d;
}

std::uint32_t poly_mod(std::uint64_t a, std::uint32_t m) {
    const int dm = poly_degree(m);
    while (true) {
        int da = -1;
        for (int b = 63; b >= 0; --b)
            if (a >> b & 1ULL) {
                da = b;
                break;
            }
        if (da < dm) return static_cast<std::uint32_t>(a);
        a ^= static_cast<std::uint64_t>(m) << (da - dm);
    }
}

std::uint32_t poly_mulmod(std::uint32_t a, std::uint32_t b, std::uint32_t m) {
    std::uint64_t acc = 0;
    for (int i = 0; i <= poly_degree(b); ++i)
        if (b >> i & 1u) acc ^= static_cast<std::uint64_t>(a) << i;
    return poly_mod(acc, m);
}

bool is_irreducible(std::uint32_t p) {
    const int d = poly_degree(p);
    for (std::uint32_t q = 2; poly_degree(q) <= d / 2; ++q) {
        if (poly_degree(q) < 1) continue;
        // trial division: q divides p iff p mod q == 0
        if (poly_mod(p, q) == 0) return false;
    }
    return true;
}

int order_of_x(std::uint32_t p) {
    const int d = poly_degree(p);
    std::uint32_t acc = poly_mod(2, p);  // x^1
    for (int k = 1; k <= (1 << d); ++k) {
        if (acc == 1) return k;
        acc = poly_mulmod(acc, 2, p);
    }
    return -1;
}

}  // namespace

TEST_CASE("sobol polynomial table is primitive over GF(2)") {
    std::set<std::uint32_t> seen;
    for (std::uint32_t p : SobolSequence::polynomial_table()) {
        CAPTURE(p);
        CHECK(seen.insert(p).second);  // distinct across dimensions
        CHECK(is_irreducible(p));
        const int d = poly_degree(p);
        CHECK(order_of_x(p) == (1 << d) - 1);  // x generates the full multiplicative group
    }
}

TEST_CASE("sobol projections are dyadically stratified") {
    const int dim = 8;
    SobolSequence seq(dim);
    const Eigen::MatrixXd pts = seq.points(256);

    // every 1-D projection: each of the 16 dyadic bins holds exactly 16 of
    // the first 256 points ((0,1)-sequence property in base 2)
    for (int d = 0; d < dim; ++d) {
        std::vector<int> bins(16, 0);
        for (int i = 0; i < 256; ++i) {
            CHECK(pts(i, d) >= 0.0);
            CHECK(pts(i, d) < 1.0);
            ++bins[static_cast<int>(pts(i, d) * 16)];
        }
        for (int b = 0; b < 16; ++b) CHECK(bins[b] == 16);
    }

    // pairwise balance at 4x4 resolution over 256 points
    for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b) {
            std::vector<int> boxes(16, 0);
            for (int i = 0; i < 256; ++i)
                ++boxes[4 * static_cast<int>(pts(i, a) * 4) + static_cast<int>(pts(i, b) * 4)];
            for (int box : boxes) CHECK(box == 16);
        }
}

TEST_CASE("sobol sequence is deterministic and starts at the origin") {
    SobolSequence a(5), b(5);
    CHECK(a.next() == b.next());
    CHECK(a.next() == b.next());
    SobolSequence c(5);
    CHECK(c.next().norm() == 0.0);
}

TEST_CASE("stratified fallback covers every stratum") {
    const Eigen::MatrixXd pts = stratified_uniform_points(3, 16, 9);
    for (int d = 0; d < 3; ++d) {
        std::vector<int> bins(16, 0);
        for (int i = 0; i < 16; ++i) ++bins[static_cast<int>(pts(i, d) * 16)];
        for (int b = 0; b < 16; ++b) CHECK(bins[b] == 1);
    }
}
