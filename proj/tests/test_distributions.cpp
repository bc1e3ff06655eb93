#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "arcstep/condition.hpp"
#include "arcstep/distributions.hpp"
#include "arcstep/rng.hpp"

using namespace arcstep;

namespace {

// Simpson rule on [a, b] with an odd number of points.
template <class F>
double simpson(F&& f, double a, double b, std::size_t points) {
    std::size_t n = points | 1;
    double h = (b - a) / static_cast<double>(n - 1);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i + 1 < n; ++i)
        acc += f(a + h * static_cast<double>(i)) * ((i % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// P(X <= x) for the arcsine law, integrated numerically. The substitution
// beta = m + u^2 removes the left-edge singularity, leaving a smooth
// integrand 2 / (pi * sqrt((M - m) - u^2)) for x strictly below M.
double arcsine_cdf_numeric(const ConditionClass& cls, double x) {
    double width = cls.M() - cls.m();
    auto f = [&](double u) { return 2.0 / (kPi * std::sqrt(width - u * u)); };
    return simpson(f, 0.0, std::sqrt(x - cls.m()), 20001);
}

} // namespace

TEST_SUITE("distributions") {

TEST_CASE("arcsine cdf matches the closed form and a numeric integral") {
    ConditionClass cls(1.0, 4.0);
    ArcsineDist dist(cls);

    // (3.25 - 2.5) / 1.5 = 0.5, acos(0.5) = pi/3, so the cdf is exactly 2/3.
    CHECK(std::abs(dist.cdf(3.25) - 2.0 / 3.0) <= 1e-15);

    for (double x : {1.2, 1.9, 2.5, 3.25, 3.8}) {
        double numeric = arcsine_cdf_numeric(cls, x);
        CHECK(std::abs(dist.cdf(x) - numeric) <= 1e-9);
    }

    CHECK(dist.cdf(1.0) == 0.0);
    CHECK(dist.cdf(0.5) == 0.0);
    CHECK(dist.cdf(4.0) == 1.0);
    CHECK(dist.cdf(7.0) == 1.0);
}

TEST_CASE("quantile and cdf are inverse maps") {
    ConditionClass cls(0.01, 1.0);
    ArcsineDist dist(cls);

    for (int i = 1; i < 1000; ++i) {
        double x = cls.m() + (cls.M() - cls.m()) * static_cast<double>(i) / 1000.0;
        CHECK(std::abs(dist.quantile(dist.cdf(x)) - x) <= 1e-12);
    }
    for (int i = 0; i <= 100; ++i) {
        double u = static_cast<double>(i) / 100.0;
        CHECK(std::abs(dist.cdf(dist.quantile(u)) - u) <= 1e-12);
    }
    CHECK(dist.quantile(0.0) == doctest::Approx(cls.m()).epsilon(1e-14));
    CHECK(dist.quantile(1.0) == doctest::Approx(cls.M()).epsilon(1e-14));
    CHECK_THROWS_AS(dist.quantile(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(dist.quantile(1.1), std::invalid_argument);
}

TEST_CASE("density is the derivative of the cdf") {
    ArcsineDist dist(ConditionClass(1.0, 4.0));
    double h = 1e-6;
    for (double x : {1.3, 2.0, 2.5, 3.1, 3.7}) {
        double fd = (dist.cdf(x + h) - dist.cdf(x - h)) / (2.0 * h);
        CHECK(std::abs(dist.density(x) - fd) <= 1e-6);
    }
    CHECK(dist.density(1.0) == 0.0);
    CHECK(dist.density(4.0) == 0.0);
}

TEST_CASE("sampling is deterministic per stream and follows the cdf") {
    ConditionClass cls(1.0, 4.0);
    ArcsineDist dist(cls);

    RngStream a(42, 7);
    RngStream b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(dist.sample(a) == dist.sample(b));

    RngStream rng(2024, 0);
    const std::size_t n = 100000;
    std::vector<double> draws(n);
    for (auto& d : draws) {
        d = dist.sample(rng);
        CHECK(d > cls.m());
        CHECK(d < cls.M());
    }
    // Empirical cdf at the deciles; 0.012 is about 7 sigma at n = 1e5.
    for (int i = 1; i <= 9; ++i) {
        double p = static_cast<double>(i) / 10.0;
        double q = dist.quantile(p);
        auto below = static_cast<double>(
            std::count_if(draws.begin(), draws.end(), [&](double d) { return d <= q; }));
        CHECK(std::abs(below / static_cast<double>(n) - p) <= 0.012);
    }
}

TEST_CASE("mean inverse is the reciprocal geometric mean of the endpoints") {
    for (auto [m, M] : {std::pair{1.0, 4.0}, std::pair{1.0, 100.0}, std::pair{0.01, 1.0}}) {
        ConditionClass cls(m, M);
        ArcsineDist dist(cls);
        CHECK(dist.mean_inverse() == doctest::Approx(1.0 / std::sqrt(m * M)).epsilon(1e-15));
        double quad = expect_quadrature(dist, [](double x) { return 1.0 / x; }, 100000);
        CHECK(std::abs(quad - dist.mean_inverse()) <= 1e-6);
    }
}

TEST_CASE("median sits at the interval center") {
    ConditionClass cls(0.5, 9.0);
    ArcsineDist dist(cls);
    CHECK(dist.median() == cls.center());
    CHECK(std::abs(dist.cdf(dist.median()) - 0.5) <= 1e-15);
}

TEST_CASE("chebyshev nodes are symmetric within the interval") {
    ConditionClass cls(1.0, 4.0);
    const std::size_t n = 17;
    for (std::size_t t = 0; t < n; ++t) {
        double node = chebyshev_node(cls, t, n);
        CHECK(node > cls.m());
        CHECK(node < cls.M());
        // Node t and its mirror straddle the center exactly.
        CHECK(std::abs(node + chebyshev_node(cls, n - 1 - t, n) - 2.0 * cls.center()) <= 1e-12);
    }
    // Node 0 is the largest.
    CHECK(chebyshev_node(cls, 0, n) > chebyshev_node(cls, 1, n));
    CHECK_THROWS_AS(chebyshev_node(cls, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(chebyshev_node(cls, 5, 5), std::invalid_argument);
}

TEST_CASE("quadrature reports the node where an integrand turns non-finite") {
    ConditionClass cls(1.0, 4.0);
    ArcsineDist dist(cls);
    // Place the singularity exactly on node 3 of the 64-point rule.
    double pole = chebyshev_node(cls, 3, 64);
    auto g = [&](double x) { return std::log(std::abs(1.0 - x / pole)); };
    CHECK_THROWS_AS(expect_quadrature(dist, g, 64), NonFiniteIntegrand);
    try {
        expect_quadrature(dist, g, 64);
    } catch (const NonFiniteIntegrand& e) {
        CHECK(e.index() == 3);
        CHECK(e.node() == doctest::Approx(pole).epsilon(1e-15));
    }
    CHECK_THROWS_AS(expect_quadrature(dist, g, 0), std::invalid_argument);
}

TEST_CASE("quadrature reproduces the equalized log factor at the left edge") {
    // At lambda = m the expected log factor equals log((sqrt(k)-1)/(sqrt(k)+1));
    // for k = 4 that is log(1/3).
    ConditionClass cls(1.0, 4.0);
    ArcsineDist dist(cls);
    double value = expect_quadrature(
        dist, [](double beta) { return std::log(std::abs(1.0 - 1.0 / beta)); }, 1000000);
    CHECK(std::abs(value - std::log(1.0 / 3.0)) <= 1e-4);
}

TEST_CASE("flipped law is the reciprocal of the arcsine law") {
    ConditionClass cls(1.0, 4.0);
    FlippedArcsineDist flipped(cls);

    CHECK(flipped.inverse_law().cls().m() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(flipped.inverse_law().cls().M() == doctest::Approx(1.0).epsilon(1e-15));

    // cdf identity: P(X <= x) = 1 - P(1/X <= 1/x).
    for (double x : {1.2, 2.0, 2.5, 3.6}) {
        double direct = flipped.cdf(x);
        double via_inverse = 1.0 - flipped.inverse_law().cdf(1.0 / x);
        CHECK(std::abs(direct - via_inverse) <= 1e-15);
    }
    CHECK(flipped.cdf(1.0) == 0.0);
    CHECK(flipped.cdf(4.0) == 1.0);

    RngStream rng(7, 1);
    const std::size_t n = 100000;
    std::vector<double> draws(n);
    for (auto& d : draws) {
        d = flipped.sample(rng);
        CHECK(d > cls.m());
        CHECK(d < cls.M());
    }
    for (double x : {1.5, 2.0, 2.5, 3.0, 3.5}) {
        auto below = static_cast<double>(
            std::count_if(draws.begin(), draws.end(), [&](double d) { return d <= x; }));
        CHECK(std::abs(below / static_cast<double>(n) - flipped.cdf(x)) <= 0.012);
    }
}

} // TEST_SUITE
