#include "doctest.h"

#include <cmath>
#include <complex>
#include <limits>

#include "arcstep/potential.hpp"

using namespace arcstep;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent oracle: E_{t ~ arcsine[-1,1]} log(1/|z-t|) via the cosine
// substitution t = cos(theta), which turns the expectation into a plain
// average over theta. The integrand is analytic for z off the interval, so
// the midpoint rule converges spectrally.
double potential_oracle(std::complex<double> z, std::size_t n = 200001) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double theta = kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        acc += std::log(1.0 / std::abs(z - std::cos(theta)));
    }
    return acc / static_cast<double>(n);
}

} // namespace

TEST_SUITE("potential") {

TEST_CASE("equilibrium potential is log 2 on the interval itself") {
    CHECK(std::abs(equilibrium_potential(0.0) - std::log(2.0)) <= 1e-14);
    CHECK(std::abs(equilibrium_potential(0.3) - std::log(2.0)) <= 1e-14);
    CHECK(std::abs(equilibrium_potential(-0.99) - std::log(2.0)) <= 1e-14);
    CHECK(std::abs(equilibrium_potential(std::complex<double>(0.5, 0.0)) - std::log(2.0)) <= 1e-14);
}

TEST_CASE("equilibrium potential off the interval matches the closed form and the oracle") {
    // At z = 3 the larger branch is 3 + 2 sqrt(2) = (1 + sqrt(2))^2, so the
    // potential is log 2 - 2 asinh(1).
    double frozen = std::log(2.0) - 2.0 * std::asinh(1.0);
    CHECK(std::abs(equilibrium_potential(3.0) - frozen) <= 1e-12);
    CHECK(std::abs(frozen - (-1.0695999934791407)) <= 1e-12);

    for (std::complex<double> z : {std::complex<double>(3.0, 0.0),
                                   std::complex<double>(-2.0, 0.0),
                                   std::complex<double>(0.5, 0.5),
                                   std::complex<double>(2.5, 0.0),
                                   std::complex<double>(-1.4, 0.0)}) {
        CHECK(std::abs(equilibrium_potential(z) - potential_oracle(z)) <= 1e-8);
    }

    // Symmetries of the law: even in z, invariant under conjugation.
    CHECK(std::abs(equilibrium_potential(3.0) - equilibrium_potential(-3.0)) <= 1e-14);
    CHECK(std::abs(equilibrium_potential(std::complex<double>(0.5, 0.5)) -
                   equilibrium_potential(std::complex<double>(0.5, -0.5))) <= 1e-14);
}

TEST_CASE("potential route and algebraic route agree on the accelerated rate") {
    for (double kappa : {4.0, 7.3, 100.0, 200.0}) {
        ConditionClass cls = ConditionClass::from_kappa(kappa);
        CHECK(std::abs(rate_value(cls) - cls.log_acc_rate()) <= 1e-12);
    }
    // Both routes are scale invariant.
    ConditionClass scaled(2.0, 8.0);
    CHECK(std::abs(rate_value(scaled) - ConditionClass::from_kappa(4.0).log_acc_rate()) <= 1e-13);
}

TEST_CASE("equalized log factor is flat inside the class and explicit outside") {
    ConditionClass cls(1.0, 4.0);
    for (double lam : {1.0, 1.7, 2.5, 3.9, 4.0})
        CHECK(equalized_log_factor(cls, lam) == cls.log_acc_rate());

    // Outside the class, cross-check against direct quadrature.
    ArcsineDist dist(cls);
    for (double lam : {5.0, 0.5, 6.5}) {
        double closed = equalized_log_factor(cls, lam);
        double quad = expect_quadrature(
            dist, [&](double b) { return std::log(std::abs(1.0 - lam / b)); }, 1000000);
        CHECK(std::abs(closed - quad) <= 1e-5);
        CHECK(closed > cls.log_acc_rate());
    }
}

TEST_CASE("slowdown under gradient error ties to the equalized factor at the inflated edge") {
    ConditionClass cls(1.0, 4.0);
    CHECK(inexact_slowdown(cls, 0.0) == 1.0);

    double s = inexact_slowdown(cls, 0.01);
    CHECK(std::abs(s - 1.2591413) <= 1e-6);
    // The two algebraic forms of the same root are reciprocal.
    double e = 2.0 * cls.M() * 0.01 / (cls.M() - cls.m());
    CHECK(std::abs(s * (1.0 + e - std::sqrt(e * (2.0 + e))) - 1.0) <= 1e-13);

    // Evaluating the equalized factor at lambda = M (1 + eps) recovers
    // exactly the slowdown increment.
    double lifted = equalized_log_factor(cls, cls.M() * 1.01);
    CHECK(std::abs(lifted - cls.log_acc_rate() - std::log(s)) <= 1e-12);

    // Scale invariance and monotonicity.
    CHECK(std::abs(inexact_slowdown(ConditionClass::from_kappa(4.0), 0.01) - s) <= 1e-13);
    CHECK(inexact_slowdown(cls, 0.02) > s);
    CHECK_THROWS_AS(inexact_slowdown(cls, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(inexact_slowdown(cls, std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
    // The closed form itself is defined for any finite nonnegative error;
    // only the corruption model caps epsilon below 1.
    CHECK(std::isfinite(inexact_slowdown(cls, 1.0)));
}

TEST_CASE("laws validate and normalize their atoms") {
    ConditionClass cls(1.0, 4.0);
    CHECK_THROWS_AS(Law::point_mass(cls, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(Law::point_mass(cls, 4.5), std::invalid_argument);
    CHECK_THROWS_AS(Law::atoms(cls, {2.0, 3.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Law::atoms(cls, {2.0, 3.0}, {1.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(Law::atoms(cls, {}, {}), std::invalid_argument);

    auto law = Law::atoms(cls, {2.0, 3.0}, {2.0, 6.0});
    CHECK(law.weights()[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(law.weights()[1] == doctest::Approx(0.75).epsilon(1e-15));
    // Exact expectation over atoms, no quadrature involved.
    CHECK(law.expect([](double x) { return x; }, 1) == doctest::Approx(2.75).epsilon(1e-15));

    RngStream rng(3, 0);
    for (int i = 0; i < 50; ++i) {
        double x = law.sample(rng);
        CHECK((x == 2.0 || x == 3.0));
    }
    auto point = Law::point_mass(cls, 2.5);
    for (int i = 0; i < 10; ++i) CHECK(point.sample(rng) == 2.5);
}

TEST_CASE("law expectations poison to -inf instead of throwing") {
    ConditionClass cls(1.0, 4.0);
    auto uniform = Law::uniform(cls);
    // Hit an interior midpoint node exactly: with 3 nodes they sit at
    // 1.5, 2.5, 3.5.
    double val = uniform.expect(
        [](double x) { return std::log(std::abs(1.0 - x / 2.5)); }, 3);
    CHECK(val == -kInf);
    CHECK_THROWS_AS(uniform.expect([](double x) { return x; }, 0), std::invalid_argument);

    auto atom = Law::point_mass(cls, 2.5);
    CHECK(atom.expect([](double x) { return std::log(std::abs(1.0 - x / 2.5)); }, 1) == -kInf);
}

TEST_CASE("both marginal expectations equalize near the accelerated rate") {
    ConditionClass cls(1.0, 4.0);
    auto mu = Law::arcsine(cls);
    auto nu = Law::flipped_arcsine(cls);
    double target = cls.log_acc_rate();

    for (double lam : {1.3, 2.5, 3.8})
        CHECK(std::abs(expected_log_factor_over_stepsize(mu, lam, 100000) - target) <= 1e-4);
    // The flipped rule integrates through the pole, so its cell error is
    // larger; still far below the margin scale of the game.
    for (double beta : {1.3, 2.5, 3.8})
        CHECK(std::abs(expected_log_factor_over_curvature(nu, beta, 100000) - target) <= 2e-3);
}

TEST_CASE("monte carlo payoff reproduces the saddle value") {
    ConditionClass cls(1.0, 4.0);
    auto mu = Law::arcsine(cls);
    auto nu = Law::flipped_arcsine(cls);

    RngStream a(5, 0), b(5, 0);
    auto p1 = game_payoff_mc(mu, nu, 200000, a);
    auto p2 = game_payoff_mc(mu, nu, 200000, b);
    CHECK(p1.value == p2.value);
    CHECK(p1.samples == 200000);
    CHECK_FALSE(p1.divergent);
    CHECK(p1.stderr_estimate > 0.0);
    CHECK(std::abs(p1.value - cls.log_acc_rate()) <= std::max(4.0 * p1.stderr_estimate, 5e-3));
}

TEST_CASE("quadrature payoff reproduces the saddle value") {
    ConditionClass cls(1.0, 4.0);
    auto pq = game_payoff_quadrature(Law::arcsine(cls), Law::flipped_arcsine(cls), 100000, 256);
    CHECK_FALSE(pq.divergent);
    CHECK(pq.stderr_estimate == 0.0);
    CHECK(std::abs(pq.value - cls.log_acc_rate()) <= 1e-4);

    // Atom against atom is evaluated in closed form.
    auto exact = game_payoff_quadrature(Law::point_mass(cls, 2.0), Law::point_mass(cls, 3.0), 1, 1);
    CHECK(exact.value == doctest::Approx(std::log(0.5)).epsilon(1e-14));

    // Identical atoms annihilate: the payoff diverges to -inf.
    auto div = game_payoff_quadrature(Law::point_mass(cls, 2.0), Law::point_mass(cls, 2.0), 1, 1);
    CHECK(div.divergent);
    CHECK(div.value == -kInf);
    RngStream rng(1, 0);
    auto mdiv = game_payoff_mc(Law::point_mass(cls, 2.0), Law::point_mass(cls, 2.0), 100, rng);
    CHECK(mdiv.divergent);
    CHECK(mdiv.value == -kInf);
}

TEST_CASE("equalization residuals vanish over the class grid") {
    ConditionClass cls(1.0, 4.0);
    auto rep = equalization_residual(cls, 31, 100000);
    REQUIRE(rep.rows.size() == 31);
    CHECK(rep.rows.front().point == cls.m());
    CHECK(rep.rows.back().point == cls.M());
    CHECK(rep.log_acc_rate == cls.log_acc_rate());
    CHECK(rep.max_abs_residual <= 1e-3);

    double scan = 0.0;
    for (const auto& row : rep.rows) scan = std::max(scan, std::abs(row.residual));
    CHECK(rep.max_abs_residual == scan);

    CHECK_THROWS_AS(equalization_residual(cls, 1, 100), std::invalid_argument);
}

TEST_CASE("flipped equalization holds along the curvature axis") {
    ConditionClass cls(1.0, 4.0);
    auto quad = flipped_equalization_residual(cls, 21, FlippedMethod::quadrature, 100000);
    REQUIRE(quad.rows.size() == 21);
    CHECK(quad.max_abs_residual <= 2e-3);

    CHECK_THROWS_AS(flipped_equalization_residual(cls, 5, FlippedMethod::monte_carlo, 1000),
                    std::invalid_argument);
    RngStream rng(9, 0);
    auto mc = flipped_equalization_residual(cls, 5, FlippedMethod::monte_carlo, 50000, &rng);
    REQUIRE(mc.rows.size() == 5);
    CHECK(mc.max_abs_residual <= 0.06);
}

TEST_CASE("every non-arcsine stepsize law concedes a positive margin") {
    ConditionClass cls(1.0, 4.0);

    auto self = non_arcsine_is_worse(cls, Law::arcsine(cls), 101, 100000);
    CHECK(std::abs(self.margin) <= 1e-3);

    auto unif = non_arcsine_is_worse(cls, Law::uniform(cls), 101, 100000);
    CHECK(unif.margin > 0.1);

    // A point mass at the center: both class endpoints see the factor
    // 1 - m/c = M/c - 1 = 0.6, evaluated exactly on the atom.
    auto point = non_arcsine_is_worse(cls, Law::point_mass(cls, 2.5), 101, 100000);
    CHECK(point.margin > 0.3);
    CHECK(std::abs(point.sup_value - std::log(0.6)) <= 1e-12);
    CHECK((std::abs(point.argmax_lambda - cls.m()) <= 1e-12 ||
           std::abs(point.argmax_lambda - cls.M()) <= 1e-12));
}

} // TEST_SUITE
