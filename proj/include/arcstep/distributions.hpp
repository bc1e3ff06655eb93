#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "arcstep/condition.hpp"
#include "arcstep/rng.hpp"
#include "arcstep/summation.hpp"

namespace arcstep {

inline constexpr double kPi = 3.141592653589793238462643;

// Midpoint Chebyshev node t of n on [m, M]:
//     c + r * cos((2t+1) pi / (2n)),  c = (M+m)/2, r = (M-m)/2.
// These points serve double duty: quadrature abscissae for expectations under
// the arcsine law, and the inverse stepsizes of the deterministic n-step
// schedule. Node 0 is closest to M, node n-1 closest to m.
inline double chebyshev_node(const ConditionClass& cls, std::size_t t, std::size_t n) {
    if (n == 0) throw std::invalid_argument("chebyshev_node: n must be positive");
    if (t >= n) throw std::invalid_argument("chebyshev_node: index out of range");
    double angle = (2.0 * static_cast<double>(t) + 1.0) * kPi / (2.0 * static_cast<double>(n));
    return cls.center() + cls.radius() * std::cos(angle);
}

// Arcsine law on (m, M): density 1 / (pi * sqrt((M-x)(x-m))).
// Mass concentrates at both ends of the interval; the closed forms below are
// all exercised against independent oracles in the tests.
class ArcsineDist {
public:
    explicit ArcsineDist(const ConditionClass& cls) : cls_(cls) {}

    const ConditionClass& cls() const { return cls_; }

    // c + r cos(pi U) with U uniform on (0,1); support is the open interval.
    double sample(RngStream& rng) const {
        return cls_.center() + cls_.radius() * std::cos(kPi * rng.uniform01());
    }

    double density(double x) const {
        if (x <= cls_.m() || x >= cls_.M()) return 0.0;
        return 1.0 / (kPi * std::sqrt((cls_.M() - x) * (x - cls_.m())));
    }

    // P(X <= x) = 1 - acos((2x - (M+m)) / (M-m)) / pi, clamped outside [m,M].
    double cdf(double x) const {
        if (x <= cls_.m()) return 0.0;
        if (x >= cls_.M()) return 1.0;
        double z = (x - cls_.center()) / cls_.radius();
        return 1.0 - std::acos(z) / kPi;
    }

    // Inverse of cdf on [0,1]; quantile(0) = m, quantile(1) = M.
    double quantile(double u) const {
        if (!(u >= 0.0 && u <= 1.0))
            throw std::invalid_argument("ArcsineDist::quantile: u must be in [0,1]");
        return cls_.center() + cls_.radius() * std::cos(kPi * (1.0 - u));
    }

    double median() const { return cls_.center(); }

    // E[1/X] = 1/sqrt(Mm). The geometric-mean identity is what makes the
    // mean stepsize of the randomized schedule equal 1/sqrt(Mm).
    double mean_inverse() const { return 1.0 / std::sqrt(cls_.M() * cls_.m()); }

private:
    ConditionClass cls_;
};

// Law of X when 1/X follows the arcsine law on (1/M, 1/m); support is (m, M).
// This is the least favorable curvature distribution in the stepsize game.
class FlippedArcsineDist {
public:
    explicit FlippedArcsineDist(const ConditionClass& cls)
        : cls_(cls), inverse_(ConditionClass(1.0 / cls.M(), 1.0 / cls.m())) {}

    const ConditionClass& cls() const { return cls_; }

    // Arcsine law followed by 1/X.
    const ArcsineDist& inverse_law() const { return inverse_; }

    double sample(RngStream& rng) const { return 1.0 / inverse_.sample(rng); }

    // P(X <= x) = P(1/X >= 1/x) = 1 - cdf_inverse(1/x).
    double cdf(double x) const {
        if (x <= cls_.m()) return 0.0;
        if (x >= cls_.M()) return 1.0;
        return 1.0 - inverse_.cdf(1.0 / x);
    }

private:
    ConditionClass cls_;
    ArcsineDist inverse_;
};

// Thrown when a quadrature integrand evaluates to a non-finite value; carries
// the offending node so callers can see where the integrand blew up.
class NonFiniteIntegrand : public std::runtime_error {
public:
    NonFiniteIntegrand(double node, std::size_t index, std::size_t count)
        : std::runtime_error("expect_quadrature: integrand not finite at node " +
                             std::to_string(index) + "/" + std::to_string(count) +
                             " (x = " + std::to_string(node) + ")"),
          node_(node), index_(index) {}

    double node() const { return node_; }
    std::size_t index() const { return index_; }

private:
    double node_;
    std::size_t index_;
};

// E[g(X)] for X arcsine on (m, M), by the midpoint Chebyshev rule:
//     (1/N) * sum_t g(node_t).
// Exact for polynomials of degree < 2N after the cosine substitution, and
// still converges for integrable log singularities inside the interval
// (error ~ (log N)/N); callers pick N accordingly. Summation is pairwise, so
// results are reproducible bit for bit.
template <class G>
double expect_quadrature(const ArcsineDist& dist, G&& g, std::size_t nodes) {
    if (nodes == 0) throw std::invalid_argument("expect_quadrature: nodes must be positive");
    const ConditionClass& cls = dist.cls();
    const double c = cls.center();
    const double r = cls.radius();
    const double h = kPi / (2.0 * static_cast<double>(nodes));
    double total = pairwise_sum(nodes, [&](std::size_t t) {
        double x = c + r * std::cos((2.0 * static_cast<double>(t) + 1.0) * h);
        double v = g(x);
        if (!std::isfinite(v)) throw NonFiniteIntegrand(x, t, nodes);
        return v;
    });
    return total / static_cast<double>(nodes);
}

} // namespace arcstep
