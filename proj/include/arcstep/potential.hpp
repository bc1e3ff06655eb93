#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "arcstep/condition.hpp"
#include "arcstep/distributions.hpp"
#include "arcstep/rng.hpp"

namespace arcstep {

// Logarithmic potential of the arcsine law on [-1, 1]:
//     E_t log(1 / |z - t|) = log 2 - log |q(z)|,
// where q(z) is whichever of z -/+ sqrt(z^2-1) has modulus >= 1. The two
// candidates multiply to 1, so the choice is well defined; on [-1,1] both
// have modulus exactly 1 and the potential equals log 2, its maximum.
double equilibrium_potential(std::complex<double> z);
double equilibrium_potential(double z);

// log of the accelerated rate recovered through the potential: the
// difference of potentials between the image of 0 and the interval, using
// the affine map of [m, M] onto [-1, 1]. Agrees with
// ConditionClass::log_acc_rate() to rounding; the two routes are independent.
double rate_value(const ConditionClass& cls);

// Closed form of E_{beta ~ arcsine(m,M)} log |1 - lambda/beta|:
// equals log acc_rate for lambda in [m, M] and exceeds it by
// log(|z| + sqrt(z^2-1)), z = (2 lambda - (M+m))/(M-m), outside.
double equalized_log_factor(const ConditionClass& cls, double lambda);

// Expected slowdown factor of the accelerated rate under relative gradient
// error epsilon: 1 / (1 + e - sqrt((1+e)^2 - 1)) with e = 2 M epsilon / (M-m).
// Equals 1 at epsilon = 0 and grows like 1 + sqrt(2e) for small e.
double inexact_slowdown(const ConditionClass& cls, double epsilon);

// Probability law on [m, M] used as a strategy in the stepsize game, for
// either role (inverse stepsize or curvature).
class Law {
public:
    enum class Kind { arcsine, flipped_arcsine, uniform, atoms };

    static Law arcsine(const ConditionClass& cls);
    static Law flipped_arcsine(const ConditionClass& cls);
    static Law uniform(const ConditionClass& cls);
    static Law point_mass(const ConditionClass& cls, double point);
    // Finite mixture of point masses; weights need not be normalized.
    static Law atoms(const ConditionClass& cls, std::vector<double> points,
                     std::vector<double> weights);

    Kind kind() const { return kind_; }
    const ConditionClass& cls() const { return cls_; }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

    double sample(RngStream& rng) const;

    // E[g(X)]. Continuous kinds integrate with `nodes` abscissae (Chebyshev
    // midpoint rule for the arcsine kinds, midpoint rule for uniform); atoms
    // evaluate exactly. Non-finite g at an atom returns -inf rather than
    // throwing, so annihilation shows up as a divergent value.
    template <class G>
    double expect(G&& g, std::size_t nodes) const;

private:
    Law(Kind k, const ConditionClass& cls) : kind_(k), cls_(cls) {}

    Kind kind_;
    ConditionClass cls_;
    std::vector<double> points_;
    std::vector<double> weights_;   // normalized at construction
};

// E_{beta ~ mu} log |1 - lambda / beta| by the law's own quadrature.
double expected_log_factor_over_stepsize(const Law& mu, double lambda, std::size_t nodes);

// E_{lambda ~ nu} log |1 - lambda / beta|.
double expected_log_factor_over_curvature(const Law& nu, double beta, std::size_t nodes);

struct GamePayoff {
    double value = 0.0;
    double stderr_estimate = 0.0;   // Monte Carlo only, 0 for quadrature
    bool divergent = false;         // a factor of exactly 0 was hit
    std::size_t samples = 0;
};

// Two-player payoff E_{beta ~ mu, lambda ~ nu} log |1 - lambda / beta| by
// independent Monte Carlo draws. A zero factor (beta draw equal to lambda
// draw) makes the payoff -inf and sets the divergent flag.
GamePayoff game_payoff_mc(const Law& mu, const Law& nu, std::size_t samples, RngStream& rng);

// Same payoff through quadrature: outer integral over nu, inner over mu.
// Atom laws make their level exact; continuous outer laws use outer_nodes.
GamePayoff game_payoff_quadrature(const Law& mu, const Law& nu, std::size_t inner_nodes,
                                  std::size_t outer_nodes = 2048);

struct EqualizationRow {
    double point = 0.0;      // lambda (stepsize player fixed) or beta (flipped)
    double value = 0.0;      // estimated expected log factor
    double residual = 0.0;   // value - log acc_rate
};

struct EqualizationReport {
    std::vector<EqualizationRow> rows;
    double max_abs_residual = 0.0;
    double argmax_point = 0.0;
    double log_acc_rate = 0.0;
};

// Residuals of E_{beta ~ arcsine} log |1 - lambda / beta| - log acc_rate over
// a uniform lambda grid on [m, M] (endpoints included), by quadrature with
// `nodes` abscissae. The equalization property says every residual is 0.
EqualizationReport equalization_residual(const ConditionClass& cls, std::size_t grid = 101,
                                         std::size_t nodes = 1000000);

// Flipped-game counterpart: residuals of E_{lambda ~ flipped} log |1 -
// lambda / beta| over a beta grid. method "quadrature" integrates through the
// inverse law; "mc" averages `samples` draws per grid point on substreams of
// rng.
enum class FlippedMethod { quadrature, monte_carlo };
EqualizationReport flipped_equalization_residual(const ConditionClass& cls, std::size_t grid,
                                                 FlippedMethod method, std::size_t nodes_or_samples,
                                                 RngStream* rng = nullptr);

struct WorstCaseReport {
    double sup_value = 0.0;      // sup_lambda E_{beta ~ mu} log |1 - lambda/beta|
    double argmax_lambda = 0.0;
    double margin = 0.0;         // sup_value - log acc_rate, >= 0 up to quadrature error
};

// Worst curvature response to a candidate stepsize law: sup over a uniform
// lambda grid (endpoints included). For the arcsine law itself the margin is
// zero, for any other law it is positive; the gap certifies suboptimality.
WorstCaseReport non_arcsine_is_worse(const ConditionClass& cls, const Law& mu,
                                     std::size_t grid = 101, std::size_t nodes = 100000);

template <class G>
double Law::expect(G&& g, std::size_t nodes) const {
    auto guarded = [&](double x) {
        double v = g(x);
        // Annihilation (or any blow-up) poisons the expectation; report -inf
        // instead of throwing so game payoffs can flag divergence.
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    };
    const double m = cls_.m(), M = cls_.M();
    switch (kind_) {
    case Kind::atoms: {
        double s = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            double v = guarded(points_[i]);
            if (v == -std::numeric_limits<double>::infinity()) return v;
            s += weights_[i] * v;
        }
        return s;
    }
    case Kind::arcsine:
    case Kind::flipped_arcsine: {
        if (nodes == 0) throw std::invalid_argument("Law::expect: nodes must be positive");
        // flipped = pushforward of the arcsine law on (1/M, 1/m) through 1/x.
        const bool flip = kind_ == Kind::flipped_arcsine;
        const double c = flip ? 0.5 * (1.0 / M + 1.0 / m) : cls_.center();
        const double r = flip ? 0.5 * (1.0 / m - 1.0 / M) : cls_.radius();
        const double h = kPi / (2.0 * static_cast<double>(nodes));
        double bad = 0.0;
        double s = pairwise_sum(nodes, [&](std::size_t t) {
            double node = c + r * std::cos((2.0 * static_cast<double>(t) + 1.0) * h);
            double v = guarded(flip ? 1.0 / node : node);
            if (v == -std::numeric_limits<double>::infinity()) bad = 1.0;
            return v;
        });
        if (bad != 0.0) return -std::numeric_limits<double>::infinity();
        return s / static_cast<double>(nodes);
    }
    case Kind::uniform: {
        if (nodes == 0) throw std::invalid_argument("Law::expect: nodes must be positive");
        const double w = (M - m) / static_cast<double>(nodes);
        double bad = 0.0;
        double s = pairwise_sum(nodes, [&](std::size_t t) {
            double v = guarded(m + (static_cast<double>(t) + 0.5) * w);
            if (v == -std::numeric_limits<double>::infinity()) bad = 1.0;
            return v;
        });
        if (bad != 0.0) return -std::numeric_limits<double>::infinity();
        return s / static_cast<double>(nodes);
    }
    }
    throw std::logic_error("Law::expect: unreachable");
}

} // namespace arcstep
