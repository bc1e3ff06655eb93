#include "arcstep/potential.hpp"

#include <algorithm>
#include <string>

namespace arcstep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2 = 0.6931471805599453094172321;

} // namespace

double equilibrium_potential(std::complex<double> z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("equilibrium_potential: non-finite point");
    std::complex<double> root = std::sqrt(z * z - 1.0);
    double q = std::max(std::abs(z + root), std::abs(z - root));
    return kLog2 - std::log(q);
}

double equilibrium_potential(double z) {
    return equilibrium_potential(std::complex<double>(z, 0.0));
}

double rate_value(const ConditionClass& cls) {
    // image of lambda = 0 under the affine map of [m, M] onto [-1, 1]
    double z0 = (0.0 - cls.center()) / cls.radius();
    return equilibrium_potential(z0) - kLog2;
}

double equalized_log_factor(const ConditionClass& cls, double lambda) {
    if (!std::isfinite(lambda))
        throw std::invalid_argument("equalized_log_factor: non-finite lambda");
    double z = (lambda - cls.center()) / cls.radius();
    double excess = 0.0;
    if (std::abs(z) > 1.0) excess = std::log(std::abs(z) + std::sqrt(z * z - 1.0));
    return cls.log_acc_rate() + excess;
}

double inexact_slowdown(const ConditionClass& cls, double epsilon) {
    if (!(std::isfinite(epsilon) && epsilon >= 0.0))
        throw std::invalid_argument("inexact_slowdown: epsilon must be a finite nonnegative value");
    double e = 2.0 * cls.M() * epsilon / (cls.M() - cls.m());
    // 1 / (1 + e - sqrt((1+e)^2 - 1)) rationalized to avoid cancellation
    return 1.0 + e + std::sqrt(e * (2.0 + e));
}

Law Law::arcsine(const ConditionClass& cls) { return Law(Kind::arcsine, cls); }
Law Law::flipped_arcsine(const ConditionClass& cls) { return Law(Kind::flipped_arcsine, cls); }
Law Law::uniform(const ConditionClass& cls) { return Law(Kind::uniform, cls); }

Law Law::point_mass(const ConditionClass& cls, double point) {
    return atoms(cls, {point}, {1.0});
}

Law Law::atoms(const ConditionClass& cls, std::vector<double> points,
               std::vector<double> weights) {
    if (points.empty()) throw std::invalid_argument("Law::atoms: no points");
    if (points.size() != weights.size())
        throw std::invalid_argument("Law::atoms: points and weights differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(std::isfinite(points[i]) && points[i] >= cls.m() && points[i] <= cls.M()))
            throw std::invalid_argument("Law::atoms: point outside [m, M]");
        if (!(std::isfinite(weights[i]) && weights[i] > 0.0))
            throw std::invalid_argument("Law::atoms: weights must be positive");
        total += weights[i];
    }
    Law law(Kind::atoms, cls);
    law.points_ = std::move(points);
    for (double& w : weights) w /= total;
    law.weights_ = std::move(weights);
    return law;
}

double Law::sample(RngStream& rng) const {
    switch (kind_) {
    case Kind::arcsine:
        return ArcsineDist(cls_).sample(rng);
    case Kind::flipped_arcsine:
        return FlippedArcsineDist(cls_).sample(rng);
    case Kind::uniform:
        return cls_.m() + (cls_.M() - cls_.m()) * rng.uniform01();
    case Kind::atoms: {
        double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            acc += weights_[i];
            if (u <= acc) return points_[i];
        }
        return points_.back();
    }
    }
    throw std::logic_error("Law::sample: unreachable");
}

double expected_log_factor_over_stepsize(const Law& mu, double lambda, std::size_t nodes) {
    if (!std::isfinite(lambda))
        throw std::invalid_argument("expected_log_factor_over_stepsize: non-finite lambda");
    return mu.expect([lambda](double beta) { return std::log(std::abs(1.0 - lambda / beta)); },
                     nodes);
}

double expected_log_factor_over_curvature(const Law& nu, double beta, std::size_t nodes) {
    if (!(std::isfinite(beta) && beta != 0.0))
        throw std::invalid_argument("expected_log_factor_over_curvature: invalid beta");
    return nu.expect([beta](double lambda) { return std::log(std::abs(1.0 - lambda / beta)); },
                     nodes);
}

GamePayoff game_payoff_mc(const Law& mu, const Law& nu, std::size_t samples, RngStream& rng) {
    if (samples == 0) throw std::invalid_argument("game_payoff_mc: samples must be positive");
    GamePayoff out;
    // Welford accumulation: one pass, reproducible, no catastrophic loss.
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double beta = mu.sample(rng);
        double lambda = nu.sample(rng);
        double g = std::log(std::abs(1.0 - lambda / beta));
        ++n;
        if (g == -kInf) {
            out.value = -kInf;
            out.divergent = true;
            out.samples = n;
            return out;
        }
        double d = g - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (g - mean);
    }
    out.value = mean;
    out.samples = n;
    out.stderr_estimate =
        n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * static_cast<double>(n - 1))) : 0.0;
    return out;
}

GamePayoff game_payoff_quadrature(const Law& mu, const Law& nu, std::size_t inner_nodes,
                                  std::size_t outer_nodes) {
    GamePayoff out;
    out.value = nu.expect(
        [&](double lambda) { return expected_log_factor_over_stepsize(mu, lambda, inner_nodes); },
        outer_nodes);
    out.divergent = out.value == -kInf;
    return out;
}

namespace {

// Precomputed abscissae/weights matching Law::expect, so a whole grid of
// integrals reuses one node evaluation instead of recomputing cosines.
struct QuadPlan {
    std::vector<double> points;
    std::vector<double> weights;
};

QuadPlan plan_quadrature(const Law& law, std::size_t nodes) {
    QuadPlan plan;
    const double m = law.cls().m(), M = law.cls().M();
    switch (law.kind()) {
    case Law::Kind::atoms:
        plan.points = law.points();
        plan.weights = law.weights();
        return plan;
    case Law::Kind::arcsine:
    case Law::Kind::flipped_arcsine: {
        if (nodes == 0) throw std::invalid_argument("plan_quadrature: nodes must be positive");
        const bool flip = law.kind() == Law::Kind::flipped_arcsine;
        const double c = flip ? 0.5 * (1.0 / M + 1.0 / m) : law.cls().center();
        const double r = flip ? 0.5 * (1.0 / m - 1.0 / M) : law.cls().radius();
        const double h = kPi / (2.0 * static_cast<double>(nodes));
        plan.points.resize(nodes);
        plan.weights.assign(nodes, 1.0 / static_cast<double>(nodes));
        for (std::size_t t = 0; t < nodes; ++t) {
            double node = c + r * std::cos((2.0 * static_cast<double>(t) + 1.0) * h);
            plan.points[t] = flip ? 1.0 / node : node;
        }
        return plan;
    }
    case Law::Kind::uniform: {
        if (nodes == 0) throw std::invalid_argument("plan_quadrature: nodes must be positive");
        const double w = (M - m) / static_cast<double>(nodes);
        plan.points.resize(nodes);
        plan.weights.assign(nodes, 1.0 / static_cast<double>(nodes));
        for (std::size_t t = 0; t < nodes; ++t)
            plan.points[t] = m + (static_cast<double>(t) + 0.5) * w;
        return plan;
    }
    }
    throw std::logic_error("plan_quadrature: unreachable");
}

// E log |1 - a/b| under the plan; `over_stepsize` decides which argument the
// plan's points supply.
double plan_log_factor(const QuadPlan& plan, double fixed, bool points_are_beta) {
    double s = pairwise_sum(plan.points.size(), [&](std::size_t t) {
        double p = plan.points[t];
        double g = points_are_beta ? std::log(std::abs(1.0 - fixed / p))
                                   : std::log(std::abs(1.0 - p / fixed));
        return plan.weights[t] * g;
    });
    return std::isnan(s) ? -kInf : s;   // 0 * -inf from a zero-weight tail
}

} // namespace

EqualizationReport equalization_residual(const ConditionClass& cls, std::size_t grid,
                                         std::size_t nodes) {
    if (grid < 2) throw std::invalid_argument("equalization_residual: grid needs >= 2 points");
    EqualizationReport rep;
    rep.log_acc_rate = cls.log_acc_rate();
    QuadPlan plan = plan_quadrature(Law::arcsine(cls), nodes);
    rep.rows.reserve(grid);
    for (std::size_t j = 0; j < grid; ++j) {
        double lambda = cls.m() + (cls.M() - cls.m()) * static_cast<double>(j) /
                                      static_cast<double>(grid - 1);
        double value = plan_log_factor(plan, lambda, true);
        EqualizationRow row{lambda, value, value - rep.log_acc_rate};
        if (std::abs(row.residual) > rep.max_abs_residual) {
            rep.max_abs_residual = std::abs(row.residual);
            rep.argmax_point = lambda;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

EqualizationReport flipped_equalization_residual(const ConditionClass& cls, std::size_t grid,
                                                 FlippedMethod method,
                                                 std::size_t nodes_or_samples, RngStream* rng) {
    if (grid < 2)
        throw std::invalid_argument("flipped_equalization_residual: grid needs >= 2 points");
    if (nodes_or_samples == 0)
        throw std::invalid_argument("flipped_equalization_residual: need nodes or samples");
    EqualizationReport rep;
    rep.log_acc_rate = cls.log_acc_rate();
    Law nu = Law::flipped_arcsine(cls);

    QuadPlan plan;
    if (method == FlippedMethod::quadrature) plan = plan_quadrature(nu, nodes_or_samples);
    else if (rng == nullptr)
        throw std::invalid_argument("flipped_equalization_residual: Monte Carlo needs a stream");

    rep.rows.reserve(grid);
    for (std::size_t j = 0; j < grid; ++j) {
        double beta = cls.m() + (cls.M() - cls.m()) * static_cast<double>(j) /
                                    static_cast<double>(grid - 1);
        double value;
        if (method == FlippedMethod::quadrature) {
            value = plan_log_factor(plan, beta, false);
        } else {
            // one substream per grid point, independent of grid traversal
            RngStream sub(rng->seed(), rng->stream_id() + 1 + j);
            double mean = 0.0;
            for (std::size_t s = 0; s < nodes_or_samples; ++s) {
                double lambda = nu.sample(sub);
                double g = std::log(std::abs(1.0 - lambda / beta));
                mean += (g - mean) / static_cast<double>(s + 1);
            }
            value = mean;
        }
        EqualizationRow row{beta, value, value - rep.log_acc_rate};
        if (std::abs(row.residual) > rep.max_abs_residual) {
            rep.max_abs_residual = std::abs(row.residual);
            rep.argmax_point = beta;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

WorstCaseReport non_arcsine_is_worse(const ConditionClass& cls, const Law& mu, std::size_t grid,
                                     std::size_t nodes) {
    if (grid < 2) throw std::invalid_argument("non_arcsine_is_worse: grid needs >= 2 points");
    WorstCaseReport rep;
    rep.sup_value = -kInf;
    QuadPlan plan = plan_quadrature(mu, nodes);
    for (std::size_t j = 0; j < grid; ++j) {
        double lambda = cls.m() + (cls.M() - cls.m()) * static_cast<double>(j) /
                                      static_cast<double>(grid - 1);
        double value = plan_log_factor(plan, lambda, true);
        if (value > rep.sup_value) {
            rep.sup_value = value;
            rep.argmax_lambda = lambda;
        }
    }
    rep.margin = rep.sup_value - cls.log_acc_rate();
    return rep;
}

} // namespace arcstep
