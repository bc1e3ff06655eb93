#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "arcstep/condition.hpp"
#include "arcstep/distributions.hpp"
#include "arcstep/rng.hpp"

namespace arcstep {

enum class ScheduleKind { constant, chebyshev, iid_arcsine };

enum class ChebyshevOrder { natural, reversed, permuted };

// One gradient step: stepsize alpha and inverse stepsize beta = 1/alpha.
// Whichever of the two is primary for the schedule kind is computed first and
// the other derived from it, so downstream factor computations see a
// consistent pair.
struct Step {
    double alpha;
    double beta;
};

// Declarative description of a stepsize sequence over a condition class.
// Three kinds:
//   constant     - alpha_t = alpha for all t (infinite)
//   chebyshev    - alpha_t = 1 / node_t for the n midpoint Chebyshev nodes,
//                  visited in natural, reversed, or explicitly permuted order
//                  (finite, exactly n steps)
//   iid_arcsine  - beta_t drawn i.i.d. from the arcsine law on (m, M)
//                  (infinite, consumes the run's random stream)
class ScheduleSpec {
public:
    static ScheduleSpec constant(const ConditionClass& cls, double alpha);
    static ScheduleSpec chebyshev(const ConditionClass& cls, std::size_t n,
                                  ChebyshevOrder order = ChebyshevOrder::natural,
                                  std::vector<std::size_t> permutation = {});
    static ScheduleSpec iid_arcsine(const ConditionClass& cls);

    ScheduleKind kind() const { return kind_; }
    const ConditionClass& cls() const { return cls_; }

    bool finite() const { return kind_ == ScheduleKind::chebyshev; }
    // Number of steps for finite schedules, nullopt otherwise.
    std::optional<std::size_t> length() const;

    double constant_alpha() const;
    std::size_t chebyshev_n() const;
    ChebyshevOrder order() const;
    // Identity for natural order, reversal for reversed, the explicit
    // permutation otherwise. Index i of the returned vector is the node index
    // used at step i.
    std::vector<std::size_t> step_order() const;

    // A constant stepsize alpha >= 2/M contracts nothing at curvature M; such
    // specs are accepted but flagged so experiments can report them.
    bool flagged_divergent_constant() const;

    // The realized inverse-stepsize sequence for finite schedules.
    std::vector<double> inverse_stepsizes() const;

    nlohmann::ordered_json to_json() const;
    static ScheduleSpec from_json(const nlohmann::json& j);

private:
    ScheduleSpec(ScheduleKind kind, const ConditionClass& cls)
        : kind_(kind), cls_(cls) {}

    ScheduleKind kind_;
    ConditionClass cls_;
    double alpha_ = 0.0;
    std::size_t n_ = 0;
    ChebyshevOrder order_ = ChebyshevOrder::natural;
    std::vector<std::size_t> permutation_;
};

class ScheduleExhausted : public std::out_of_range {
public:
    explicit ScheduleExhausted(std::size_t n)
        : std::out_of_range("schedule exhausted: finite schedule of length " +
                            std::to_string(n) + " has no further steps") {}
};

// Stateful cursor over a ScheduleSpec. Random schedules consume the stream
// passed at construction; deterministic schedules ignore it.
class ScheduleStream {
public:
    ScheduleStream(const ScheduleSpec& spec, RngStream rng);

    const ScheduleSpec& spec() const { return spec_; }
    std::size_t cursor() const { return cursor_; }

    // Throws ScheduleExhausted past the end of a finite schedule.
    Step next();
    double next_stepsize() { return next().alpha; }

private:
    ScheduleSpec spec_;
    RngStream rng_;
    std::size_t cursor_ = 0;
    std::vector<std::size_t> order_;   // chebyshev only
    ArcsineDist arcsine_;
};

// Equal-width histogram over [lo, hi]; values on the upper edge fall into the
// last bin.
struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
    std::size_t total = 0;

    std::vector<double> edges() const;
    std::vector<double> fractions() const;
};

// Histogram of the first n inverse stepsizes beta_t produced by the stream,
// binned over [m, M]. n and bins must be positive.
Histogram empirical_measure(ScheduleStream& stream, std::size_t n, std::size_t bins);

// Per-bin mass of the arcsine law, by cdf differences over the histogram's
// edges.
std::vector<double> arcsine_bin_mass(const ArcsineDist& dist, const Histogram& hist);

// Total variation distance between the binned empirical measure and the
// binned arcsine law: 0.5 * sum_b |fraction_b - mass_b|.
double tv_distance_to_arcsine(const Histogram& hist, const ArcsineDist& dist);

} // namespace arcstep
