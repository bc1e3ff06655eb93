#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "arcstep/objectives.hpp"
#include "arcstep/rng.hpp"
#include "arcstep/schedules.hpp"

namespace arcstep {

// What a run records beyond its endpoint summary.
//   summary   - initial/final log distances only
//   distances - plus log ||x_t - x*|| at every step
//   full      - plus per-channel factor logs, signs, and the beta sequence
enum class RecordMode { summary, distances, full };

struct RunConfig {
    const Objective* objective = nullptr;
    ScheduleSpec schedule = ScheduleSpec::iid_arcsine(ConditionClass());
    Eigen::VectorXd x0;
    std::size_t iterations = 0;
    RecordMode record = RecordMode::summary;
    std::optional<InexactGradientModel> inexact;
};

// Gradient descent trace in log scale. The solver stores the offset from the
// minimizer as (unit direction, log magnitude), so distances far below
// DBL_MIN or above DBL_MAX remain measurable; log_* fields are exact
// log distances, never logs of underflowed doubles.
struct Trajectory {
    std::size_t steps = 0;             // steps actually taken
    bool diverged = false;             // iterate left the range of double
    std::size_t blowup_iteration = 0;  // first offending step when diverged
    std::size_t channels = 0;

    double initial_log_distance = 0.0; // log ||x_0 - x*||
    double final_log_distance = 0.0;   // log ||x_n - x*||, -inf if annihilated

    std::vector<double> log_distances;           // distances/full mode, steps+1 entries

    // full mode; factor_logs(t, i) = log |1 - beta_t^{-1} lambda_{t,i}|,
    // computed from lambda and beta directly. lambda is the realized
    // per-channel multiplier: with a deterministic corruption model it
    // includes the (1 +/- epsilon) scaling, so the row sums reproduce the
    // channel dynamics exactly; the ball model is not channel-diagonal and
    // the raw curvature is recorded instead. NaN marks a channel that sat
    // exactly at its minimizer for that step.
    Eigen::MatrixXd factor_logs;
    std::vector<double> betas;
    std::vector<double> initial_channel_log, final_channel_log;   // log |y - y*|_i
    std::vector<std::int8_t> initial_channel_sign, final_channel_sign;

    // Geometric mean contraction per step over the whole run.
    double log_rate() const {
        return (final_log_distance - initial_log_distance) / static_cast<double>(steps);
    }
    double rate() const { return std::exp(log_rate()); }

    // Signed ratio (x_n - x*)/(x_0 - x*) for single-channel runs; requires
    // full recording.
    double signed_ratio() const;
};

// Runs x_{t+1} = x_t - alpha_t * g_t from cfg.x0, where g_t is the exact or
// corrupted gradient and alpha_t comes from the schedule. Finite schedules
// stop the run at their length if it is shorter than cfg.iterations. The
// stream drives both the schedule (iid kinds) and the corruption model.
// Requires x0 != minimizer.
Trajectory run_gd(const RunConfig& cfg, RngStream rng);

// Worst-case per-step contraction of a deterministic finite schedule on
// quadratics with curvature in the class:
//     sup_{lambda in [m,M]} prod_t |1 - alpha_t lambda| ^ (1/n).
// The product's log is strictly concave between consecutive poles 1/alpha_t,
// so the supremum is attained at an interval endpoint or at the single
// stationary point inside a pole gap; each candidate is located by bisection
// on the derivative and cross-checked against a dense grid. Result is
// invariant under reordering of the schedule.
double worst_case_quadratic_rate(const ScheduleSpec& schedule, std::size_t grid_points = 1025);

// Cross-run moments of the factor logs Z_t at one channel. All runs must
// have full recording, identical step counts, and no divergence.
struct FactorStatistics {
    std::size_t runs = 0;
    Eigen::VectorXd mean;          // E-hat[Z_t]
    Eigen::VectorXd variance;      // unbiased per-step variance
    Eigen::VectorXd mean_stderr;   // sqrt(variance / runs)
    Eigen::MatrixXd covariance;    // unbiased cross-step covariance
    Eigen::MatrixXd cov_stderr;    // sd of centered products / sqrt(runs)
};

FactorStatistics factor_statistics(const std::vector<Trajectory>& runs, std::size_t channel = 0);

} // namespace arcstep
