#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "arcstep/condition.hpp"
#include "arcstep/engine.hpp"
#include "arcstep/objectives.hpp"
#include "arcstep/potential.hpp"

namespace arcstep {

// Canonical test objectives. Dimension d gives d coordinates (radial splits
// them into blocks of up to 4). quadratic uses spectrum {M} for d = 1 and an
// equispaced spectrum on [m, M] otherwise.
enum class Benchmark { quadratic, logcosh, logcosh_rotated, radial, piecewise };

// Salt mixed into the batch seed to derive benchmark rotation seeds, keeping
// the rotation stream disjoint from the per-run streams (seed, r).
inline constexpr std::uint64_t kBenchmarkRotationSalt = 0x526f746174654d78ull;

const char* benchmark_name(Benchmark b);
Benchmark benchmark_from_name(const std::string& name);

Objective make_benchmark(Benchmark b, const ConditionClass& cls, std::size_t dim,
                         std::uint64_t rotation_seed = 0);

// Default start: offset 3 in every coordinate from the minimizer.
Eigen::VectorXd benchmark_start(const Objective& objective);

// Normalized result of one experiment. `config` holds every input that
// affects the numbers (class, sizes, seeds); `aggregates` the summary
// statistics; the table the per-run or per-grid-point rows. Wall time is
// carried for logging but deliberately kept out of the serialized forms so
// same-seed reruns are byte-identical.
struct ExperimentReport {
    std::string experiment;
    nlohmann::ordered_json config;
    nlohmann::ordered_json aggregates;
    std::string table_name;                    // CSV basename, e.g. "runs"
    std::vector<std::string> table_header;
    std::vector<std::vector<double>> table_rows;
    double wall_seconds = 0.0;

    nlohmann::ordered_json to_json() const;
    std::string table_csv() const;
};

// Writes <dir>/report.json and <dir>/<table_name>.csv, creating dir if
// needed; returns the written paths. IO failures throw std::runtime_error
// naming the path.
std::vector<std::string> emit_report(const ExperimentReport& report, const std::string& dir);

// ---------------------------------------------------------------------------
// Experiment configurations. Every batch derives run r's stream as
// RngStream(seed, r), so results are independent of thread count.

struct RateConfig {
    ConditionClass cls;
    Benchmark benchmark = Benchmark::logcosh;
    std::size_t dim = 1;
    std::size_t iterations = 1000;
    std::size_t runs = 100;
    std::uint64_t seed = 0;
    int jobs = 0;
};

// Random-schedule convergence: per-run log rate of iid arcsine stepsizes,
// median compared against the accelerated rate.
ExperimentReport rate_convergence(const RateConfig& cfg);

struct HpConfig {
    ConditionClass cls;
    std::size_t dim = 1;
    double accuracy = 0.3;     // epsilon: tolerated excess log rate
    double failure_prob = 0.1; // delta
    std::size_t runs = 10000;
    std::uint64_t seed = 0;
    int jobs = 0;
};

// High-probability guarantee check: runs the horizon
// n* = ceil((pi^2+1) d / (delta epsilon^2)) and verifies the frequency of
// R_n >= e^epsilon * acc_rate stays within delta plus binomial noise.
ExperimentReport hp_validation(const HpConfig& cfg);

struct InstabilityConfig {
    ConditionClass cls;
    std::size_t iterations = 3;
    std::size_t runs = 200000;
    std::uint64_t seed = 0;
    int jobs = 0;
};

// Mean behavior on the stiffest quadratic (lambda = M, x0 = 1): the signed
// ratio x_n/x0 averages to (1 - sqrt(kappa))^n, which grows without bound
// even though typical runs contract.
ExperimentReport instability_demo(const InstabilityConfig& cfg);

struct InexactConfig {
    ConditionClass cls;
    double epsilon = 0.01;
    InexactGradientModel::Mode mode = InexactGradientModel::Mode::overestimate;
    std::size_t iterations = 10000;
    std::size_t runs = 100;
    std::uint64_t seed = 0;
    int jobs = 0;
};

// Relative gradient error slows the contraction by exactly the closed-form
// slowdown factor in the adversarial overestimate direction on the lambda = M
// quadratic; random corruption must do no worse.
ExperimentReport inexact_tightness(const InexactConfig& cfg);

struct ParallelConfig {
    ConditionClass cls;
    std::size_t chains = 64;       // p
    std::size_t segment = 1000;    // k: steps between selections
    std::size_t iterations = 1000; // n: total steps (multiple of segment)
    std::size_t repeats = 20;
    bool select_by_gradient = false; // default: smallest distance
    std::uint64_t seed = 0;
    int jobs = 0;
};

// Best-of-p selection over independently seeded chains, restarting every
// segment from the best iterate; realized speedup compared against the
// exp(-sigma sqrt(2 log p / k)) prediction with sigma estimated empirically.
ExperimentReport parallel_best_of_p(const ParallelConfig& cfg);

struct GameConfig {
    ConditionClass cls;
    std::size_t samples = 10000000; // Monte Carlo draws per payoff
    std::size_t nodes = 1000000;    // quadrature cross-check
    std::uint64_t seed = 0;
};

// Saddle value and lower bound: payoff(arcsine, flipped) recovers the log
// accelerated rate, and every candidate stepsize law scores at least that
// against the flipped law.
ExperimentReport lower_bound_game(const GameConfig& cfg);

struct MeasureConfig {
    ConditionClass cls;
    ScheduleKind kind = ScheduleKind::chebyshev;  // chebyshev or iid_arcsine
    std::vector<std::size_t> lengths = {100, 1000, 10000};
    std::size_t bins = 50;
    std::uint64_t seed = 0;
};

// Binned TV distance between the schedule's empirical inverse-stepsize
// measure and the arcsine law, per length.
ExperimentReport empirical_measure_convergence(const MeasureConfig& cfg);

} // namespace arcstep
