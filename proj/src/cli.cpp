#include "arcstep/cli.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "arcstep/experiments.hpp"

namespace arcstep {

namespace {

// Class selection shared by every subcommand: either --kappa (class [1/k, 1])
// or an explicit --m/--M pair.
struct ClassOpts {
    double kappa = 0.0;
    double m = 0.0;
    double M = 0.0;
    CLI::Option* kappa_opt = nullptr;
    CLI::Option* m_opt = nullptr;
    CLI::Option* M_opt = nullptr;

    void attach(CLI::App* cmd) {
        kappa_opt = cmd->add_option("--kappa", kappa, "condition number; selects the class [1/kappa, 1]");
        m_opt = cmd->add_option("--m", m, "curvature lower bound");
        M_opt = cmd->add_option("--M", M, "curvature upper bound");
        kappa_opt->excludes(m_opt);
        kappa_opt->excludes(M_opt);
        m_opt->needs(M_opt);
        M_opt->needs(m_opt);
    }

    ConditionClass resolve() const {
        if (kappa_opt->count() > 0) return ConditionClass::from_kappa(kappa);
        if (m_opt->count() > 0 && M_opt->count() > 0) return ConditionClass(m, M);
        throw std::invalid_argument("specify the class with --kappa or with both --m and --M");
    }
};

struct SeedOpt {
    std::uint64_t value = 0;
    CLI::Option* opt = nullptr;

    void attach(CLI::App* cmd) {
        opt = cmd->add_option("--seed", value,
                              "random seed (default: ARCSTEP_SEED environment variable, else 0)");
    }

    std::uint64_t resolve() const {
        if (opt->count() > 0) return value;
        if (const char* env = std::getenv("ARCSTEP_SEED")) {
            std::string s(env);
            if (s.empty()) return 0;
            errno = 0;
            char* end = nullptr;
            unsigned long long v = std::strtoull(s.c_str(), &end, 10);
            if (errno != 0 || end == nullptr || *end != '\0')
                throw std::invalid_argument("ARCSTEP_SEED is not an unsigned integer: " + s);
            return static_cast<std::uint64_t>(v);
        }
        return 0;
    }
};

// Fails fast, before any computation, if the report directory cannot take
// files; failures here are configuration errors (exit 2), while failures
// during the actual write are runtime errors (exit 1).
void preflight_out_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw std::invalid_argument("output directory " + dir + " cannot be created: " + ec.message());
    const fs::path probe = fs::path(dir) / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw std::invalid_argument("output directory " + dir + " is not writable");
    }
    fs::remove(probe, ec);
}

void finish_report(const ExperimentReport& report, const std::string& out_dir) {
    std::cout << report.to_json().dump(2) << '\n';
    if (!out_dir.empty()) {
        auto paths = emit_report(report, out_dir);
        for (const auto& p : paths) std::cerr << "wrote " << p << '\n';
    }
}

// Built-in demonstration of a coupled objective: a softmax term plus an
// anisotropic quadratic. Its Hessians at distinct points do not commute, so
// no fixed rotation makes it coordinate-separable. Curvatures stay in
// [0.5, 2.5].
double coupled_demo(const Eigen::VectorXd& v) {
    double x = v(0), y = v(1);
    double mx = std::max(x, y);
    double lse = mx + std::log(std::exp(x - mx) + std::exp(y - mx));
    return 2.0 * lse + 0.25 * x * x + 0.75 * y * y;
}

InexactGradientModel::Mode mode_from_name(const std::string& name) {
    if (name == "overestimate") return InexactGradientModel::Mode::overestimate;
    if (name == "underestimate") return InexactGradientModel::Mode::underestimate;
    if (name == "random_in_ball") return InexactGradientModel::Mode::random_in_ball;
    throw std::invalid_argument("unknown corruption mode: " + name);
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{
        "Stepsize schedules for gradient descent on ill-conditioned problems: "
        "random arcsine, Chebyshev, and constant schedules, with experiments on "
        "convergence rates, stability, gradient errors, and stepsize games."};
    app.name("arcstep");
    app.require_subcommand(1);

    // ---- rate ----
    auto* rate_cmd = app.add_subcommand("rate", "per-run convergence rate of the random schedule");
    ClassOpts rate_class;
    rate_class.attach(rate_cmd);
    SeedOpt rate_seed;
    rate_seed.attach(rate_cmd);
    std::string rate_benchmark = "logcosh";
    RateConfig rate_cfg;
    std::string rate_out;
    rate_cmd->add_option("--benchmark", rate_benchmark,
                         "objective: quadratic, logcosh, logcosh_rotated, radial, piecewise");
    rate_cmd->add_option("--dim", rate_cfg.dim, "problem dimension");
    rate_cmd->add_option("--iterations,-n", rate_cfg.iterations, "steps per run");
    rate_cmd->add_option("--runs", rate_cfg.runs, "independent runs");
    rate_cmd->add_option("--jobs", rate_cfg.jobs, "worker threads (0 = all cores)");
    rate_cmd->add_option("--out", rate_out, "directory for report.json and the run table");

    // ---- hp ----
    auto* hp_cmd = app.add_subcommand("hp", "failure frequency at the high-probability horizon");
    ClassOpts hp_class;
    hp_class.attach(hp_cmd);
    SeedOpt hp_seed;
    hp_seed.attach(hp_cmd);
    HpConfig hp_cfg;
    std::string hp_out;
    hp_cmd->add_option("--dim", hp_cfg.dim, "problem dimension");
    hp_cmd->add_option("--accuracy", hp_cfg.accuracy, "tolerated excess log rate (epsilon)");
    hp_cmd->add_option("--failure-prob", hp_cfg.failure_prob, "target failure probability (delta)");
    hp_cmd->add_option("--runs", hp_cfg.runs, "independent runs");
    hp_cmd->add_option("--jobs", hp_cfg.jobs, "worker threads (0 = all cores)");
    hp_cmd->add_option("--out", hp_out, "directory for report.json and the run table");

    // ---- instability ----
    auto* inst_cmd =
        app.add_subcommand("instability", "signed mean blow-up on the stiffest quadratic");
    ClassOpts inst_class;
    inst_class.attach(inst_cmd);
    SeedOpt inst_seed;
    inst_seed.attach(inst_cmd);
    InstabilityConfig inst_cfg;
    std::string inst_out;
    inst_cmd->add_option("--iterations,-n", inst_cfg.iterations, "steps per run");
    inst_cmd->add_option("--runs", inst_cfg.runs, "independent runs");
    inst_cmd->add_option("--jobs", inst_cfg.jobs, "worker threads (0 = all cores)");
    inst_cmd->add_option("--out", inst_out, "directory for report.json and the run table");

    // ---- inexact ----
    auto* inex_cmd =
        app.add_subcommand("inexact", "slowdown under relative gradient corruption");
    ClassOpts inex_class;
    inex_class.attach(inex_cmd);
    SeedOpt inex_seed;
    inex_seed.attach(inex_cmd);
    InexactConfig inex_cfg;
    std::string inex_out;
    std::string inex_mode = "overestimate";
    inex_cmd->add_option("--epsilon", inex_cfg.epsilon, "relative gradient error in [0, 1)");
    inex_cmd->add_option("--mode", inex_mode,
                         "corruption direction: overestimate, underestimate, random_in_ball");
    inex_cmd->add_option("--iterations,-n", inex_cfg.iterations, "steps per run");
    inex_cmd->add_option("--runs", inex_cfg.runs, "independent runs");
    inex_cmd->add_option("--jobs", inex_cfg.jobs, "worker threads (0 = all cores)");
    inex_cmd->add_option("--out", inex_out, "directory for report.json and the run table");

    // ---- parallel ----
    auto* par_cmd = app.add_subcommand(
        "parallel", "best-of-p chain selection against the single-chain baseline");
    ClassOpts par_class;
    par_class.attach(par_cmd);
    SeedOpt par_seed;
    par_seed.attach(par_cmd);
    ParallelConfig par_cfg;
    std::string par_out;
    par_cmd->add_option("--chains", par_cfg.chains, "parallel chains p");
    par_cmd->add_option("--segment", par_cfg.segment, "steps between selections");
    par_cmd->add_option("--iterations,-n", par_cfg.iterations,
                        "total steps (multiple of --segment)");
    par_cmd->add_option("--repeats", par_cfg.repeats, "independent repeats");
    par_cmd->add_flag("--select-by-gradient", par_cfg.select_by_gradient,
                      "select chains by gradient magnitude instead of distance");
    par_cmd->add_option("--jobs", par_cfg.jobs, "worker threads (0 = all cores)");
    par_cmd->add_option("--out", par_out, "directory for report.json and the repeat table");

    // ---- game ----
    auto* game_cmd = app.add_subcommand(
        "game", "stepsize game: saddle payoff and candidate lower bounds");
    ClassOpts game_class;
    game_class.attach(game_cmd);
    SeedOpt game_seed;
    game_seed.attach(game_cmd);
    GameConfig game_cfg;
    std::string game_out;
    game_cmd->add_option("--samples", game_cfg.samples, "Monte Carlo draws for the saddle payoff");
    game_cmd->add_option("--nodes", game_cfg.nodes, "quadrature nodes for the cross-check");
    game_cmd->add_option("--out", game_out, "directory for report.json and the payoff table");

    // ---- equalize ----
    auto* eq_cmd = app.add_subcommand(
        "equalize", "expected log factor across the class against the accelerated rate");
    ClassOpts eq_class;
    eq_class.attach(eq_cmd);
    SeedOpt eq_seed;
    eq_seed.attach(eq_cmd);
    std::size_t eq_grid = 101;
    std::size_t eq_nodes = 1000000;
    std::size_t eq_samples = 100000;
    bool eq_flipped = false;
    std::string eq_method = "quadrature";
    std::string eq_out;
    eq_cmd->add_option("--grid", eq_grid, "grid points across [m, M]");
    eq_cmd->add_option("--nodes", eq_nodes, "quadrature nodes per grid point");
    eq_cmd->add_flag("--flipped", eq_flipped,
                     "equalize over the curvature player's flipped law instead");
    eq_cmd->add_option("--method", eq_method, "flipped integration: quadrature or mc");
    eq_cmd->add_option("--samples", eq_samples, "Monte Carlo draws per grid point (mc method)");
    eq_cmd->add_option("--out", eq_out, "directory for report.json and the grid table");

    // ---- schedule-measure ----
    auto* meas_cmd = app.add_subcommand(
        "schedule-measure", "TV distance of the empirical inverse-stepsize measure");
    ClassOpts meas_class;
    meas_class.attach(meas_cmd);
    SeedOpt meas_seed;
    meas_seed.attach(meas_cmd);
    MeasureConfig meas_cfg;
    std::string meas_kind = "chebyshev";
    std::string meas_out;
    meas_cmd->add_option("--kind", meas_kind, "schedule kind: chebyshev or iid_arcsine");
    meas_cmd->add_option("--lengths", meas_cfg.lengths, "schedule lengths to measure");
    meas_cmd->add_option("--bins", meas_cfg.bins, "histogram bins over [m, M]");
    meas_cmd->add_option("--out", meas_out, "directory for report.json and the length table");

    // ---- commute-check ----
    auto* comm_cmd = app.add_subcommand(
        "commute-check", "finite-difference test that Hessians commute across probe points");
    ClassOpts comm_class;
    comm_class.attach(comm_cmd);
    SeedOpt comm_seed;
    comm_seed.attach(comm_cmd);
    std::string comm_benchmark = "logcosh_rotated";
    std::size_t comm_dim = 2;
    std::size_t comm_probes = 3;
    double comm_tolerance = 0.0;
    double comm_step = 1e-4;
    bool comm_counter = false;
    comm_cmd->add_option("--benchmark", comm_benchmark, "objective to probe");
    comm_cmd->add_option("--dim", comm_dim, "problem dimension");
    comm_cmd->add_option("--probes", comm_probes, "number of random probe points");
    comm_cmd->add_option("--tolerance", comm_tolerance,
                         "commutator tolerance (default 1e-3 * M^2)");
    comm_cmd->add_option("--step-scale", comm_step, "finite-difference step scale");
    comm_cmd->add_flag("--counterexample", comm_counter,
                       "probe the built-in coupled objective instead of a benchmark");

    // ---- potential ----
    auto* pot_cmd = app.add_subcommand(
        "potential", "closed-form rate quantities from the equilibrium potential");
    ClassOpts pot_class;
    pot_class.attach(pot_cmd);
    double pot_lambda = 0.0;
    double pot_epsilon = 0.0;
    double pot_z = 0.0;
    double pot_zi = 0.0;
    auto* pot_lambda_opt =
        pot_cmd->add_option("--lambda", pot_lambda, "report the expected log factor at lambda");
    auto* pot_eps_opt =
        pot_cmd->add_option("--epsilon", pot_epsilon, "report the slowdown at gradient error epsilon");
    auto* pot_z_opt =
        pot_cmd->add_option("--z", pot_z, "report the potential at z (real part)");
    pot_cmd->add_option("--zi", pot_zi, "imaginary part for --z");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help and friends
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (rate_cmd->parsed()) {
            rate_cfg.cls = rate_class.resolve();
            rate_cfg.benchmark = benchmark_from_name(rate_benchmark);
            rate_cfg.seed = rate_seed.resolve();
            if (!rate_out.empty()) preflight_out_dir(rate_out);
            finish_report(rate_convergence(rate_cfg), rate_out);
        } else if (hp_cmd->parsed()) {
            hp_cfg.cls = hp_class.resolve();
            hp_cfg.seed = hp_seed.resolve();
            if (!hp_out.empty()) preflight_out_dir(hp_out);
            finish_report(hp_validation(hp_cfg), hp_out);
        } else if (inst_cmd->parsed()) {
            inst_cfg.cls = inst_class.resolve();
            inst_cfg.seed = inst_seed.resolve();
            if (!inst_out.empty()) preflight_out_dir(inst_out);
            finish_report(instability_demo(inst_cfg), inst_out);
        } else if (inex_cmd->parsed()) {
            inex_cfg.cls = inex_class.resolve();
            inex_cfg.mode = mode_from_name(inex_mode);
            inex_cfg.seed = inex_seed.resolve();
            if (!inex_out.empty()) preflight_out_dir(inex_out);
            finish_report(inexact_tightness(inex_cfg), inex_out);
        } else if (par_cmd->parsed()) {
            par_cfg.cls = par_class.resolve();
            par_cfg.seed = par_seed.resolve();
            if (!par_out.empty()) preflight_out_dir(par_out);
            finish_report(parallel_best_of_p(par_cfg), par_out);
        } else if (game_cmd->parsed()) {
            game_cfg.cls = game_class.resolve();
            game_cfg.seed = game_seed.resolve();
            if (!game_out.empty()) preflight_out_dir(game_out);
            finish_report(lower_bound_game(game_cfg), game_out);
        } else if (eq_cmd->parsed()) {
            ConditionClass cls = eq_class.resolve();
            if (eq_method != "quadrature" && eq_method != "mc")
                throw std::invalid_argument("unknown method: " + eq_method);
            if (!eq_out.empty()) preflight_out_dir(eq_out);
            EqualizationReport eq;
            ExperimentReport rep;
            if (eq_flipped) {
                FlippedMethod method = eq_method == "mc" ? FlippedMethod::monte_carlo
                                                         : FlippedMethod::quadrature;
                RngStream rng(eq_seed.resolve(), 0);
                eq = flipped_equalization_residual(
                    cls, eq_grid, method, method == FlippedMethod::monte_carlo ? eq_samples : eq_nodes,
                    &rng);
                rep.experiment = "flipped_equalization";
                rep.config = {{"m", cls.m()}, {"M", cls.M()}, {"kappa", cls.kappa()},
                              {"grid", eq_grid}, {"method", eq_method}};
                if (eq_method == "mc") {
                    rep.config["samples"] = eq_samples;
                    rep.config["seed"] = eq_seed.resolve();
                } else {
                    rep.config["nodes"] = eq_nodes;
                }
            } else {
                eq = equalization_residual(cls, eq_grid, eq_nodes);
                rep.experiment = "equalization";
                rep.config = {{"m", cls.m()}, {"M", cls.M()}, {"kappa", cls.kappa()},
                              {"grid", eq_grid}, {"nodes", eq_nodes}};
            }
            rep.aggregates["log_acc_rate"] = eq.log_acc_rate;
            rep.aggregates["max_abs_residual"] = eq.max_abs_residual;
            rep.aggregates["argmax_point"] = eq.argmax_point;
            rep.table_name = "grid";
            rep.table_header = {"point", "value", "residual"};
            for (const auto& row : eq.rows)
                rep.table_rows.push_back({row.point, row.value, row.residual});
            finish_report(rep, eq_out);
        } else if (meas_cmd->parsed()) {
            meas_cfg.cls = meas_class.resolve();
            if (meas_kind == "chebyshev") meas_cfg.kind = ScheduleKind::chebyshev;
            else if (meas_kind == "iid_arcsine") meas_cfg.kind = ScheduleKind::iid_arcsine;
            else throw std::invalid_argument("unknown schedule kind: " + meas_kind);
            meas_cfg.seed = meas_seed.resolve();
            if (!meas_out.empty()) preflight_out_dir(meas_out);
            finish_report(empirical_measure_convergence(meas_cfg), meas_out);
        } else if (comm_cmd->parsed()) {
            CommutatorReport report;
            nlohmann::ordered_json j;
            if (comm_counter) {
                double tol = comm_tolerance > 0.0 ? comm_tolerance : 1e-3 * 2.5 * 2.5;
                std::vector<Eigen::VectorXd> probes;
                Eigen::VectorXd p0(2), p1(2);
                p0 << 0.0, 0.0;
                p1 << 3.0, 0.0;
                probes = {p0, p1};
                report = check_commuting_hessians(coupled_demo, probes, tol, comm_step);
                j["objective"] = "coupled_demo";
            } else {
                ConditionClass cls = comm_class.resolve();
                std::uint64_t seed = comm_seed.resolve();
                Objective obj = make_benchmark(benchmark_from_name(comm_benchmark), cls, comm_dim,
                                               seed ^ kBenchmarkRotationSalt);
                if (comm_probes < 2)
                    throw std::invalid_argument("need at least two probe points");
                RngStream rng(seed, 0);
                std::vector<Eigen::VectorXd> probes(comm_probes);
                for (auto& p : probes) {
                    p.resize(static_cast<Eigen::Index>(obj.dim()));
                    for (Eigen::Index i = 0; i < p.size(); ++i)
                        p(i) = -3.0 + 6.0 * rng.uniform01();
                    p += obj.minimizer();
                }
                double tol = comm_tolerance > 0.0 ? comm_tolerance : 1e-3 * cls.M() * cls.M();
                report = check_commuting_hessians(obj, probes, tol, comm_step);
                j["objective"] = comm_benchmark;
            }
            j["max_commutator_norm"] = report.max_commutator_norm;
            j["tolerance"] = report.tolerance;
            j["consistent_with_separable"] = report.consistent_with_separable;
            j["worst_pair"] = {report.worst_i, report.worst_j};
            std::cout << j.dump(2) << '\n';
        } else if (pot_cmd->parsed()) {
            ConditionClass cls = pot_class.resolve();
            nlohmann::ordered_json j;
            j["m"] = cls.m();
            j["M"] = cls.M();
            j["kappa"] = cls.kappa();
            j["acc_rate"] = cls.acc_rate();
            j["log_acc_rate"] = cls.log_acc_rate();
            j["log_acc_rate_potential_route"] = rate_value(cls);
            j["route_difference"] = rate_value(cls) - cls.log_acc_rate();
            if (pot_lambda_opt->count() > 0)
                j["equalized_log_factor"] = equalized_log_factor(cls, pot_lambda);
            if (pot_eps_opt->count() > 0) {
                j["slowdown"] = inexact_slowdown(cls, pot_epsilon);
                j["log_slowdown"] = std::log(inexact_slowdown(cls, pot_epsilon));
            }
            if (pot_z_opt->count() > 0)
                j["potential"] = equilibrium_potential(std::complex<double>(pot_z, pot_zi));
            std::cout << j.dump(2) << '\n';
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? static_cast<std::size_t>(argc - 1) : 0);
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

} // namespace arcstep
