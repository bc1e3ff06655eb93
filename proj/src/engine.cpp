#include "arcstep/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "arcstep/summation.hpp"

namespace arcstep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kLogDblMax = std::log(std::numeric_limits<double>::max());

// Stream-id bit reserved for the gradient-corruption draws, so they never
// collide with the schedule draws of the same run (experiments derive their
// per-run stream ids from small integers and never set the top bit).
constexpr std::uint64_t kCorruptionStream = 0x8000000000000000ull;

std::int8_t sign_of(double x) {
    if (x > 0.0) return 1;
    if (x < 0.0) return -1;
    return 0;
}

} // namespace

double Trajectory::signed_ratio() const {
    if (channels != 1 || initial_channel_log.size() != 1 || final_channel_log.size() != 1)
        throw std::logic_error("signed_ratio: needs a single-channel run with full recording");
    if (final_channel_log[0] == -std::numeric_limits<double>::infinity()) return 0.0;
    double mag = std::exp(final_channel_log[0] - initial_channel_log[0]);
    return initial_channel_sign[0] * final_channel_sign[0] < 0 ? -mag : mag;
}

Trajectory run_gd(const RunConfig& cfg, RngStream rng) {
    if (cfg.objective == nullptr) throw std::invalid_argument("run_gd: no objective");
    const Objective& obj = *cfg.objective;
    if (cfg.iterations == 0) throw std::invalid_argument("run_gd: iterations must be positive");
    if (cfg.x0.size() != static_cast<Eigen::Index>(obj.dim()))
        throw std::invalid_argument("run_gd: x0 dimension mismatch");
    const ConditionClass& scls = cfg.schedule.cls();
    if (scls.m() != obj.cls().m() || scls.M() != obj.cls().M())
        throw std::invalid_argument("run_gd: schedule and objective disagree on the condition class");
    if (cfg.inexact && !(cfg.inexact->epsilon >= 0.0 && cfg.inexact->epsilon < 1.0))
        throw std::invalid_argument("run_gd: corruption epsilon must lie in [0, 1)");

    std::size_t n = cfg.iterations;
    if (auto len = cfg.schedule.length()) n = std::min(n, *len);

    ScheduleStream sched(cfg.schedule, rng);
    RngStream corruption(rng.seed(), rng.stream_id() ^ kCorruptionStream);

    Eigen::VectorXd v0 = cfg.x0 - obj.minimizer();
    double norm0 = v0.norm();
    if (!(norm0 > 0.0)) throw std::invalid_argument("run_gd: x0 must differ from the minimizer");
    double ell = std::log(norm0);
    Eigen::VectorXd u = v0 / norm0;

    const bool rec_d = cfg.record != RecordMode::summary;
    const bool rec_f = cfg.record == RecordMode::full;

    Trajectory out;
    out.channels = obj.channel_count();
    out.initial_log_distance = ell;
    if (rec_d) {
        out.log_distances.reserve(n + 1);
        out.log_distances.push_back(ell);
    }
    if (rec_f) {
        out.factor_logs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out.channels));
        out.betas.reserve(n);
    }

    // Deterministic corruption scales every channel multiplier by the same
    // factor; the ball model perturbs the action vector directly.
    double lam_scale = 1.0;
    bool ball = false;
    double eps = 0.0;
    if (cfg.inexact) {
        eps = cfg.inexact->epsilon;
        switch (cfg.inexact->mode) {
        case InexactGradientModel::Mode::overestimate: lam_scale = 1.0 + eps; break;
        case InexactGradientModel::Mode::underestimate: lam_scale = 1.0 - eps; break;
        case InexactGradientModel::Mode::random_in_ball: ball = true; break;
        }
    }

    Objective::CurvatureAction act;
    obj.curvature_action(u, ell, act);
    if (rec_f) {
        out.initial_channel_log.resize(out.channels);
        out.initial_channel_sign.resize(out.channels);
        for (std::size_t i = 0; i < out.channels; ++i) {
            double coord = act.channel_coords(static_cast<Eigen::Index>(i));
            out.initial_channel_log[i] = ell + std::log(std::abs(coord));
            out.initial_channel_sign[i] = sign_of(coord);
        }
    }

    Eigen::VectorXd u_next(u.size());
    Eigen::VectorXd ball_dir(u.size());
    bool annihilated = false;

    std::size_t t = 0;
    for (; t < n; ++t) {
        const Step st = sched.next();
        if (rec_f) {
            for (std::size_t i = 0; i < out.channels; ++i) {
                double lam = act.lambdas(static_cast<Eigen::Index>(i));
                out.factor_logs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) =
                    std::isnan(lam) ? kNaN : std::log(std::abs(1.0 - lam * lam_scale / st.beta));
            }
            out.betas.push_back(st.beta);
        }

        if (ball) {
            // corruption ball radius eps * ||gradient||, expressed in the
            // scaled frame where the gradient is act.action
            double gnorm = act.action.norm();
            for (Eigen::Index i = 0; i < ball_dir.size(); ++i) ball_dir(i) = corruption.normal();
            double dn = ball_dir.norm();
            double radius = eps * gnorm *
                            std::pow(corruption.uniform01(),
                                     1.0 / static_cast<double>(ball_dir.size()));
            if (dn > 0.0)
                u_next.noalias() = u - st.alpha * act.action - (st.alpha * radius / dn) * ball_dir;
            else
                u_next.noalias() = u - st.alpha * act.action;
        } else {
            u_next.noalias() = u - (st.alpha * lam_scale) * act.action;
        }

        double norm = u_next.norm();
        if (!std::isfinite(norm)) {
            out.diverged = true;
            out.blowup_iteration = t;
            if (rec_d) out.log_distances.push_back(kNaN);
            ++t;
            break;
        }
        if (norm == 0.0) {
            annihilated = true;
            ell = -std::numeric_limits<double>::infinity();
            if (rec_d) out.log_distances.push_back(ell);
            ++t;
            break;
        }
        ell += std::log(norm);
        u = u_next / norm;
        if (rec_d) out.log_distances.push_back(ell);
        if (ell > kLogDblMax) {
            out.diverged = true;
            out.blowup_iteration = t;
            ++t;
            break;
        }
        obj.curvature_action(u, ell, act);
    }

    out.steps = t;
    out.final_log_distance = ell;
    if (rec_f) {
        if (t < n) {
            out.factor_logs.conservativeResize(static_cast<Eigen::Index>(t), Eigen::NoChange);
        }
        out.final_channel_log.resize(out.channels);
        out.final_channel_sign.resize(out.channels);
        if (annihilated) {
            for (std::size_t i = 0; i < out.channels; ++i) {
                out.final_channel_log[i] = -std::numeric_limits<double>::infinity();
                out.final_channel_sign[i] = 0;
            }
        } else {
            obj.curvature_action(u, ell, act);
            for (std::size_t i = 0; i < out.channels; ++i) {
                double coord = act.channel_coords(static_cast<Eigen::Index>(i));
                out.final_channel_log[i] = ell + std::log(std::abs(coord));
                out.final_channel_sign[i] = sign_of(coord);
            }
        }
    }
    return out;
}

namespace {

// log prod_t |1 - lambda / beta_t| and its derivative in lambda.
double schedule_log_product(const std::vector<double>& betas, double lambda) {
    return pairwise_sum(betas.size(), [&](std::size_t t) {
        return std::log(std::abs(1.0 - lambda / betas[t]));
    });
}

double schedule_log_product_deriv(const std::vector<double>& betas, double lambda) {
    double s = 0.0;
    for (double b : betas) s += 1.0 / (lambda - b);
    return s;
}

} // namespace

double worst_case_quadratic_rate(const ScheduleSpec& schedule, std::size_t grid_points) {
    if (grid_points < 2)
        throw std::invalid_argument("worst_case_quadratic_rate: need at least two grid points");
    const ConditionClass& cls = schedule.cls();

    if (schedule.kind() == ScheduleKind::constant) {
        double a = schedule.constant_alpha();
        return std::max(std::abs(1.0 - a * cls.m()), std::abs(1.0 - a * cls.M()));
    }
    if (!schedule.finite())
        throw std::invalid_argument("worst_case_quadratic_rate: random schedules have no deterministic worst case");

    const std::vector<double> betas = schedule.inverse_stepsizes();
    const std::size_t n = betas.size();

    std::vector<double> poles = betas;
    std::sort(poles.begin(), poles.end());
    poles.erase(std::unique(poles.begin(), poles.end()), poles.end());

    // The log product is strictly concave on each interval between
    // consecutive poles (second derivative -sum 1/(lambda-beta)^2 < 0), so
    // its maximum over [m, M] is at m, at M, or at the unique stationary
    // point of a pole gap, found by bisecting the decreasing derivative.
    std::vector<double> candidates = {cls.m(), cls.M()};
    std::vector<std::pair<double, double>> gaps;
    gaps.emplace_back(cls.m(), poles.front());
    for (std::size_t i = 0; i + 1 < poles.size(); ++i) gaps.emplace_back(poles[i], poles[i + 1]);
    gaps.emplace_back(poles.back(), cls.M());

    for (auto [a, b] : gaps) {
        double width = b - a;
        if (!(width > 0.0)) continue;
        double lo = a + 1e-14 * width;
        double hi = b - 1e-14 * width;
        double dlo = schedule_log_product_deriv(betas, lo);
        double dhi = schedule_log_product_deriv(betas, hi);
        if (!(dlo > 0.0 && dhi < 0.0)) continue;   // maximum sits at a gap edge
        for (int it = 0; it < 200 && hi - lo > 1e-17 * (std::abs(lo) + std::abs(hi)); ++it) {
            double mid = 0.5 * (lo + hi);
            (schedule_log_product_deriv(betas, mid) > 0.0 ? lo : hi) = mid;
        }
        candidates.push_back(0.5 * (lo + hi));
    }

    double best = -std::numeric_limits<double>::infinity();
    for (double lam : candidates) best = std::max(best, schedule_log_product(betas, lam));
    // dense grid backstop over the whole class
    for (std::size_t j = 0; j < grid_points; ++j) {
        double lam = cls.m() + (cls.M() - cls.m()) * static_cast<double>(j) /
                                   static_cast<double>(grid_points - 1);
        best = std::max(best, schedule_log_product(betas, lam));
    }
    return std::exp(best / static_cast<double>(n));
}

FactorStatistics factor_statistics(const std::vector<Trajectory>& runs, std::size_t channel) {
    if (runs.empty()) throw std::invalid_argument("factor_statistics: no runs");
    const std::size_t steps = runs[0].steps;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const Trajectory& tr = runs[r];
        if (tr.diverged)
            throw std::invalid_argument("factor_statistics: run " + std::to_string(r) + " diverged");
        if (tr.steps != steps || tr.factor_logs.rows() != static_cast<Eigen::Index>(steps))
            throw std::invalid_argument("factor_statistics: run " + std::to_string(r) +
                                        " lacks full recording over a common step count");
        if (channel >= tr.channels)
            throw std::invalid_argument("factor_statistics: channel out of range");
        for (std::size_t t = 0; t < steps; ++t)
            if (std::isnan(tr.factor_logs(static_cast<Eigen::Index>(t),
                                          static_cast<Eigen::Index>(channel))))
                throw std::invalid_argument("factor_statistics: run " + std::to_string(r) +
                                            " has an annihilated channel at step " +
                                            std::to_string(t));
    }

    const std::size_t R = runs.size();
    const Eigen::Index ch = static_cast<Eigen::Index>(channel);
    Eigen::MatrixXd Z(R, steps);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t t = 0; t < steps; ++t)
            Z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) =
                runs[r].factor_logs(static_cast<Eigen::Index>(t), ch);

    FactorStatistics st;
    st.runs = R;
    st.mean.resize(static_cast<Eigen::Index>(steps));
    st.variance.resize(static_cast<Eigen::Index>(steps));
    st.mean_stderr.resize(static_cast<Eigen::Index>(steps));
    for (std::size_t t = 0; t < steps; ++t) {
        const Eigen::Index tt = static_cast<Eigen::Index>(t);
        st.mean(tt) = pairwise_sum(R, [&](std::size_t r) {
                          return Z(static_cast<Eigen::Index>(r), tt);
                      }) / static_cast<double>(R);
    }
    Eigen::MatrixXd C = Z;
    for (std::size_t t = 0; t < steps; ++t)
        C.col(static_cast<Eigen::Index>(t)).array() -= st.mean(static_cast<Eigen::Index>(t));

    const double unbias = R > 1 ? static_cast<double>(R - 1) : 1.0;
    for (std::size_t t = 0; t < steps; ++t) {
        const Eigen::Index tt = static_cast<Eigen::Index>(t);
        double ss = pairwise_sum(R, [&](std::size_t r) {
            double c = C(static_cast<Eigen::Index>(r), tt);
            return c * c;
        });
        st.variance(tt) = ss / unbias;
        st.mean_stderr(tt) = std::sqrt(st.variance(tt) / static_cast<double>(R));
    }

    st.covariance.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(steps));
    st.cov_stderr.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(steps));
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t t = s; t < steps; ++t) {
            const Eigen::Index si = static_cast<Eigen::Index>(s);
            const Eigen::Index ti = static_cast<Eigen::Index>(t);
            double sum_p = pairwise_sum(R, [&](std::size_t r) {
                return C(static_cast<Eigen::Index>(r), si) * C(static_cast<Eigen::Index>(r), ti);
            });
            double mean_p = sum_p / static_cast<double>(R);
            double sum_sq = pairwise_sum(R, [&](std::size_t r) {
                double p = C(static_cast<Eigen::Index>(r), si) * C(static_cast<Eigen::Index>(r), ti) -
                           mean_p;
                return p * p;
            });
            st.covariance(si, ti) = st.covariance(ti, si) = sum_p / unbias;
            double sd = std::sqrt(sum_sq / static_cast<double>(R));
            st.cov_stderr(si, ti) = st.cov_stderr(ti, si) = sd / std::sqrt(static_cast<double>(R));
        }
    }
    return st;
}

} // namespace arcstep
