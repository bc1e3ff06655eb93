#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "arcstep/objectives.hpp"

using namespace arcstep;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Eigen::VectorXd fd_gradient(const Objective& obj, const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
    }
    return g;
}

// Two-variable coupled test function whose Hessians at different points do
// not commute: a softmax coupling plus an anisotropic quadratic. Curvature
// stays within [0.5, 2.5].
double coupled(const Eigen::VectorXd& v) {
    double x = v(0), y = v(1);
    double hi = std::max(x, y), lo = std::min(x, y);
    double lse = hi + std::log1p(std::exp(lo - hi));
    return 2.0 * lse + 0.25 * x * x + 0.75 * y * y;
}

} // namespace

TEST_SUITE("objectives") {

TEST_CASE("quadratic component is exactly quadratic") {
    auto q = UnivariateComponent::quadratic(2.5, 3.0);
    CHECK(q.kind() == UnivariateComponent::Kind::quadratic);
    CHECK(q.minimizer() == 3.0);
    CHECK(q.value(3.0) == 0.0);
    CHECK(q.value(5.0) == doctest::Approx(0.5 * 2.5 * 4.0).epsilon(1e-15));
    CHECK(q.derivative(5.0) == doctest::Approx(2.5 * 2.0).epsilon(1e-15));
    CHECK(q.derivative(3.0) == 0.0);
    CHECK(q.curvature_at_offset(0.0) == 2.5);
    CHECK(q.curvature_at_offset(1e-200) == 2.5);
    CHECK(q.curvature_at_offset(1e200) == 2.5);
    CHECK(q.curvature_min() == 2.5);
    CHECK(q.curvature_max() == 2.5);
    CHECK(q.even());
    CHECK_THROWS_AS(UnivariateComponent::quadratic(0.0), std::invalid_argument);
    CHECK_THROWS_AS(UnivariateComponent::quadratic(-1.0), std::invalid_argument);
}

TEST_CASE("log-cosh component matches its defining formula at moderate offsets") {
    ConditionClass cls(1.0, 4.0);
    auto lc = UnivariateComponent::log_cosh(cls);
    for (double w : {0.1, 0.7, -1.3, 2.0, -5.0}) {
        double direct = 0.5 * 1.0 * w * w + 3.0 * std::log(std::cosh(w));
        CHECK(lc.value(w) == doctest::Approx(direct).epsilon(1e-13));
        double dd = 1.0 * w + 3.0 * std::tanh(w);
        CHECK(lc.derivative(w) == doctest::Approx(dd).epsilon(1e-13));
        CHECK(lc.curvature_at_offset(w) == doctest::Approx(dd / w).epsilon(1e-13));
    }
    CHECK(lc.even());
    CHECK(lc.curvature_min() == 1.0);
    CHECK(lc.curvature_max() == 4.0);
}

TEST_CASE("log-cosh component stays exact at extreme offsets") {
    ConditionClass cls(1.0, 4.0);
    auto lc = UnivariateComponent::log_cosh(cls);

    // Curvature limit at the center is M, approached quadratically.
    CHECK(lc.curvature_at_offset(0.0) == 4.0);
    CHECK(lc.curvature_at_offset(1e-300) == 4.0);
    double w = 1e-6;
    double series = 4.0 - 3.0 * w * w / 3.0;
    CHECK(lc.curvature_at_offset(w) == doctest::Approx(series).epsilon(1e-12));

    // Far out the extra term is affine: value ~ 0.5 m w^2 + (M-m)(|w| - log 2).
    double big = 800.0;
    double asym = 0.5 * big * big + 3.0 * (big - std::log(2.0));
    CHECK(std::isfinite(lc.value(big)));
    CHECK(lc.value(big) == doctest::Approx(asym).epsilon(1e-14));
    CHECK(lc.derivative(big) == doctest::Approx(big + 3.0).epsilon(1e-14));
    // tanh(w)/w underflows against m, so the ratio hits m exactly.
    CHECK(lc.curvature_at_offset(1e300) == 1.0);
}

TEST_CASE("piecewise quadratic accumulates values and slopes across breaks") {
    // Steep outside, shallow in the middle: curvature 4 / 1 / 4 with
    // breakpoints at offsets -1 and 1.
    auto pw = UnivariateComponent::piecewise_quadratic({-1.0, 1.0}, {4.0, 1.0, 4.0});
    CHECK(pw.curvature_min() == 1.0);
    CHECK(pw.curvature_max() == 4.0);
    CHECK(pw.even());

    CHECK(pw.value(0.0) == 0.0);
    CHECK(pw.derivative(0.0) == 0.0);
    CHECK(pw.value(1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pw.derivative(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    // Across the break: f(2) = 0.5 + 1*1 + 0.5*4 = 3.5, f'(2) = 1 + 4 = 5.
    CHECK(pw.value(2.0) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(pw.derivative(2.0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(pw.curvature_at_offset(2.0) == doctest::Approx(2.5).epsilon(1e-15));
    // Mirror side.
    CHECK(pw.value(-2.0) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(pw.derivative(-2.0) == doctest::Approx(-5.0).epsilon(1e-15));
    CHECK(pw.curvature_at_offset(-2.0) == doctest::Approx(2.5).epsilon(1e-15));

    // C^1 across the break.
    CHECK(std::abs(pw.derivative(1.0 + 1e-9) - pw.derivative(1.0 - 1e-9)) <= 2e-8);

    auto uneven = UnivariateComponent::piecewise_quadratic({-1.0, 1.0}, {4.0, 1.0, 2.0});
    CHECK_FALSE(uneven.even());
    auto shifted_breaks = UnivariateComponent::piecewise_quadratic({-1.0, 0.5}, {4.0, 1.0, 4.0});
    CHECK_FALSE(shifted_breaks.even());

    CHECK_THROWS_AS(UnivariateComponent::piecewise_quadratic({1.0, -1.0}, {4.0, 1.0, 4.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(UnivariateComponent::piecewise_quadratic({-1.0, 1.0}, {4.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(UnivariateComponent::piecewise_quadratic({-1.0, 1.0}, {4.0, 0.0, 4.0}),
                    std::invalid_argument);
}

TEST_CASE("shifted minimizers never round tiny offsets away") {
    // With minimizer 3, an offset of 1e-50 would vanish if x* + w were ever
    // formed; curvature must still come from the interval containing zero.
    auto pw = UnivariateComponent::piecewise_quadratic({-1.0, 1.0}, {4.0, 1.0, 4.0}, 3.0);
    CHECK(pw.curvature_at_offset(1e-50) == 1.0);
    CHECK(pw.curvature_at_offset(-1e-50) == 1.0);
    auto lc = UnivariateComponent::log_cosh(ConditionClass(1.0, 4.0), -7.0);
    CHECK(lc.curvature_at_offset(1e-200) == 4.0);
}

TEST_CASE("components round-trip through json") {
    ConditionClass cls(0.5, 2.0);
    auto comps = std::vector<UnivariateComponent>{
        UnivariateComponent::quadratic(1.25, -2.0),
        UnivariateComponent::log_cosh(cls, 0.5),
        UnivariateComponent::piecewise_quadratic({-0.5, 0.25}, {2.0, 0.5, 1.0}, 1.0),
    };
    for (const auto& c : comps) {
        auto round = UnivariateComponent::from_json(c.to_json());
        CHECK(round.kind() == c.kind());
        CHECK(round.minimizer() == c.minimizer());
        CHECK(round.to_json() == c.to_json());
        for (double w : {-1.7, -0.3, 0.0, 0.4, 2.2}) {
            CHECK(round.value(c.minimizer() + w) == c.value(c.minimizer() + w));
            CHECK(round.derivative(c.minimizer() + w) == c.derivative(c.minimizer() + w));
        }
    }
}

TEST_CASE("component derivatives agree with finite differences of the value") {
    ConditionClass cls(1.0, 4.0);
    auto lc = UnivariateComponent::log_cosh(cls);
    auto pw = UnivariateComponent::piecewise_quadratic({-1.0, 1.0}, {4.0, 1.0, 4.0});
    double h = 1e-6;
    for (double w : {-2.3, -0.6, 0.3, 0.7, 1.9}) {
        double fd_lc = (lc.value(w + h) - lc.value(w - h)) / (2.0 * h);
        CHECK(std::abs(lc.derivative(w) - fd_lc) <= 1e-5);
        double fd_pw = (pw.value(w + h) - pw.value(w - h)) / (2.0 * h);
        CHECK(std::abs(pw.derivative(w) - fd_pw) <= 1e-5);
    }
}

TEST_CASE("random rotations are orthogonal and stream-deterministic") {
    RngStream a(5, 0);
    RngStream b(5, 0);
    auto U = random_rotation(6, a);
    auto V = random_rotation(6, b);
    CHECK((U - V).norm() == 0.0);
    CHECK((U.transpose() * U - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-12);

    RngStream c(6, 0);
    auto W = random_rotation(6, c);
    CHECK((U - W).norm() > 1e-3);

    RngStream d(1, 0);
    auto one = random_rotation(1, d);
    CHECK(one(0, 0) == 1.0);
}

TEST_CASE("separable objective evaluates componentwise") {
    ConditionClass cls(1.0, 4.0);
    std::vector<UnivariateComponent> comps;
    for (int i = 0; i < 3; ++i) comps.push_back(UnivariateComponent::log_cosh(cls));
    auto obj = Objective::separable(cls, comps);

    CHECK(obj.dim() == 3);
    CHECK(obj.channel_count() == 3);
    CHECK_FALSE(obj.rotated());
    CHECK(obj.minimizer().norm() == 0.0);

    auto x = vec({0.5, -1.0, 2.0});
    double expect = comps[0].value(0.5) + comps[1].value(-1.0) + comps[2].value(2.0);
    CHECK(obj.value(x) == doctest::Approx(expect).epsilon(1e-14));
    auto g = obj.gradient(x);
    CHECK(g(0) == doctest::Approx(comps[0].derivative(0.5)).epsilon(1e-14));
    CHECK(g(1) == doctest::Approx(comps[1].derivative(-1.0)).epsilon(1e-14));
    CHECK(g(2) == doctest::Approx(comps[2].derivative(2.0)).epsilon(1e-14));
    CHECK(obj.value(obj.minimizer()) == 0.0);
    CHECK(obj.gradient(obj.minimizer()).norm() == 0.0);
}

TEST_CASE("rotated objectives keep the chain rule") {
    ConditionClass cls(1.0, 4.0);
    auto obj = Objective::quadratic(cls, {1.0, 2.5, 4.0}, std::nullopt, 11u);
    CHECK(obj.rotated());

    auto x = vec({0.7, -0.2, 1.1});
    auto g = obj.gradient(x);
    auto fd = fd_gradient(obj, x, 1e-6);
    CHECK((g - fd).norm() <= 1e-6);

    // Rotations preserve the norm, so value along a diagonal-basis axis
    // matches the matching component.
    auto y = obj.to_diagonal_basis(x);
    CHECK(std::abs(y.norm() - x.norm()) <= 1e-12);
    CHECK((obj.from_diagonal_basis(y) - x).norm() <= 1e-12);
}

TEST_CASE("objective factories validate the curvature range") {
    ConditionClass cls(1.0, 4.0);
    CHECK_THROWS_AS(Objective::quadratic(cls, {0.5, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Objective::quadratic(cls, {2.0, 4.5}), std::invalid_argument);
    CHECK_THROWS_AS(Objective::quadratic(cls, {}), std::invalid_argument);
    CHECK_NOTHROW(Objective::quadratic(cls, {1.0, 4.0}));
    // Radial profiles must be even.
    RadialBlock odd{UnivariateComponent::piecewise_quadratic({0.5}, {1.0, 2.0}), 2};
    CHECK_THROWS_AS(Objective::radially_separable(cls, {odd}), std::invalid_argument);
    // Rotation matrix must be orthogonal and match the dimension.
    Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(Objective::quadratic(cls, {1.0, 4.0}, bad), std::invalid_argument);
}

TEST_CASE("curvature ratios mark centered channels with nan") {
    ConditionClass cls(1.0, 4.0);
    std::vector<UnivariateComponent> comps;
    for (int i = 0; i < 3; ++i) comps.push_back(UnivariateComponent::log_cosh(cls));
    auto obj = Objective::separable(cls, comps);

    auto r = obj.curvature_ratios(vec({0.5, 0.0, -2.0}));
    CHECK(r(0) >= cls.m());
    CHECK(r(0) <= cls.M());
    CHECK(std::isnan(r(1)));
    CHECK(r(2) >= cls.m());
    CHECK(r(2) <= cls.M());

    // Radial objective: one channel per block, ratio from the block radius.
    std::vector<RadialBlock> blocks{{UnivariateComponent::log_cosh(cls), 2},
                                    {UnivariateComponent::log_cosh(cls), 3}};
    auto rad = Objective::radially_separable(cls, blocks);
    CHECK(rad.dim() == 5);
    CHECK(rad.channel_count() == 2);
    auto rr = rad.curvature_ratios(vec({0.3, -0.4, 0.0, 0.0, 0.0}));
    CHECK(rr.size() == 2);
    CHECK(rr(0) == doctest::Approx(blocks[0].profile.curvature_at_offset(0.5)).epsilon(1e-12));
    CHECK(std::isnan(rr(1)));
}

TEST_CASE("curvature action matches the scaled gradient at moderate scales") {
    ConditionClass cls(1.0, 4.0);
    std::vector<UnivariateComponent> comps;
    for (int i = 0; i < 4; ++i) comps.push_back(UnivariateComponent::log_cosh(cls));
    auto obj = Objective::separable(cls, comps, std::nullopt, 23u);

    Eigen::VectorXd u = vec({0.6, -0.3, 0.55, -0.48});
    u /= u.norm();
    double ell = std::log(2.5);
    auto act = obj.curvature_action(u, ell);

    Eigen::VectorXd x = obj.minimizer() + std::exp(ell) * u;
    Eigen::VectorXd expect = std::exp(-ell) * obj.gradient(x);
    CHECK((act.action - expect).norm() <= 1e-12 * expect.norm());
    for (Eigen::Index i = 0; i < act.lambdas.size(); ++i) {
        CHECK(act.lambdas(i) >= cls.m());
        CHECK(act.lambdas(i) <= cls.M());
    }
    CHECK((act.channel_coords - obj.to_diagonal_basis(u)).norm() <= 1e-12);

    // The in-place overload reuses its buffers and reproduces the result.
    Objective::CurvatureAction buf;
    obj.curvature_action(u, ell, buf);
    CHECK((buf.action - act.action).norm() == 0.0);
    const double* data = buf.action.data();
    obj.curvature_action(u, 0.25, buf);
    CHECK(buf.action.data() == data);
}

TEST_CASE("curvature action saturates exactly at extreme scales") {
    ConditionClass cls(1.0, 4.0);
    std::vector<UnivariateComponent> comps;
    for (int i = 0; i < 3; ++i) comps.push_back(UnivariateComponent::log_cosh(cls));
    auto obj = Objective::separable(cls, comps);

    Eigen::VectorXd u = vec({0.5, -0.7, 0.6});
    u /= u.norm();

    // Deep contraction: every channel sits at the curvature ceiling M.
    auto tiny = obj.curvature_action(u, -2000.0);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(tiny.lambdas(i) == cls.M());
    CHECK((tiny.action - cls.M() * u).norm() <= 1e-14);

    // Blow-up: tanh saturates and the ratio collapses to the floor m.
    auto huge = obj.curvature_action(u, 2000.0);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(huge.lambdas(i) == cls.m());

    // A zero coordinate is an annihilated channel: nan ratio, no action.
    Eigen::VectorXd axis = vec({1.0, 0.0, 0.0});
    auto on_axis = obj.curvature_action(axis, 0.0);
    CHECK(std::isnan(on_axis.lambdas(1)));
    CHECK(on_axis.action(1) == 0.0);
}

TEST_CASE("objectives round-trip through json") {
    ConditionClass cls(1.0, 4.0);

    auto seeded = Objective::quadratic(cls, {1.0, 2.0, 4.0}, std::nullopt, 31u);
    auto seeded_rt = Objective::from_json(seeded.to_json());
    CHECK(seeded_rt.to_json() == seeded.to_json());
    auto x = vec({0.4, -1.2, 0.9});
    CHECK(seeded_rt.value(x) == seeded.value(x));
    CHECK((seeded_rt.gradient(x) - seeded.gradient(x)).norm() == 0.0);

    RngStream rr(77, 0);
    auto mat = random_rotation(3, rr);
    auto explicit_rot = Objective::quadratic(cls, {1.0, 2.0, 4.0}, mat);
    auto explicit_rt = Objective::from_json(explicit_rot.to_json());
    CHECK(std::abs(explicit_rt.value(x) - explicit_rot.value(x)) <= 1e-12);

    std::vector<RadialBlock> blocks{{UnivariateComponent::log_cosh(cls), 3},
                                    {UnivariateComponent::log_cosh(cls), 2}};
    auto rad = Objective::radially_separable(cls, blocks);
    auto rad_rt = Objective::from_json(rad.to_json());
    CHECK(rad_rt.channel_count() == 2);
    auto z = vec({0.1, -0.2, 0.3, 0.4, -0.5});
    CHECK(rad_rt.value(z) == rad.value(z));
}

TEST_CASE("finite-difference hessian recovers a rotated spectrum") {
    ConditionClass cls(1.0, 4.0);
    auto obj = Objective::quadratic(cls, {1.0, 2.5, 4.0}, std::nullopt, 3u);
    auto x = vec({0.2, 0.1, -0.3});
    auto H = fd_hessian([&](const Eigen::VectorXd& p) { return obj.value(p); }, x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    CHECK(std::abs(eig.eigenvalues()(0) - 1.0) <= 1e-5);
    CHECK(std::abs(eig.eigenvalues()(1) - 2.5) <= 1e-5);
    CHECK(std::abs(eig.eigenvalues()(2) - 4.0) <= 1e-5);
}

TEST_CASE("commuting hessians accept rotated separable objectives") {
    ConditionClass cls(1.0, 4.0);
    std::vector<UnivariateComponent> comps;
    for (int i = 0; i < 3; ++i) comps.push_back(UnivariateComponent::log_cosh(cls));
    auto obj = Objective::separable(cls, comps, std::nullopt, 13u);

    std::vector<Eigen::VectorXd> probes{vec({0.0, 0.0, 0.0}), vec({1.0, -0.5, 0.3}),
                                        vec({-0.4, 0.8, 1.2})};
    double tol = 1e-3 * cls.M() * cls.M();
    auto report = check_commuting_hessians(obj, probes, tol);
    CHECK(report.consistent_with_separable);
    CHECK(report.max_commutator_norm <= tol);
    CHECK(report.tolerance == tol);
}

TEST_CASE("commuting hessians reject a genuinely coupled function") {
    std::vector<Eigen::VectorXd> probes{vec({0.0, 0.0}), vec({3.0, 0.0})};
    double tol = 1e-3 * 2.5 * 2.5;
    auto report = check_commuting_hessians(coupled, probes, tol);
    CHECK_FALSE(report.consistent_with_separable);
    CHECK(report.max_commutator_norm > 10.0 * tol);
    CHECK(report.worst_i != report.worst_j);

    CHECK_THROWS_AS(check_commuting_hessians(coupled, {probes[0]}, tol), std::invalid_argument);
    CHECK_THROWS_AS(check_commuting_hessians(coupled, probes, 0.0), std::invalid_argument);
}

TEST_CASE("inexact gradients scale or perturb within the stated ball") {
    ConditionClass cls(1.0, 4.0);
    std::vector<UnivariateComponent> comps;
    for (int i = 0; i < 3; ++i) comps.push_back(UnivariateComponent::log_cosh(cls));
    auto obj = Objective::separable(cls, comps);
    auto x = vec({0.8, -0.5, 1.4});
    auto g = obj.gradient(x);

    InexactGradientModel over{0.1, InexactGradientModel::Mode::overestimate};
    CHECK((inexact_gradient(over, obj, x) - 1.1 * g).norm() <= 1e-15);
    InexactGradientModel under{0.1, InexactGradientModel::Mode::underestimate};
    CHECK((inexact_gradient(under, obj, x) - 0.9 * g).norm() <= 1e-15);

    InexactGradientModel ball{0.1, InexactGradientModel::Mode::random_in_ball};
    CHECK_THROWS_AS(inexact_gradient(ball, obj, x), std::invalid_argument);
    RngStream rng(4, 0);
    double bound = 0.1 * g.norm() * (1.0 + 1e-12);
    bool any_off_center = false;
    for (int i = 0; i < 500; ++i) {
        auto gt = inexact_gradient(ball, obj, x, &rng);
        double dist = (gt - g).norm();
        CHECK(dist <= bound);
        if (dist > 1e-4 * g.norm()) any_off_center = true;
    }
    CHECK(any_off_center);

    InexactGradientModel exact{0.0, InexactGradientModel::Mode::overestimate};
    CHECK((inexact_gradient(exact, obj, x) - g).norm() == 0.0);
    InexactGradientModel bad{1.0, InexactGradientModel::Mode::overestimate};
    CHECK_THROWS_AS(inexact_gradient(bad, obj, x), std::invalid_argument);
}

} // TEST_SUITE
