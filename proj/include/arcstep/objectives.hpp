#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "arcstep/condition.hpp"
#include "arcstep/rng.hpp"

namespace arcstep {

// One-dimensional building block: smooth (or piecewise-smooth) convex
// function with curvature confined to a known interval. The offset argument
// w below always means distance from the component's minimizer, w = x - x*.
//
// curvature_at_offset(w) returns f'(x* + w) / w, the average curvature seen
// by a gradient step at offset w. It is evaluated in forms that stay exact
// for |w| far below and far above the component's O(1) feature scale, which
// is what lets the solver track trajectories whose true magnitude has left
// the range of double.
class UnivariateComponent {
public:
    enum class Kind { quadratic, log_cosh, piecewise_quadratic };

    // f(x) = 0.5 * curvature * (x - x*)^2.
    static UnivariateComponent quadratic(double curvature, double minimizer = 0.0);

    // f(x) = 0.5 m (x-x*)^2 + (M-m) log cosh(x-x*); curvature spans (m, M].
    static UnivariateComponent log_cosh(const ConditionClass& cls, double minimizer = 0.0);

    // C^1 convex piecewise quadratic around x*: curvature is curvatures[j] on
    // the j-th interval of the breakpoint partition (breakpoints are offsets
    // from x*, strictly increasing; curvatures has one more entry).
    static UnivariateComponent piecewise_quadratic(std::vector<double> breakpoints,
                                                   std::vector<double> curvatures,
                                                   double minimizer = 0.0);

    Kind kind() const { return kind_; }
    double minimizer() const { return minimizer_; }

    double value(double x) const;
    double derivative(double x) const;
    // f'(x*+w)/w; at w = 0 returns the one-sided curvature limit (the
    // second derivative from the right).
    double curvature_at_offset(double w) const;

    // Closed interval containing every curvature ratio of this component.
    double curvature_min() const;
    double curvature_max() const;

    // Symmetric about the minimizer; required of radial profiles.
    bool even() const;

    nlohmann::ordered_json to_json() const;
    static UnivariateComponent from_json(const nlohmann::json& j);

private:
    UnivariateComponent() = default;

    // Derivative as a function of the offset w = x - x*, never forming
    // x* + w (which would round tiny offsets away against a large minimizer).
    double deriv_offset(double w) const;

    Kind kind_ = Kind::quadratic;
    double minimizer_ = 0.0;
    // quadratic / log_cosh parameters
    double lo_ = 0.0;   // quadratic curvature, or m for log_cosh
    double hi_ = 0.0;   // M for log_cosh
    // piecewise data, in offset coordinates
    std::vector<double> breaks_;
    std::vector<double> curv_;
    std::vector<double> deriv_at_break_;   // accumulated f' at each breakpoint
    std::vector<double> value_at_break_;   // accumulated f at each breakpoint
};

// Block of coordinates on which the objective depends only through the
// radius: f_S(y_S) = profile(||y_S - y*_S||). profile must be even with
// minimizer 0 so the block gradient profile'(r)/r * (y_S - y*_S) is smooth
// through the center.
struct RadialBlock {
    UnivariateComponent profile;
    std::size_t size;
};

enum class ObjectiveStructure { quadratic, separable, radially_separable };

// Haar-distributed rotation: QR of a Gaussian matrix with the R diagonal
// sign-fixed. Deterministic in the stream.
Eigen::MatrixXd random_rotation(std::size_t dim, RngStream& rng);

// Objective f(x) = h(Ux) where h is coordinate-separable (or block-radial)
// and U is an optional rotation. Gradients satisfy grad f(x) = U^T grad h(Ux)
// and the curvature of every channel stays inside the condition class.
class Objective {
public:
    static Objective quadratic(const ConditionClass& cls, std::vector<double> spectrum,
                               std::optional<Eigen::MatrixXd> rotation = std::nullopt,
                               std::optional<std::uint64_t> rotation_seed = std::nullopt);
    static Objective separable(const ConditionClass& cls,
                               std::vector<UnivariateComponent> components,
                               std::optional<Eigen::MatrixXd> rotation = std::nullopt,
                               std::optional<std::uint64_t> rotation_seed = std::nullopt);
    static Objective radially_separable(const ConditionClass& cls,
                                        std::vector<RadialBlock> blocks,
                                        std::optional<Eigen::MatrixXd> rotation = std::nullopt,
                                        std::optional<std::uint64_t> rotation_seed = std::nullopt);

    ObjectiveStructure structure() const { return structure_; }
    const ConditionClass& cls() const { return cls_; }
    std::size_t dim() const { return dim_; }
    bool rotated() const { return rotation_.has_value(); }

    // Channels are the independent one-dimensional dynamics of a run:
    // one per coordinate for quadratic/separable, one per block for radial.
    std::size_t channel_count() const;

    // Global minimizer in x coordinates.
    const Eigen::VectorXd& minimizer() const { return x_star_; }

    double value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

    // Per-channel curvature ratio at x. Channels sitting exactly at their
    // minimizer have an undefined ratio and come back as NaN markers; every
    // finite entry lies in [m, M].
    Eigen::VectorXd curvature_ratios(const Eigen::VectorXd& x) const;

    // Scaled-gradient evaluation for the solver: with offset v = e^ell * u
    // from the minimizer, returns e^{-ell} * grad f(x* + v) together with the
    // per-channel curvatures and the diagonal-basis channel coordinates of u
    // (signed coordinate for separable channels, block norm for radial ones).
    // diag_direction and action_diag hold the diagonal-basis direction Uu and
    // action; they double as reusable buffers for the in-place overload,
    // which performs no allocation once the struct is sized.
    struct CurvatureAction {
        Eigen::VectorXd action;
        Eigen::VectorXd action_diag;
        Eigen::VectorXd diag_direction;
        Eigen::VectorXd lambdas;
        Eigen::VectorXd channel_coords;
    };
    CurvatureAction curvature_action(const Eigen::VectorXd& u, double log_scale) const;
    void curvature_action(const Eigen::VectorXd& u, double log_scale, CurvatureAction& out) const;

    Eigen::VectorXd to_diagonal_basis(const Eigen::VectorXd& x) const;
    Eigen::VectorXd from_diagonal_basis(const Eigen::VectorXd& y) const;

    nlohmann::ordered_json to_json() const;
    static Objective from_json(const nlohmann::json& j);

private:
    Objective(ObjectiveStructure s, const ConditionClass& cls) : structure_(s), cls_(cls) {}
    void finalize(std::optional<Eigen::MatrixXd> rotation,
                  std::optional<std::uint64_t> rotation_seed);

    ObjectiveStructure structure_;
    ConditionClass cls_;
    std::size_t dim_ = 0;
    std::vector<UnivariateComponent> components_;   // quadratic / separable
    std::vector<RadialBlock> blocks_;               // radial
    std::vector<std::size_t> block_offset_;         // start coordinate per block
    std::optional<Eigen::MatrixXd> rotation_;
    std::optional<std::uint64_t> rotation_seed_;
    Eigen::VectorXd y_star_;   // minimizer in diagonal basis
    Eigen::VectorXd x_star_;
};

// Relative gradient corruption ||g~ - g|| <= epsilon * ||g||.
struct InexactGradientModel {
    enum class Mode { overestimate, underestimate, random_in_ball };
    double epsilon = 0.0;
    Mode mode = Mode::overestimate;
};

// Applies the corruption model to the exact gradient at x. random_in_ball
// draws uniformly from the closed epsilon*||g|| ball and needs the stream;
// the deterministic modes scale by (1 +/- epsilon).
Eigen::VectorXd inexact_gradient(const InexactGradientModel& model, const Objective& objective,
                                 const Eigen::VectorXd& x, RngStream* rng = nullptr);

// Central-difference Hessian with per-point step h = step_scale * (1 + ||x||).
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double step_scale = 1e-4);

struct CommutatorReport {
    double max_commutator_norm = 0.0;
    double tolerance = 0.0;
    bool consistent_with_separable = false;
    std::size_t worst_i = 0;   // probe indices of the worst pair
    std::size_t worst_j = 0;
};

// Finite-difference Hessians at each probe point, spectral norm of every
// pairwise commutator H_i H_j - H_j H_i. Simultaneous diagonalizability
// (hence separability after rotation) implies all commutators vanish; a
// commutator well above fd noise certifies the objective is not separable in
// any rotated basis. Requires at least two probes and finite values of f
// near each probe.
CommutatorReport check_commuting_hessians(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const std::vector<Eigen::VectorXd>& probes,
                                          double tolerance, double step_scale = 1e-4);

CommutatorReport check_commuting_hessians(const Objective& objective,
                                          const std::vector<Eigen::VectorXd>& probes,
                                          double tolerance, double step_scale = 1e-4);

} // namespace arcstep
