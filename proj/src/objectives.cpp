#include "arcstep/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arcstep {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log cosh w without overflow: |w| - log 2 + log1p(exp(-2|w|)).
double log_cosh_value(double w) {
    double a = std::abs(w);
    return a - 0.6931471805599453094172321 + std::log1p(std::exp(-2.0 * a));
}

// tanh(w)/w, exact limits at both ends of the double range.
double tanhc(double w) {
    double a = std::abs(w);
    if (a < 1e-4) {
        double w2 = w * w;
        return 1.0 - w2 / 3.0 + (2.0 / 15.0) * w2 * w2;
    }
    return std::tanh(w) / w;
}

} // namespace

UnivariateComponent UnivariateComponent::quadratic(double curvature, double minimizer) {
    if (!(std::isfinite(curvature) && curvature > 0.0))
        throw std::invalid_argument("quadratic component: curvature must be positive");
    UnivariateComponent c;
    c.kind_ = Kind::quadratic;
    c.minimizer_ = minimizer;
    c.lo_ = c.hi_ = curvature;
    return c;
}

UnivariateComponent UnivariateComponent::log_cosh(const ConditionClass& cls, double minimizer) {
    UnivariateComponent c;
    c.kind_ = Kind::log_cosh;
    c.minimizer_ = minimizer;
    c.lo_ = cls.m();
    c.hi_ = cls.M();
    return c;
}

UnivariateComponent UnivariateComponent::piecewise_quadratic(std::vector<double> breakpoints,
                                                             std::vector<double> curvatures,
                                                             double minimizer) {
    if (curvatures.size() != breakpoints.size() + 1)
        throw std::invalid_argument("piecewise component: need one curvature per interval");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw std::invalid_argument("piecewise component: breakpoints must be strictly increasing");
    for (double b : breakpoints)
        if (!std::isfinite(b)) throw std::invalid_argument("piecewise component: breakpoints must be finite");
    for (double c : curvatures)
        if (!(std::isfinite(c) && c > 0.0))
            throw std::invalid_argument("piecewise component: curvatures must be positive");

    UnivariateComponent c;
    c.kind_ = Kind::piecewise_quadratic;
    c.minimizer_ = minimizer;
    c.breaks_ = std::move(breakpoints);
    c.curv_ = std::move(curvatures);

    // Accumulate f' and f at the breakpoints outward from the minimizer
    // (offset 0), where f' = 0 and f = 0. Interval j spans
    // (breaks[j-1], breaks[j]] and has curvature curv[j].
    const std::size_t k = c.breaks_.size();
    c.deriv_at_break_.assign(k, 0.0);
    c.value_at_break_.assign(k, 0.0);
    const std::size_t i0 = static_cast<std::size_t>(
        std::lower_bound(c.breaks_.begin(), c.breaks_.end(), 0.0) - c.breaks_.begin());
    // upward from 0: anchor g(0) = 0 inside interval i0
    double g = 0.0, v = 0.0, prev = 0.0;
    for (std::size_t j = i0; j < k; ++j) {
        double dw = c.breaks_[j] - prev;
        v += g * dw + 0.5 * c.curv_[j] * dw * dw;
        g += c.curv_[j] * dw;
        c.deriv_at_break_[j] = g;
        c.value_at_break_[j] = v;
        prev = c.breaks_[j];
    }
    // downward from 0
    g = 0.0; v = 0.0; prev = 0.0;
    for (std::size_t j = i0; j-- > 0;) {
        double dw = c.breaks_[j] - prev;   // negative
        v += g * dw + 0.5 * c.curv_[j + 1] * dw * dw;
        g += c.curv_[j + 1] * dw;
        c.deriv_at_break_[j] = g;
        c.value_at_break_[j] = v;
        prev = c.breaks_[j];
    }
    return c;
}

double UnivariateComponent::value(double x) const {
    const double w = x - minimizer_;
    switch (kind_) {
    case Kind::quadratic:
        return 0.5 * lo_ * w * w;
    case Kind::log_cosh:
        return 0.5 * lo_ * w * w + (hi_ - lo_) * log_cosh_value(w);
    case Kind::piecewise_quadratic: {
        const std::size_t k = breaks_.size();
        const std::size_t i = static_cast<std::size_t>(
            std::lower_bound(breaks_.begin(), breaks_.end(), w) - breaks_.begin());
        const std::size_t i0 = static_cast<std::size_t>(
            std::lower_bound(breaks_.begin(), breaks_.end(), 0.0) - breaks_.begin());
        double g0, v0, anchor;
        if (i == i0) { g0 = 0.0; v0 = 0.0; anchor = 0.0; }
        else if (w > 0.0) { g0 = deriv_at_break_[i - 1]; v0 = value_at_break_[i - 1]; anchor = breaks_[i - 1]; }
        else { g0 = deriv_at_break_[i]; v0 = value_at_break_[i]; anchor = breaks_[i]; }
        double dw = w - anchor;
        return v0 + g0 * dw + 0.5 * curv_[i] * dw * dw;
    }
    }
    return kNaN;
}

double UnivariateComponent::deriv_offset(double w) const {
    switch (kind_) {
    case Kind::quadratic:
        return lo_ * w;
    case Kind::log_cosh:
        return lo_ * w + (hi_ - lo_) * std::tanh(w);
    case Kind::piecewise_quadratic: {
        const std::size_t i = static_cast<std::size_t>(
            std::lower_bound(breaks_.begin(), breaks_.end(), w) - breaks_.begin());
        const std::size_t i0 = static_cast<std::size_t>(
            std::lower_bound(breaks_.begin(), breaks_.end(), 0.0) - breaks_.begin());
        if (i == i0) return curv_[i] * w;
        if (w > 0.0) return deriv_at_break_[i - 1] + curv_[i] * (w - breaks_[i - 1]);
        return deriv_at_break_[i] + curv_[i] * (w - breaks_[i]);
    }
    }
    return kNaN;
}

double UnivariateComponent::derivative(double x) const {
    return deriv_offset(x - minimizer_);
}

double UnivariateComponent::curvature_at_offset(double w) const {
    switch (kind_) {
    case Kind::quadratic:
        return lo_;
    case Kind::log_cosh:
        return lo_ + (hi_ - lo_) * tanhc(w);
    case Kind::piecewise_quadratic: {
        if (w == 0.0) {
            const std::size_t i0 = static_cast<std::size_t>(
                std::lower_bound(breaks_.begin(), breaks_.end(), 0.0) - breaks_.begin());
            return curv_[i0];
        }
        // deriv_offset(w)/w is an average of interval curvatures, so it stays
        // inside [min curv, max curv] for every w.
        return deriv_offset(w) / w;
    }
    }
    return kNaN;
}

double UnivariateComponent::curvature_min() const {
    if (kind_ == Kind::piecewise_quadratic) return *std::min_element(curv_.begin(), curv_.end());
    return lo_;
}

double UnivariateComponent::curvature_max() const {
    if (kind_ == Kind::piecewise_quadratic) return *std::max_element(curv_.begin(), curv_.end());
    return hi_;
}

bool UnivariateComponent::even() const {
    switch (kind_) {
    case Kind::quadratic:
    case Kind::log_cosh:
        return true;
    case Kind::piecewise_quadratic: {
        const std::size_t k = breaks_.size();
        for (std::size_t i = 0; i < k; ++i)
            if (std::abs(breaks_[i] + breaks_[k - 1 - i]) > 1e-12) return false;
        for (std::size_t i = 0; i < curv_.size(); ++i)
            if (curv_[i] != curv_[curv_.size() - 1 - i]) return false;
        return true;
    }
    }
    return false;
}

nlohmann::ordered_json UnivariateComponent::to_json() const {
    nlohmann::ordered_json j;
    switch (kind_) {
    case Kind::quadratic:
        j["type"] = "quadratic";
        j["curvature"] = lo_;
        break;
    case Kind::log_cosh:
        j["type"] = "log_cosh";
        j["m"] = lo_;
        j["M"] = hi_;
        break;
    case Kind::piecewise_quadratic:
        j["type"] = "piecewise_quadratic";
        j["breakpoints"] = breaks_;
        j["curvatures"] = curv_;
        break;
    }
    j["minimizer"] = minimizer_;
    return j;
}

UnivariateComponent UnivariateComponent::from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    const double minimizer = j.value("minimizer", 0.0);
    if (type == "quadratic") return quadratic(j.at("curvature").get<double>(), minimizer);
    if (type == "log_cosh")
        return log_cosh(ConditionClass(j.at("m").get<double>(), j.at("M").get<double>()), minimizer);
    if (type == "piecewise_quadratic")
        return piecewise_quadratic(j.at("breakpoints").get<std::vector<double>>(),
                                   j.at("curvatures").get<std::vector<double>>(), minimizer);
    throw std::invalid_argument("unknown component type: " + type);
}

Eigen::MatrixXd random_rotation(std::size_t dim, RngStream& rng) {
    if (dim == 0) throw std::invalid_argument("random_rotation: dim must be positive");
    Eigen::MatrixXd G(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    // Sign-fixing the R diagonal makes the factorization unique and Q
    // Haar-distributed.
    for (std::size_t j = 0; j < dim; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

namespace {

void validate_component_class(const UnivariateComponent& c, const ConditionClass& cls) {
    if (c.curvature_min() < cls.m() || c.curvature_max() > cls.M())
        throw std::invalid_argument("objective: component curvature range escapes [m, M]");
}

} // namespace

Objective Objective::quadratic(const ConditionClass& cls, std::vector<double> spectrum,
                               std::optional<Eigen::MatrixXd> rotation,
                               std::optional<std::uint64_t> rotation_seed) {
    if (spectrum.empty()) throw std::invalid_argument("quadratic objective: empty spectrum");
    Objective o(ObjectiveStructure::quadratic, cls);
    o.components_.reserve(spectrum.size());
    for (double lam : spectrum) {
        auto c = UnivariateComponent::quadratic(lam);
        validate_component_class(c, cls);
        o.components_.push_back(std::move(c));
    }
    o.dim_ = spectrum.size();
    o.finalize(std::move(rotation), rotation_seed);
    return o;
}

Objective Objective::separable(const ConditionClass& cls,
                               std::vector<UnivariateComponent> components,
                               std::optional<Eigen::MatrixXd> rotation,
                               std::optional<std::uint64_t> rotation_seed) {
    if (components.empty()) throw std::invalid_argument("separable objective: no components");
    for (const auto& c : components) validate_component_class(c, cls);
    Objective o(ObjectiveStructure::separable, cls);
    o.dim_ = components.size();
    o.components_ = std::move(components);
    o.finalize(std::move(rotation), rotation_seed);
    return o;
}

Objective Objective::radially_separable(const ConditionClass& cls, std::vector<RadialBlock> blocks,
                                        std::optional<Eigen::MatrixXd> rotation,
                                        std::optional<std::uint64_t> rotation_seed) {
    if (blocks.empty()) throw std::invalid_argument("radial objective: no blocks");
    Objective o(ObjectiveStructure::radially_separable, cls);
    std::size_t dim = 0;
    for (const auto& b : blocks) {
        if (b.size == 0) throw std::invalid_argument("radial objective: empty block");
        if (!b.profile.even() || b.profile.minimizer() != 0.0)
            throw std::invalid_argument("radial objective: profile must be even with minimizer 0");
        validate_component_class(b.profile, cls);
        o.block_offset_.push_back(dim);
        dim += b.size;
    }
    o.dim_ = dim;
    o.blocks_ = std::move(blocks);
    o.finalize(std::move(rotation), rotation_seed);
    return o;
}

void Objective::finalize(std::optional<Eigen::MatrixXd> rotation,
                         std::optional<std::uint64_t> rotation_seed) {
    if (!rotation && rotation_seed) {
        RngStream rng(*rotation_seed, 0);
        rotation = random_rotation(dim_, rng);
    }
    if (rotation) {
        if (rotation->rows() != static_cast<Eigen::Index>(dim_) ||
            rotation->cols() != static_cast<Eigen::Index>(dim_))
            throw std::invalid_argument("objective rotation: dimension mismatch");
        double defect = (rotation->transpose() * (*rotation) -
                         Eigen::MatrixXd::Identity(dim_, dim_)).norm();
        if (defect > 1e-8) throw std::invalid_argument("objective rotation: matrix is not orthogonal");
    }
    rotation_ = std::move(rotation);
    rotation_seed_ = rotation_seed;

    y_star_ = Eigen::VectorXd::Zero(dim_);
    if (structure_ != ObjectiveStructure::radially_separable)
        for (std::size_t i = 0; i < dim_; ++i) y_star_(i) = components_[i].minimizer();
    x_star_ = rotation_ ? Eigen::VectorXd(rotation_->transpose() * y_star_) : y_star_;
}

std::size_t Objective::channel_count() const {
    return structure_ == ObjectiveStructure::radially_separable ? blocks_.size() : dim_;
}

Eigen::VectorXd Objective::to_diagonal_basis(const Eigen::VectorXd& x) const {
    return rotation_ ? Eigen::VectorXd(*rotation_ * x) : x;
}

Eigen::VectorXd Objective::from_diagonal_basis(const Eigen::VectorXd& y) const {
    return rotation_ ? Eigen::VectorXd(rotation_->transpose() * y) : y;
}

double Objective::value(const Eigen::VectorXd& x) const {
    if (x.size() != static_cast<Eigen::Index>(dim_))
        throw std::invalid_argument("objective value: dimension mismatch");
    Eigen::VectorXd y = to_diagonal_basis(x);
    double v = 0.0;
    if (structure_ == ObjectiveStructure::radially_separable) {
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            double r = y.segment(block_offset_[b], blocks_[b].size).norm();
            v += blocks_[b].profile.value(r);
        }
    } else {
        for (std::size_t i = 0; i < dim_; ++i) v += components_[i].value(y(i));
    }
    return v;
}

Eigen::VectorXd Objective::gradient(const Eigen::VectorXd& x) const {
    if (x.size() != static_cast<Eigen::Index>(dim_))
        throw std::invalid_argument("objective gradient: dimension mismatch");
    Eigen::VectorXd y = to_diagonal_basis(x);
    Eigen::VectorXd g(dim_);
    if (structure_ == ObjectiveStructure::radially_separable) {
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto seg = y.segment(block_offset_[b], blocks_[b].size);
            double r = seg.norm();
            // profile'(r)/r * y_S, smooth through r = 0.
            g.segment(block_offset_[b], blocks_[b].size) =
                blocks_[b].profile.curvature_at_offset(r) * seg;
        }
    } else {
        for (std::size_t i = 0; i < dim_; ++i) g(i) = components_[i].derivative(y(i));
    }
    return from_diagonal_basis(g);
}

Eigen::VectorXd Objective::curvature_ratios(const Eigen::VectorXd& x) const {
    if (x.size() != static_cast<Eigen::Index>(dim_))
        throw std::invalid_argument("curvature_ratios: dimension mismatch");
    Eigen::VectorXd y = to_diagonal_basis(x);
    Eigen::VectorXd out(channel_count());
    if (structure_ == ObjectiveStructure::radially_separable) {
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            double r = y.segment(block_offset_[b], blocks_[b].size).norm();
            out(b) = r == 0.0 ? kNaN : blocks_[b].profile.curvature_at_offset(r);
        }
    } else {
        for (std::size_t i = 0; i < dim_; ++i) {
            double w = y(i) - y_star_(i);
            out(i) = w == 0.0 ? kNaN : components_[i].curvature_at_offset(w);
        }
    }
    return out;
}

Objective::CurvatureAction Objective::curvature_action(const Eigen::VectorXd& u,
                                                       double log_scale) const {
    CurvatureAction out;
    curvature_action(u, log_scale, out);
    return out;
}

void Objective::curvature_action(const Eigen::VectorXd& u, double log_scale,
                                 CurvatureAction& out) const {
    if (u.size() != static_cast<Eigen::Index>(dim_))
        throw std::invalid_argument("curvature_action: dimension mismatch");
    const Eigen::Index d = static_cast<Eigen::Index>(dim_);
    const Eigen::Index ch = static_cast<Eigen::Index>(channel_count());
    out.action.resize(d);
    out.action_diag.resize(d);
    out.diag_direction.resize(d);
    out.lambdas.resize(ch);
    out.channel_coords.resize(ch);

    // Evaluate curvatures at the true offset e^{log_scale} * coord. The clamp
    // is exact: every catalog nonlinearity is flat (to double precision)
    // below e^-230 and above e^600, so clamping changes nothing while keeping
    // the products representable.
    const double scale = std::exp(std::clamp(log_scale, -230.0, 600.0));

    if (rotation_)
        out.diag_direction.noalias() = (*rotation_) * u;
    else
        out.diag_direction = u;
    const Eigen::VectorXd& c = out.diag_direction;

    if (structure_ == ObjectiveStructure::radially_separable) {
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            auto seg = c.segment(block_offset_[b], blocks_[b].size);
            double r = seg.norm();
            out.channel_coords(static_cast<Eigen::Index>(b)) = r;
            if (r == 0.0) {
                out.lambdas(static_cast<Eigen::Index>(b)) = kNaN;
                out.action_diag.segment(block_offset_[b], blocks_[b].size).setZero();
            } else {
                double lam = blocks_[b].profile.curvature_at_offset(r * scale);
                out.lambdas(static_cast<Eigen::Index>(b)) = lam;
                out.action_diag.segment(block_offset_[b], blocks_[b].size) = lam * seg;
            }
        }
    } else {
        for (Eigen::Index i = 0; i < d; ++i) {
            out.channel_coords(i) = c(i);
            if (c(i) == 0.0) {
                out.lambdas(i) = kNaN;
                out.action_diag(i) = 0.0;
            } else {
                double lam = components_[static_cast<std::size_t>(i)].curvature_at_offset(c(i) * scale);
                out.lambdas(i) = lam;
                out.action_diag(i) = lam * c(i);
            }
        }
    }
    if (rotation_)
        out.action.noalias() = rotation_->transpose() * out.action_diag;
    else
        out.action = out.action_diag;
}

nlohmann::ordered_json Objective::to_json() const {
    nlohmann::ordered_json j;
    switch (structure_) {
    case ObjectiveStructure::quadratic: j["kind"] = "quadratic"; break;
    case ObjectiveStructure::separable: j["kind"] = "separable"; break;
    case ObjectiveStructure::radially_separable: j["kind"] = "radially_separable"; break;
    }
    j["m"] = cls_.m();
    j["M"] = cls_.M();
    j["dim"] = dim_;
    if (structure_ == ObjectiveStructure::radially_separable) {
        nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
        for (const auto& b : blocks_)
            blocks.push_back({{"size", b.size}, {"profile", b.profile.to_json()}});
        j["blocks"] = std::move(blocks);
    } else {
        nlohmann::ordered_json comps = nlohmann::ordered_json::array();
        for (const auto& c : components_) comps.push_back(c.to_json());
        j["components"] = std::move(comps);
    }
    if (rotation_seed_) {
        j["rotation"] = {{"seed", *rotation_seed_}};
    } else if (rotation_) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < dim_; ++i) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (std::size_t k = 0; k < dim_; ++k) row.push_back((*rotation_)(i, k));
            rows.push_back(std::move(row));
        }
        j["rotation"] = {{"matrix", std::move(rows)}};
    } else {
        j["rotation"] = nullptr;
    }
    return j;
}

Objective Objective::from_json(const nlohmann::json& j) {
    ConditionClass cls(j.at("m").get<double>(), j.at("M").get<double>());
    std::optional<Eigen::MatrixXd> rotation;
    std::optional<std::uint64_t> seed;
    if (j.contains("rotation") && !j.at("rotation").is_null()) {
        const auto& r = j.at("rotation");
        if (r.contains("seed")) {
            seed = r.at("seed").get<std::uint64_t>();
        } else {
            auto rows = r.at("matrix").get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd U(rows.size(), rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size())
                    throw std::invalid_argument("objective rotation: matrix is not square");
                for (std::size_t k = 0; k < rows.size(); ++k) U(i, k) = rows[i][k];
            }
            rotation = std::move(U);
        }
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "quadratic") {
        std::vector<double> spectrum;
        for (const auto& c : j.at("components"))
            spectrum.push_back(c.at("curvature").get<double>());
        return quadratic(cls, std::move(spectrum), std::move(rotation), seed);
    }
    if (kind == "separable") {
        std::vector<UnivariateComponent> comps;
        for (const auto& c : j.at("components")) comps.push_back(UnivariateComponent::from_json(c));
        return separable(cls, std::move(comps), std::move(rotation), seed);
    }
    if (kind == "radially_separable") {
        std::vector<RadialBlock> blocks;
        for (const auto& b : j.at("blocks"))
            blocks.push_back({UnivariateComponent::from_json(b.at("profile")),
                              b.at("size").get<std::size_t>()});
        return radially_separable(cls, std::move(blocks), std::move(rotation), seed);
    }
    throw std::invalid_argument("unknown objective kind: " + kind);
}

Eigen::VectorXd inexact_gradient(const InexactGradientModel& model, const Objective& objective,
                                 const Eigen::VectorXd& x, RngStream* rng) {
    if (!(model.epsilon >= 0.0 && model.epsilon < 1.0))
        throw std::invalid_argument("inexact gradient: epsilon must lie in [0, 1)");
    Eigen::VectorXd g = objective.gradient(x);
    switch (model.mode) {
    case InexactGradientModel::Mode::overestimate:
        return (1.0 + model.epsilon) * g;
    case InexactGradientModel::Mode::underestimate:
        return (1.0 - model.epsilon) * g;
    case InexactGradientModel::Mode::random_in_ball: {
        if (rng == nullptr)
            throw std::invalid_argument("inexact gradient: random_in_ball needs a random stream");
        if (model.epsilon == 0.0) return g;
        Eigen::VectorXd dir(g.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) dir(i) = rng->normal();
        double norm = dir.norm();
        if (norm == 0.0) return g;
        // uniform in the ball: direction on the sphere, radius ~ U^{1/d}
        double radius = model.epsilon * g.norm() *
                        std::pow(rng->uniform01(), 1.0 / static_cast<double>(g.size()));
        return g + (radius / norm) * dir;
    }
    }
    throw std::logic_error("inexact_gradient: unreachable");
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double step_scale) {
    if (!(step_scale > 0.0)) throw std::invalid_argument("fd_hessian: step must be positive");
    const Eigen::Index d = x.size();
    const double h = step_scale * (1.0 + x.norm());
    Eigen::MatrixXd H(d, d);
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
        for (Eigen::Index j = i + 1; j < d; ++j) {
            Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
            xpp(i) += h; xpp(j) += h;
            xpm(i) += h; xpm(j) -= h;
            xmp(i) -= h; xmp(j) += h;
            xmm(i) -= h; xmm(j) -= h;
            double v = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
            H(i, j) = H(j, i) = v;
        }
    }
    if (!H.allFinite()) throw std::runtime_error("fd_hessian: non-finite difference quotient");
    return H;
}

CommutatorReport check_commuting_hessians(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const std::vector<Eigen::VectorXd>& probes,
                                          double tolerance, double step_scale) {
    if (probes.size() < 2)
        throw std::invalid_argument("check_commuting_hessians: need at least two probe points");
    if (!(tolerance > 0.0))
        throw std::invalid_argument("check_commuting_hessians: tolerance must be positive");
    std::vector<Eigen::MatrixXd> hessians;
    hessians.reserve(probes.size());
    for (const auto& p : probes) hessians.push_back(fd_hessian(f, p, step_scale));

    CommutatorReport report;
    report.tolerance = tolerance;
    for (std::size_t i = 0; i < hessians.size(); ++i) {
        for (std::size_t j = i + 1; j < hessians.size(); ++j) {
            Eigen::MatrixXd C = hessians[i] * hessians[j] - hessians[j] * hessians[i];
            double norm = C.jacobiSvd().singularValues()(0);
            if (norm > report.max_commutator_norm) {
                report.max_commutator_norm = norm;
                report.worst_i = i;
                report.worst_j = j;
            }
        }
    }
    report.consistent_with_separable = report.max_commutator_norm <= tolerance;
    return report;
}

CommutatorReport check_commuting_hessians(const Objective& objective,
                                          const std::vector<Eigen::VectorXd>& probes,
                                          double tolerance, double step_scale) {
    return check_commuting_hessians(
        [&objective](const Eigen::VectorXd& x) { return objective.value(x); }, probes, tolerance,
        step_scale);
}

} // namespace arcstep
