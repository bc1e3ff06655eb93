#include "arcstep/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arcstep {

namespace {

void validate_permutation(const std::vector<std::size_t>& perm, std::size_t n) {
    if (perm.size() != n)
        throw std::invalid_argument("schedule permutation: size " + std::to_string(perm.size()) +
                                    " does not match length " + std::to_string(n));
    std::vector<bool> seen(n, false);
    for (std::size_t v : perm) {
        if (v >= n || seen[v])
            throw std::invalid_argument("schedule permutation: not a bijection on [0, n)");
        seen[v] = true;
    }
}

const char* order_name(ChebyshevOrder o) {
    switch (o) {
    case ChebyshevOrder::natural: return "natural";
    case ChebyshevOrder::reversed: return "reversed";
    case ChebyshevOrder::permuted: return "permuted";
    }
    return "natural";
}

ChebyshevOrder order_from_name(const std::string& s) {
    if (s == "natural") return ChebyshevOrder::natural;
    if (s == "reversed") return ChebyshevOrder::reversed;
    if (s == "permuted") return ChebyshevOrder::permuted;
    throw std::invalid_argument("unknown chebyshev order: " + s);
}

} // namespace

ScheduleSpec ScheduleSpec::constant(const ConditionClass& cls, double alpha) {
    if (!(std::isfinite(alpha) && alpha > 0.0))
        throw std::invalid_argument("constant schedule: stepsize must be positive and finite");
    ScheduleSpec s(ScheduleKind::constant, cls);
    s.alpha_ = alpha;
    return s;
}

ScheduleSpec ScheduleSpec::chebyshev(const ConditionClass& cls, std::size_t n,
                                     ChebyshevOrder order, std::vector<std::size_t> permutation) {
    if (n == 0) throw std::invalid_argument("chebyshev schedule: length must be positive");
    if (order == ChebyshevOrder::permuted) {
        validate_permutation(permutation, n);
    } else if (!permutation.empty()) {
        throw std::invalid_argument("chebyshev schedule: permutation given but order is not 'permuted'");
    }
    ScheduleSpec s(ScheduleKind::chebyshev, cls);
    s.n_ = n;
    s.order_ = order;
    s.permutation_ = std::move(permutation);
    return s;
}

ScheduleSpec ScheduleSpec::iid_arcsine(const ConditionClass& cls) {
    return ScheduleSpec(ScheduleKind::iid_arcsine, cls);
}

std::optional<std::size_t> ScheduleSpec::length() const {
    if (kind_ == ScheduleKind::chebyshev) return n_;
    return std::nullopt;
}

double ScheduleSpec::constant_alpha() const {
    if (kind_ != ScheduleKind::constant)
        throw std::logic_error("constant_alpha: schedule is not constant");
    return alpha_;
}

std::size_t ScheduleSpec::chebyshev_n() const {
    if (kind_ != ScheduleKind::chebyshev)
        throw std::logic_error("chebyshev_n: schedule is not chebyshev");
    return n_;
}

ChebyshevOrder ScheduleSpec::order() const { return order_; }

std::vector<std::size_t> ScheduleSpec::step_order() const {
    if (kind_ != ScheduleKind::chebyshev)
        throw std::logic_error("step_order: schedule is not chebyshev");
    std::vector<std::size_t> order(n_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (order_ == ChebyshevOrder::reversed) std::reverse(order.begin(), order.end());
    if (order_ == ChebyshevOrder::permuted) order = permutation_;
    return order;
}

bool ScheduleSpec::flagged_divergent_constant() const {
    return kind_ == ScheduleKind::constant && alpha_ >= 2.0 / cls_.M();
}

std::vector<double> ScheduleSpec::inverse_stepsizes() const {
    switch (kind_) {
    case ScheduleKind::constant:
        throw std::logic_error("inverse_stepsizes: constant schedule has no finite node list");
    case ScheduleKind::iid_arcsine:
        throw std::logic_error("inverse_stepsizes: random schedule has no fixed node list");
    case ScheduleKind::chebyshev: {
        std::vector<double> betas;
        betas.reserve(n_);
        for (std::size_t i : step_order()) betas.push_back(chebyshev_node(cls_, i, n_));
        return betas;
    }
    }
    throw std::logic_error("inverse_stepsizes: unreachable");
}

nlohmann::ordered_json ScheduleSpec::to_json() const {
    nlohmann::ordered_json j;
    switch (kind_) {
    case ScheduleKind::constant: j["kind"] = "constant"; break;
    case ScheduleKind::chebyshev: j["kind"] = "chebyshev"; break;
    case ScheduleKind::iid_arcsine: j["kind"] = "iid_arcsine"; break;
    }
    j["m"] = cls_.m();
    j["M"] = cls_.M();
    if (kind_ == ScheduleKind::constant) j["alpha"] = alpha_;
    if (kind_ == ScheduleKind::chebyshev) {
        j["n"] = n_;
        j["order"] = order_name(order_);
        if (order_ == ChebyshevOrder::permuted) j["permutation"] = permutation_;
    }
    return j;
}

ScheduleSpec ScheduleSpec::from_json(const nlohmann::json& j) {
    ConditionClass cls(j.at("m").get<double>(), j.at("M").get<double>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return constant(cls, j.at("alpha").get<double>());
    if (kind == "iid_arcsine") return iid_arcsine(cls);
    if (kind == "chebyshev") {
        ChebyshevOrder order = order_from_name(j.value("order", std::string("natural")));
        std::vector<std::size_t> perm;
        if (order == ChebyshevOrder::permuted)
            perm = j.at("permutation").get<std::vector<std::size_t>>();
        return chebyshev(cls, j.at("n").get<std::size_t>(), order, std::move(perm));
    }
    throw std::invalid_argument("unknown schedule kind: " + kind);
}

ScheduleStream::ScheduleStream(const ScheduleSpec& spec, RngStream rng)
    : spec_(spec), rng_(rng), arcsine_(spec.cls()) {
    if (spec_.kind() == ScheduleKind::chebyshev) order_ = spec_.step_order();
}

Step ScheduleStream::next() {
    switch (spec_.kind()) {
    case ScheduleKind::constant: {
        ++cursor_;
        double alpha = spec_.constant_alpha();
        return {alpha, 1.0 / alpha};
    }
    case ScheduleKind::iid_arcsine: {
        ++cursor_;
        double beta = arcsine_.sample(rng_);
        return {1.0 / beta, beta};
    }
    case ScheduleKind::chebyshev: {
        if (cursor_ >= order_.size()) throw ScheduleExhausted(order_.size());
        double beta = chebyshev_node(spec_.cls(), order_[cursor_], spec_.chebyshev_n());
        ++cursor_;
        return {1.0 / beta, beta};
    }
    }
    throw std::logic_error("ScheduleStream::next: unreachable");
}

std::vector<double> Histogram::edges() const {
    std::vector<double> e(counts.size() + 1);
    for (std::size_t i = 0; i <= counts.size(); ++i)
        e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
    return e;
}

std::vector<double> Histogram::fractions() const {
    std::vector<double> f(counts.size(), 0.0);
    if (total == 0) return f;
    for (std::size_t i = 0; i < counts.size(); ++i)
        f[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return f;
}

Histogram empirical_measure(ScheduleStream& stream, std::size_t n, std::size_t bins) {
    if (n == 0) throw std::invalid_argument("empirical_measure: need at least one step");
    if (bins == 0) throw std::invalid_argument("empirical_measure: need at least one bin");
    const ConditionClass& cls = stream.spec().cls();
    Histogram h;
    h.lo = cls.m();
    h.hi = cls.M();
    h.counts.assign(bins, 0);
    for (std::size_t t = 0; t < n; ++t) {
        double beta = stream.next().beta;
        double rel = (beta - h.lo) / (h.hi - h.lo);
        auto b = static_cast<std::size_t>(rel * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;   // beta = M lands in the last bin
        ++h.counts[b];
        ++h.total;
    }
    return h;
}

std::vector<double> arcsine_bin_mass(const ArcsineDist& dist, const Histogram& hist) {
    std::vector<double> edges = hist.edges();
    std::vector<double> mass(hist.counts.size());
    for (std::size_t b = 0; b < mass.size(); ++b)
        mass[b] = dist.cdf(edges[b + 1]) - dist.cdf(edges[b]);
    return mass;
}

double tv_distance_to_arcsine(const Histogram& hist, const ArcsineDist& dist) {
    std::vector<double> mass = arcsine_bin_mass(dist, hist);
    std::vector<double> frac = hist.fractions();
    double s = 0.0;
    for (std::size_t b = 0; b < mass.size(); ++b) s += std::abs(frac[b] - mass[b]);
    return 0.5 * s;
}

} // namespace arcstep
