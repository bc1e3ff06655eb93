#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace arcstep {

// Curvature interval [m, M] with 0 < m < M (strict).
// All schedules, distributions and objectives in this library are
// parameterized by such an interval.
class ConditionClass {
public:
    // Default: the kappa = 4 class [1/4, 1], the running example of the
    // experiments. Callers that care always set the class explicitly.
    ConditionClass() : ConditionClass(0.25, 1.0) {}

    ConditionClass(double m, double M) : m_(m), M_(M) {
        if (!(std::isfinite(m) && std::isfinite(M)))
            throw std::invalid_argument("ConditionClass: m and M must be finite");
        if (!(0.0 < m && m < M))
            throw std::invalid_argument(
                "ConditionClass: require 0 < m < M, got m=" + std::to_string(m) +
                " M=" + std::to_string(M));
    }

    // Normalized class with M = 1, m = 1/kappa.
    static ConditionClass from_kappa(double kappa) {
        if (!(std::isfinite(kappa) && kappa > 1.0))
            throw std::invalid_argument("ConditionClass: require kappa > 1");
        return ConditionClass(1.0 / kappa, 1.0);
    }

    double m() const { return m_; }
    double M() const { return M_; }
    double kappa() const { return M_ / m_; }
    double center() const { return 0.5 * (M_ + m_); }   // (M+m)/2
    double radius() const { return 0.5 * (M_ - m_); }   // (M-m)/2

    // Accelerated contraction factor (sqrt(kappa)-1)/(sqrt(kappa)+1).
    double acc_rate() const {
        double s = std::sqrt(kappa());
        return (s - 1.0) / (s + 1.0);
    }

    // log of acc_rate(), computed as log1p(-2/(sqrt(kappa)+1)) so it stays
    // accurate when kappa is large and the rate is close to 1.
    double log_acc_rate() const {
        double s = std::sqrt(kappa());
        return std::log1p(-2.0 / (s + 1.0));
    }

private:
    double m_;
    double M_;
};

} // namespace arcstep
