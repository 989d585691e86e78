#ifndef AMBIMAX_UTILITY_HPP
#define AMBIMAX_UTILITY_HPP

#include <cmath>
#include <limits>
#include <string>

#include "ambimax/error.hpp"

namespace ambimax {

enum class UtilityKind { power, log, exponential, quadratic_quasilinear };

inline const char* to_string(UtilityKind k) {
    switch (k) {
        case UtilityKind::power: return "power";
        case UtilityKind::log: return "log";
        case UtilityKind::exponential: return "exponential";
        case UtilityKind::quadratic_quasilinear: return "quadratic_quasilinear";
    }
    return "?";
}

/// Wealth floor for positive-domain utilities.
inline constexpr double kWealthFloor = 1e-12;

/// Felicity function on terminal wealth.
///
/// power:       u(x) = x^(1-g)/(1-g)  (g = 1 is routed to log)
/// log:         u(x) = ln x
/// exponential: u(x) = -exp(-g x)/g
///
/// quadratic_quasilinear is the time-additive form u(x, y) = x - (1/2g)(1 - g y)^2
/// where x is wealth left after paying for the position and y is the state payoff of
/// the position. Its state dependence is handled by the valuation code; the members
/// below describe it on certain wealth (y = 0), where it is linear: x - 1/(2g).
class Utility {
public:
    static Utility power(double gamma) {
        detail::require(gamma > 0.0, "power utility needs gamma > 0");
        if (gamma == 1.0) return Utility(UtilityKind::log, 1.0);
        return Utility(UtilityKind::power, gamma);
    }
    static Utility log() { return Utility(UtilityKind::log, 1.0); }
    static Utility exponential(double gamma) {
        detail::require(gamma > 0.0, "exponential utility needs gamma > 0");
        return Utility(UtilityKind::exponential, gamma);
    }
    static Utility quadratic_quasilinear(double gamma) {
        detail::require(gamma > 0.0, "quadratic utility needs gamma > 0");
        return Utility(UtilityKind::quadratic_quasilinear, gamma);
    }

    UtilityKind kind() const noexcept { return kind_; }
    double gamma() const noexcept { return gamma_; }

    bool positive_domain() const noexcept {
        return kind_ == UtilityKind::power || kind_ == UtilityKind::log;
    }
    /// Marginal utility blows up at the lower domain edge and vanishes at +inf.
    bool inada() const noexcept { return kind_ != UtilityKind::quadratic_quasilinear; }

    double value(double x) const {
        switch (kind_) {
            case UtilityKind::power: return std::pow(x, 1.0 - gamma_) / (1.0 - gamma_);
            case UtilityKind::log: return std::log(x);
            case UtilityKind::exponential: return -std::exp(-gamma_ * x) / gamma_;
            case UtilityKind::quadratic_quasilinear: return x - 0.5 / gamma_;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double marginal(double x) const {
        switch (kind_) {
            case UtilityKind::power: return std::pow(x, -gamma_);
            case UtilityKind::log: return 1.0 / x;
            case UtilityKind::exponential: return std::exp(-gamma_ * x);
            case UtilityKind::quadratic_quasilinear: return 1.0;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double curvature(double x) const {
        switch (kind_) {
            case UtilityKind::power: return -gamma_ * std::pow(x, -gamma_ - 1.0);
            case UtilityKind::log: return -1.0 / (x * x);
            case UtilityKind::exponential: return -gamma_ * std::exp(-gamma_ * x);
            case UtilityKind::quadratic_quasilinear: return 0.0;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double relative_risk_aversion(double x) const {
        switch (kind_) {
            case UtilityKind::power: return gamma_;
            case UtilityKind::log: return 1.0;
            case UtilityKind::exponential: return gamma_ * x;
            case UtilityKind::quadratic_quasilinear: return 0.0;
        }
        return 0.0;
    }

    /// u(base + dx) - u(base) without cancellation for small dx.
    double shift(double base, double dx) const {
        switch (kind_) {
            case UtilityKind::power: {
                const double k = 1.0 - gamma_;
                return std::pow(base, k) * std::expm1(k * std::log1p(dx / base)) / k;
            }
            case UtilityKind::log: return std::log1p(dx / base);
            case UtilityKind::exponential:
                return -std::exp(-gamma_ * base) * std::expm1(-gamma_ * dx) / gamma_;
            case UtilityKind::quadratic_quasilinear: return dx;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// dx such that u(base + dx) - u(base) = v.
    double inverse_shift(double base, double v) const {
        switch (kind_) {
            case UtilityKind::power: {
                const double k = 1.0 - gamma_;
                const double arg = v * k / std::pow(base, k);
                if (!(arg > -1.0)) throw DomainError("utility value outside the range of u");
                return base * std::expm1(std::log1p(arg) / k);
            }
            case UtilityKind::log: return base * std::expm1(v);
            case UtilityKind::exponential: {
                const double arg = -gamma_ * v * std::exp(gamma_ * base);
                if (!(arg > -1.0)) throw DomainError("utility value outside the range of u");
                return -std::log1p(arg) / gamma_;
            }
            case UtilityKind::quadratic_quasilinear: return v;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    double inverse(double v) const {
        switch (kind_) {
            case UtilityKind::power: {
                const double k = 1.0 - gamma_;
                const double base = v * k;
                if (!(base > 0.0)) throw DomainError("utility value outside the range of u");
                return std::pow(base, 1.0 / k);
            }
            case UtilityKind::log: return std::exp(v);
            case UtilityKind::exponential: {
                if (!(v < 0.0)) throw DomainError("utility value outside the range of u");
                return -std::log(-gamma_ * v) / gamma_;
            }
            case UtilityKind::quadratic_quasilinear: return v + 0.5 / gamma_;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    std::string describe() const {
        std::string s = to_string(kind_);
        if (kind_ != UtilityKind::log) s += "(" + std::to_string(gamma_) + ")";
        return s;
    }

    bool operator==(const Utility&) const = default;

private:
    Utility(UtilityKind k, double g) : kind_(k), gamma_(g) {}

    UtilityKind kind_;
    double gamma_;
};

/// Numeric shape check on a sample grid: u' > 0 and u'' < 0. The quadratic
/// quasi-linear form is linear in certain wealth and is exempt.
inline bool has_valid_shape(const Utility& u) {
    if (u.kind() == UtilityKind::quadratic_quasilinear) return true;
    const double lo = u.positive_domain() ? 1e-3 : -20.0 / u.gamma();
    const double hi = u.positive_domain() ? 1e3 : 20.0 / u.gamma();
    constexpr int kPoints = 257;
    for (int i = 0; i < kPoints; ++i) {
        const double t = static_cast<double>(i) / (kPoints - 1);
        const double x = u.positive_domain() ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
        if (!(u.marginal(x) > 0.0) || !(u.curvature(x) < 0.0)) return false;
    }
    return true;
}

}  // namespace ambimax

#endif
