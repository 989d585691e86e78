#ifndef AMBIMAX_DEMAND_HPP
#define AMBIMAX_DEMAND_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ambimax/ambiguity.hpp"
#include "ambimax/error.hpp"
#include "ambimax/roots.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/stats.hpp"
#include "ambimax/utility.hpp"

namespace ambimax {

enum class Side { long_side, short_side, zero, both };

inline const char* to_string(Side s) {
    switch (s) {
        case Side::long_side: return "long";
        case Side::short_side: return "short";
        case Side::zero: return "zero";
        case Side::both: return "both";
    }
    return "?";
}

inline Side side_of(double theta) {
    return theta > 0.0 ? Side::long_side : (theta < 0.0 ? Side::short_side : Side::zero);
}

/// dV/dtheta away from kinks. At theta = 0 without endowment the value
/// function is not differentiable (unless delta = 0) and the one-sided limits
/// must be used instead.
inline double derivative(const Agent& agent, const Scenario& sc, double theta) {
    sc.require_single_asset();
    if (theta == 0.0 && !agent.has_endowment()) {
        throw DomainError("value function is not differentiable at theta = 0; use the one-sided limits");
    }
    const StateEval ev = evaluate_states(agent, sc, theta);
    const auto p0 = agent.prior.probs();
    const double Em = stats::mean(p0, ev.dtheta);
    const double delta = agent.delta();
    if (delta == 0.0) return Em;
    require_assumption1(agent.prior, agent.ambiguity);
    double sd = stats::stddev(p0, ev.rel);
    if (sd < kFlatTolerance) {
        // Tiny positions round the utility profile flat; its direction is then
        // that of theta * S, and only the direction enters the ratio below.
        const double sS = stats::stddev(p0, sc.payoff());
        if (agent.has_endowment() || sS < kFlatTolerance) {
            throw DomainError("constant utility profile: the value function has a kink here");
        }
        const double sign = theta > 0.0 ? 1.0 : -1.0;
        return Em - delta * sign * stats::covariance(p0, sc.payoff(), ev.dtheta) / sS;
    }
    return Em - delta * stats::covariance(p0, ev.rel, ev.dtheta) / sd;
}

/// d2V/dtheta2 away from kinks.
inline double second_derivative(const Agent& agent, const Scenario& sc, double theta) {
    sc.require_single_asset();
    const StateEval ev = evaluate_states(agent, sc, theta);
    const auto p0 = agent.prior.probs();
    const double E2 = stats::mean(p0, ev.dtheta2);
    const double delta = agent.delta();
    if (delta == 0.0) return E2;
    const double sd = stats::stddev(p0, ev.rel);
    if (sd < kFlatTolerance) throw DomainError("constant utility profile: the value function has a kink here");
    const double cum = stats::covariance(p0, ev.rel, ev.dtheta);
    return E2 - delta * (stats::variance(p0, ev.dtheta) + stats::covariance(p0, ev.rel, ev.dtheta2)) / sd +
           delta * cum * cum / (sd * sd * sd);
}

struct OneSidedDerivatives {
    double right = 0.0;
    double left = 0.0;
};

inline OneSidedDerivatives one_sided_derivatives_at_zero(const Agent& agent, const Scenario& sc) {
    sc.require_single_asset();
    agent.require_matches(sc);
    detail::require(!agent.has_endowment(), "one-sided limits at zero assume zero endowment");
    const auto p0 = agent.prior.probs();
    const auto S = sc.payoff();
    const double mu = agent.utility.marginal(agent.w0);
    const double E = stats::mean(p0, S);
    const double sd = stats::stddev(p0, S);
    const double delta = agent.delta();
    return {mu * (E - sc.price() - delta * sd), mu * (E - sc.price() + delta * sd)};
}

struct ReservationBounds {
    double eta_low = 0.0;
    double eta_high = 0.0;

    bool contains(double price) const { return price >= eta_low && price <= eta_high; }
    double width() const { return eta_high - eta_low; }
};

/// E0[S] -/+ |delta| S0[S]; depends on neither utility nor wealth.
inline ReservationBounds reservation_interval(const Agent& agent, const Scenario& sc) {
    sc.require_single_asset();
    agent.require_matches(sc);
    const auto p0 = agent.prior.probs();
    const double E = stats::mean(p0, sc.payoff());
    const double half = std::abs(agent.delta()) * stats::stddev(p0, sc.payoff());
    return {E - half, E + half};
}

struct MartingaleCheck {
    Distribution measure;
    double residual = 0.0;  ///< |E_Q[S] - pi|
};

/// Pricing measure at a position: the FOC belief tilted by marginal utility.
inline MartingaleCheck martingale_measure(const Agent& agent, const Scenario& sc, double theta) {
    sc.require_single_asset();
    const StateEval ev = evaluate_states(agent, sc, theta);
    const Distribution pstar = foc_measure(agent.prior, agent.ambiguity, ev.rel);
    const std::size_t n = ev.rel.size();
    std::vector<double> marginal = ev.marginal;
    if (agent.utility.kind() == UtilityKind::exponential) {
        // e^{-g W} underflows for large positions; only ratios matter.
        const double wmin = *std::min_element(ev.wealth.begin(), ev.wealth.end());
        for (std::size_t s = 0; s < n; ++s) marginal[s] = std::exp(-agent.utility.gamma() * (ev.wealth[s] - wmin));
    }
    std::vector<double> q(n);
    double norm = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        if (!(marginal[s] >= 0.0)) throw DomainError("negative marginal utility: no pricing measure");
        q[s] = pstar[s] * marginal[s];
        norm += q[s];
    }
    if (!(norm > 0.0)) throw DomainError("marginal utility vanishes in every state: no pricing measure");
    for (auto& x : q) x /= norm;
    MartingaleCheck m{Distribution(std::move(q)), 0.0};
    m.residual = std::abs(stats::mean(m.measure.probs(), sc.payoff()) - sc.price());
    return m;
}

struct DemandResult {
    double price = 0.0;
    double theta_star = 0.0;
    Side side = Side::zero;
    double foc_residual = 0.0;
    double value = 0.0;       ///< V(theta*)
    double value_gain = 0.0;  ///< V(theta*) - u(w0)
    Distribution worst;
    Distribution best;
    Distribution martingale;
    double martingale_residual = 0.0;
    bool kink = false;  ///< optimum sits where V is not differentiable
    int iterations = 0;
};

namespace detail {

inline DemandResult make_demand_result(const Agent& agent, const Scenario& sc, double theta, bool kink,
                                       int iterations) {
    DemandResult r;
    r.price = sc.price();
    r.theta_star = theta;
    r.side = side_of(theta);
    r.kink = kink;
    r.iterations = iterations;
    const StateEval ev = evaluate_states(agent, sc, theta);
    r.value_gain = value_alpha_from(agent.prior, agent.ambiguity, ev.rel);
    r.value = ev.base + r.value_gain;
    const auto inner = worst_best_closed_form(agent.prior, agent.ambiguity, ev.absolute());
    r.worst = inner.worst;
    r.best = inner.best;
    if (kink) {
        r.martingale = agent.prior.dist();
        r.martingale_residual = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.foc_residual = std::abs(derivative(agent, sc, theta));
        const auto mg = martingale_measure(agent, sc, theta);
        r.martingale = mg.measure;
        r.martingale_residual = mg.residual;
    }
    return r;
}

inline void require_averse(const Agent& agent) {
    detail::require(agent.alpha() >= 0.5, "demand solver needs alpha >= 1/2; use the seeker module for alpha < 1/2");
}

/// First point dir * scale * 2^k (k = 0, 1, ...) where f is negative
/// (`want_negative`) or positive.
template <class F>
double expand_until(F&& f, double scale, double dir, bool want_negative, int max_doublings = 200) {
    double h = scale;
    for (int i = 0; i < max_doublings; ++i) {
        const double v = f(dir * h);
        if (want_negative ? v < 0.0 : v > 0.0) return dir * h;
        h *= 2.0;
    }
    throw NumericalError("bracket expansion failed after " + std::to_string(max_doublings) + " doublings");
}

/// Natural position scale for unbounded domains.
inline double position_scale(const Agent& agent, const Scenario& sc) {
    const double spread = sc.max_payoff() - sc.min_payoff();
    return 1.0 / (agent.utility.gamma() * spread);
}

}  // namespace detail

/// Optimal position for alpha >= 1/2: zero on the closed reservation interval,
/// otherwise the unique root of V' on the side picked by the one-sided limits.
inline DemandResult solve_demand(const Agent& agent, const Scenario& sc) {
    sc.require_interior_price();
    agent.require_matches(sc);
    detail::require_averse(agent);
    require_assumption1(agent.prior, agent.ambiguity);
    detail::require(agent.utility.inada(), "demand solver needs an Inada utility (" + agent.utility.describe() + ")");
    detail::require(!agent.has_endowment(), "use solve_demand_with_endowment for agents with endowment");

    const ReservationBounds rb = reservation_interval(agent, sc);
    if (rb.contains(sc.price())) return detail::make_demand_result(agent, sc, 0.0, true, 0);

    const PositionBounds bounds = admissible_bounds(agent, sc);
    const OneSidedDerivatives at0 = one_sided_derivatives_at_zero(agent, sc);
    auto dV = [&](double th) { return derivative(agent, sc, th); };
    constexpr double eps_theta = 1e-10;
    constexpr double eps_bound = 1e-9;

    BisectionResult root;
    if (sc.price() < rb.eta_low) {
        double hi;
        double fhi;
        if (std::isfinite(bounds.upper)) {
            hi = bounds.upper * (1.0 - eps_bound);
            fhi = dV(hi);
            if (!(fhi < 0.0)) throw NumericalError("long-side bracket failure: V' >= 0 near the upper bound");
        } else {
            hi = detail::expand_until(dV, detail::position_scale(agent, sc), 1.0, true);
            fhi = dV(hi);
        }
        double lo = std::min(eps_theta, 0.5 * hi);
        double flo = dV(lo);
        if (!(flo > 0.0)) {
            lo = 0.0;
            flo = at0.right;
        }
        root = bisect(dV, lo, hi, flo, fhi);
    } else {
        double lo;
        double flo;
        if (std::isfinite(bounds.lower)) {
            lo = bounds.lower * (1.0 - eps_bound);
            flo = dV(lo);
            if (!(flo > 0.0)) throw NumericalError("short-side bracket failure: V' <= 0 near the lower bound");
        } else {
            lo = detail::expand_until(dV, detail::position_scale(agent, sc), -1.0, false);
            flo = dV(lo);
        }
        double hi = std::max(-eps_theta, 0.5 * lo);
        double fhi = dV(hi);
        if (!(fhi < 0.0)) {
            hi = 0.0;
            fhi = at0.left;
        }
        root = bisect(dV, lo, hi, flo, fhi);
    }
    if (root.x == 0.0) return detail::make_demand_result(agent, sc, 0.0, true, root.iterations);
    return detail::make_demand_result(agent, sc, root.x, false, root.iterations);
}

inline DemandResult solve_demand(const Agent& agent, const Scenario& sc, double price) {
    return solve_demand(agent, sc.with_price(price));
}

/// Maximizer of E_P[u(W)] for a fixed belief P, by bisection on E_P[du/dtheta].
/// `restrict` limits the search to one half-line; the result is 0 when the
/// unconstrained optimum lies on the other side.
inline BisectionResult expected_utility_demand(const Agent& agent, const Scenario& sc, std::span<const double> probs,
                                               Side restrict = Side::both) {
    sc.require_interior_price();
    agent.require_matches(sc);
    detail::require(!agent.has_endowment(), "fixed-belief solver assumes zero endowment");
    for (double p : probs) detail::require(p > 0.0, "fixed-belief solver needs a strictly positive belief");
    const double edge = stats::mean(probs, sc.payoff()) - sc.price();
    auto f = [&](double th) { return stats::mean(probs, evaluate_states(agent, sc, th).dtheta); };
    const double f0 = f(0.0);
    Side side = edge > 0.0 ? Side::long_side : (edge < 0.0 ? Side::short_side : Side::zero);
    if (f0 == 0.0 || side == Side::zero) return {0.0, f0, 0.0, 0.0, 0};
    if ((restrict == Side::long_side && side == Side::short_side) ||
        (restrict == Side::short_side && side == Side::long_side)) {
        return {0.0, f0, 0.0, 0.0, 0};
    }
    const PositionBounds bounds = agent.utility.positive_domain() ? admissible_bounds(agent, sc) : PositionBounds{};
    const double scale = agent.utility.kind() == UtilityKind::quadratic_quasilinear
                             ? 1.0 / (agent.utility.gamma() * std::max(std::abs(sc.max_payoff()), std::abs(sc.min_payoff())))
                             : detail::position_scale(agent, sc);
    if (side == Side::long_side) {
        double hi = std::isfinite(bounds.upper) ? bounds.upper * (1.0 - 1e-9) : detail::expand_until(f, scale, 1.0, true);
        const double fhi = f(hi);
        if (!(fhi < 0.0)) throw NumericalError("fixed-belief bracket failure on the long side");
        return bisect(f, 0.0, hi, f0, fhi);
    }
    double lo = std::isfinite(bounds.lower) ? bounds.lower * (1.0 - 1e-9) : detail::expand_until(f, scale, -1.0, false);
    const double flo = f(lo);
    if (!(flo > 0.0)) throw NumericalError("fixed-belief bracket failure on the short side");
    return bisect(f, lo, 0.0, flo, f0);
}

struct DemandCurvePoint {
    double price = 0.0;
    DemandResult result;
};

struct ComparativeStaticsReport {
    std::vector<double> alphas;
    std::vector<double> thetas;
    Side side = Side::zero;
    bool testable = false;
    bool monotone = false;
    std::string note;
};

/// Demand across a list of alphas in (1/2, 1] at one price. The expected
/// direction needs relative risk aversion at least one on the realized wealth;
/// otherwise the report is marked untestable rather than failed.
inline ComparativeStaticsReport comparative_statics_alpha(const Agent& agent, const Scenario& sc,
                                                          const std::vector<double>& alphas) {
    ComparativeStaticsReport rep;
    rep.alphas = alphas;
    double min_rra = kInf;
    for (double a : alphas) {
        detail::require(a > 0.5 && a <= 1.0, "comparative statics alphas must lie in (1/2, 1]");
        Agent x = agent;
        x.ambiguity = AmbiguitySpec(agent.ambiguity.c(), a);
        const DemandResult r = solve_demand(x, sc);
        rep.thetas.push_back(r.theta_star);
        for (double W : wealth_profile(x, sc, r.theta_star).wealth) {
            min_rra = std::min(min_rra, x.utility.relative_risk_aversion(W));
        }
    }
    rep.side = rep.thetas.empty() ? Side::zero : side_of(rep.thetas.front());
    rep.testable = min_rra >= 1.0;
    if (!rep.testable) {
        rep.note = "relative risk aversion below one on the realized wealth range";
        return rep;
    }
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.thetas.size(); ++i) {
        const bool ok = rep.side == Side::long_side ? rep.thetas[i] < rep.thetas[i - 1]
                                                    : rep.thetas[i] > rep.thetas[i - 1];
        if (!ok) rep.monotone = false;
    }
    if (rep.side == Side::zero) {
        rep.monotone = false;
        rep.note = "price lies inside the reservation interval";
    }
    return rep;
}

inline ComparativeStaticsReport comparative_statics_alpha(const Agent& agent, const Scenario& sc, double price,
                                                          const std::vector<double>& alphas) {
    return comparative_statics_alpha(agent, sc.with_price(price), alphas);
}

struct AffineFit {
    double a = 0.0;
    double b = 0.0;
    double max_residual = 0.0;
    bool affine = false;
};

/// Least-squares fit of the endowment on (1, S).
inline AffineFit fit_endowment(const Agent& agent, const Scenario& sc) {
    const std::size_t n = sc.num_states();
    const std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const auto S = sc.payoff();
    std::vector<double> E(n);
    for (std::size_t s = 0; s < n; ++s) E[s] = agent.endowment_at(s);
    AffineFit fit;
    fit.b = stats::covariance(w, S, E) / stats::variance(w, S);
    fit.a = stats::mean(w, E) - fit.b * stats::mean(w, S);
    double scale = 1.0;
    for (std::size_t s = 0; s < n; ++s) {
        fit.max_residual = std::max(fit.max_residual, std::abs(E[s] - fit.a - fit.b * S[s]));
        scale = std::max(scale, std::abs(E[s]));
    }
    fit.affine = fit.max_residual < 1e-10 * scale;
    return fit;
}

/// Demand with a random endowment. An endowment of the form a + bS is folded
/// into wealth and position (theta* shifts by -b); any other endowment makes
/// V differentiable at zero, and its unique root is found directly.
inline DemandResult solve_demand_with_endowment(const Agent& agent, const Scenario& sc) {
    if (!agent.has_endowment()) return solve_demand(agent, sc);
    sc.require_interior_price();
    agent.require_matches(sc);
    detail::require_averse(agent);
    require_assumption1(agent.prior, agent.ambiguity);
    detail::require(agent.utility.inada(), "demand solver needs an Inada utility (" + agent.utility.describe() + ")");

    const AffineFit fit = fit_endowment(agent, sc);
    if (fit.affine) {
        Agent shifted(agent.utility, agent.w0 + fit.a + fit.b * sc.price(), agent.prior, agent.ambiguity);
        const DemandResult inner = solve_demand(shifted, sc);
        const double theta = inner.theta_star - fit.b;
        return detail::make_demand_result(agent, sc, theta, inner.kink, inner.iterations);
    }

    const PositionBounds bounds = admissible_interval(agent, sc);
    auto dV = [&](double th) { return derivative(agent, sc, th); };
    const double f0 = dV(0.0);
    if (f0 == 0.0) return detail::make_demand_result(agent, sc, 0.0, false, 0);
    const double scale = detail::position_scale(agent, sc);
    BisectionResult root;
    if (f0 > 0.0) {
        const double hi = std::isfinite(bounds.upper) ? bounds.upper - 1e-9 * (bounds.upper - bounds.lower)
                                                      : detail::expand_until(dV, scale, 1.0, true);
        const double fhi = dV(hi);
        if (!(fhi < 0.0)) throw NumericalError("endowment demand: long-side bracket failure");
        root = bisect(dV, 0.0, hi, f0, fhi);
    } else {
        const double lo = std::isfinite(bounds.lower) ? bounds.lower + 1e-9 * (bounds.upper - bounds.lower)
                                                      : detail::expand_until(dV, scale, -1.0, false);
        const double flo = dV(lo);
        if (!(flo > 0.0)) throw NumericalError("endowment demand: short-side bracket failure");
        root = bisect(dV, lo, 0.0, flo, f0);
    }
    return detail::make_demand_result(agent, sc, root.x, false, root.iterations);
}

}  // namespace ambimax

#endif
