#ifndef AMBIMAX_PREMIUM_HPP
#define AMBIMAX_PREMIUM_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ambimax/ambiguity.hpp"
#include "ambimax/error.hpp"
#include "ambimax/roots.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/stats.hpp"
#include "ambimax/utility.hpp"

namespace ambimax {

namespace detail {

// V_alpha - u(w0) for terminal wealth w0 + theta*S - nu (no price term).
inline double shifted_value(const Agent& agent, const Scenario& sc, double theta, double nu) {
    const auto S = sc.payoff();
    std::vector<double> rel(S.size());
    const bool quadratic = agent.utility.kind() == UtilityKind::quadratic_quasilinear;
    for (std::size_t s = 0; s < S.size(); ++s) {
        if (quadratic) {
            const double y = theta * S[s] + agent.endowment_at(s);
            rel[s] = -nu + y - 0.5 * agent.utility.gamma() * y * y;
            continue;
        }
        const double dx = theta * S[s] - nu + agent.endowment_at(s);
        if (agent.utility.positive_domain() && !(agent.w0 + dx > kWealthFloor)) return -kInf;
        rel[s] = agent.utility.shift(agent.w0, dx);
    }
    return value_alpha_from(agent.prior, agent.ambiguity, rel);
}

// max_s k*S_s, subtracted from exponents so the largest term is exp(0).
inline double largest_exponent(std::span<const double> S, double k) {
    double top = -kInf;
    for (double x : S) top = std::max(top, k * x);
    return top;
}

}  // namespace detail

/// Buyer's certainty equivalent: the largest amount nu the agent would pay
/// for theta units, i.e. V_alpha(w0 + theta*S - nu) = u(w0). Found by
/// bisection because V_alpha falls strictly as nu rises.
inline double certainty_equivalent(const Agent& agent, const Scenario& sc, double theta) {
    sc.require_single_asset();
    agent.require_matches(sc);
    require_assumption1(agent.prior, agent.ambiguity);
    if (theta == 0.0 && !agent.has_endowment()) return 0.0;
    const auto S = sc.payoff();
    double lo = kInf;
    double hi = -kInf;
    for (std::size_t s = 0; s < S.size(); ++s) {
        double x = theta * S[s] + agent.endowment_at(s);
        if (agent.utility.kind() == UtilityKind::quadratic_quasilinear) x -= 0.5 * agent.utility.gamma() * x * x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    // At nu = lo no state ends below w0; at nu = hi no state ends above it.
    if (agent.utility.positive_domain()) hi = std::min(hi, agent.w0 + lo - 2.0 * kWealthFloor * std::max(1.0, agent.w0));
    auto f = [&](double nu) { return detail::shifted_value(agent, sc, theta, nu); };
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (!(fhi < 0.0)) throw DomainError("no admissible certainty equivalent: utility domain exhausted before indifference");
    return bisect(f, lo, hi, flo, fhi).x;
}

/// Closed form for exponential utility: -(1/g) log(E0[e^{-g theta S}] + delta S0[e^{-g theta S}]).
inline double exponential_certainty_equivalent(const Agent& agent, const Scenario& sc, double theta) {
    detail::require(agent.utility.kind() == UtilityKind::exponential, "closed-form certainty equivalent needs exponential utility");
    detail::require(!agent.has_endowment(), "closed-form certainty equivalent assumes zero endowment");
    const auto p0 = agent.prior.probs();
    const auto S = sc.payoff();
    const double g = agent.utility.gamma();
    const double top = detail::largest_exponent(S, -g * theta);
    std::vector<double> x(S.size());
    for (std::size_t s = 0; s < S.size(); ++s) x[s] = std::exp(-g * theta * S[s] - top);
    const double m = stats::mean(p0, x) + agent.delta() * stats::stddev(p0, x);
    if (!(m > 0.0)) throw DomainError("certainty equivalent undefined: ambiguity-seeking value leaves the utility range");
    return -(std::log(m) + top) / g;
}

struct PremiumDecomposition {
    double rho = 0.0;         ///< total compensation
    double epsilon = 0.0;     ///< compensation for risk alone
    double delta_comp = 0.0;  ///< rho - epsilon
    double identity_residual = 0.0;  ///< |u(w0-eps) - u(w0-rho) - delta S0[u(W)]|
    double value_residual = 0.0;     ///< |u(w0-rho) - V_alpha|
    double expected_residual = 0.0;  ///< |u(w0-eps) - E0[u(W)]|
};

inline PremiumDecomposition decompose_premium(const Agent& agent, const Scenario& sc, double theta) {
    sc.require_single_asset();
    require_assumption1(agent.prior, agent.ambiguity);
    const StateEval ev = evaluate_states(agent, sc, theta);
    const auto p0 = agent.prior.probs();
    const Utility& u = agent.utility;
    const double v_alpha = value_alpha_from(agent.prior, agent.ambiguity, ev.rel);
    const double v_zero = stats::mean(p0, ev.rel);
    const double spread = stats::stddev(p0, ev.rel);

    PremiumDecomposition d;
    d.rho = -u.inverse_shift(agent.w0, v_alpha);
    d.epsilon = -u.inverse_shift(agent.w0, v_zero);
    d.delta_comp = d.rho - d.epsilon;
    const double at_rho = u.shift(agent.w0, -d.rho);
    const double at_eps = u.shift(agent.w0, -d.epsilon);
    d.value_residual = std::abs(at_rho - v_alpha);
    d.expected_residual = std::abs(at_eps - v_zero);
    d.identity_residual = std::abs(at_eps - at_rho - agent.delta() * spread);
    return d;
}

inline PremiumDecomposition decompose_premium(const Agent& agent, const Scenario& sc, double theta, double price) {
    return decompose_premium(agent, sc.with_price(price), theta);
}

/// (1/g) log(1 + delta S0[e^{-g theta S}] / E0[e^{-g theta S}]); free of w0 and the price.
inline double exponential_ambiguity_premium(const Agent& agent, const Scenario& sc, double theta) {
    detail::require(agent.utility.kind() == UtilityKind::exponential, "closed-form ambiguity premium needs exponential utility");
    const auto p0 = agent.prior.probs();
    const auto S = sc.payoff();
    const double g = agent.utility.gamma();
    const double top = detail::largest_exponent(S, -g * theta);
    std::vector<double> x(S.size());
    for (std::size_t s = 0; s < S.size(); ++s) x[s] = std::exp(-g * theta * S[s] - top);
    const double ratio = agent.delta() * stats::stddev(p0, x) / stats::mean(p0, x);
    if (!(ratio > -1.0)) throw DomainError("ambiguity premium undefined: ambiguity-seeking value leaves the utility range");
    return std::log1p(ratio) / g;
}

}  // namespace ambimax

#endif
