#ifndef AMBIMAX_AMBIGUITY_HPP
#define AMBIMAX_AMBIGUITY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ambimax/error.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/stats.hpp"
#include "ambimax/utility.hpp"

namespace ambimax {

/// Profiles with a population standard deviation below this are constant.
inline constexpr double kFlatTolerance = 1e-14;

/// Per-state utility data for a position, stored relative to u(w0) so that
/// small positions do not lose digits to cancellation.
///
/// For single-asset positions `dtheta` holds du_s/dtheta and `dtheta2` the
/// second derivative; for K > 1 both are left empty.
struct StateEval {
    double base = 0.0;             ///< u(w0)
    std::vector<double> rel;       ///< u(W_s) - u(w0)
    std::vector<double> wealth;    ///< W_s (certain-wealth part x for the quadratic form)
    std::vector<double> marginal;  ///< u'(W_s); 1 - g y_s for the quadratic form
    std::vector<double> dtheta;
    std::vector<double> dtheta2;

    std::vector<double> absolute() const {
        std::vector<double> u(rel.size());
        for (std::size_t s = 0; s < rel.size(); ++s) u[s] = base + rel[s];
        return u;
    }
};

namespace detail {

inline void require_admissible(const Agent& agent, std::span<const double> wealth) {
    if (!agent.utility.positive_domain()) return;
    for (std::size_t s = 0; s < wealth.size(); ++s) {
        if (!(wealth[s] > kWealthFloor)) {
            throw DomainError("inadmissible position: terminal wealth " + std::to_string(wealth[s]) +
                              " in state " + std::to_string(s));
        }
    }
}

}  // namespace detail

inline StateEval evaluate_states(const Agent& agent, const Scenario& sc, std::span<const double> theta) {
    agent.require_matches(sc);
    detail::require(theta.size() == sc.num_assets(), "position dimension must equal asset count");
    const std::size_t n = sc.num_states();
    const Utility& u = agent.utility;
    const bool single = sc.num_assets() == 1;
    StateEval ev;
    ev.base = u.value(agent.w0);
    ev.rel.resize(n);
    ev.wealth.resize(n);
    ev.marginal.resize(n);
    if (single) {
        ev.dtheta.resize(n);
        ev.dtheta2.resize(n);
    }

    if (u.kind() == UtilityKind::quadratic_quasilinear) {
        // x = w0 - theta.pi is certain; y_s = theta.S_s + E_s is the state payoff.
        const double g = u.gamma();
        double cost = 0.0;
        for (std::size_t k = 0; k < sc.num_assets(); ++k) cost += theta[k] * sc.price(k);
        for (std::size_t s = 0; s < n; ++s) {
            double y = agent.endowment_at(s);
            for (std::size_t k = 0; k < sc.num_assets(); ++k) y += theta[k] * sc.payoff(k)[s];
            ev.wealth[s] = agent.w0 - cost;
            ev.rel[s] = -cost + y - 0.5 * g * y * y;
            ev.marginal[s] = 1.0 - g * y;
            if (single) {
                const double S = sc.payoff()[s];
                ev.dtheta[s] = S * (1.0 - g * y) - sc.price();
                ev.dtheta2[s] = -g * S * S;
            }
        }
        return ev;
    }

    for (std::size_t s = 0; s < n; ++s) {
        double dx = agent.endowment_at(s);
        for (std::size_t k = 0; k < sc.num_assets(); ++k) dx += theta[k] * (sc.payoff(k)[s] - sc.price(k));
        ev.wealth[s] = agent.w0 + dx;
    }
    detail::require_admissible(agent, ev.wealth);
    for (std::size_t s = 0; s < n; ++s) {
        const double W = ev.wealth[s];
        ev.rel[s] = u.shift(agent.w0, W - agent.w0);
        ev.marginal[s] = u.marginal(W);
        if (single) {
            const double excess = sc.payoff()[s] - sc.price();
            ev.dtheta[s] = ev.marginal[s] * excess;
            ev.dtheta2[s] = u.curvature(W) * excess * excess;
        }
    }
    return ev;
}

inline StateEval evaluate_states(const Agent& agent, const Scenario& sc, double theta) {
    return evaluate_states(agent, sc, std::span<const double>(&theta, 1));
}

/// Pessimist and optimist beliefs of the inner problem with their values.
struct InnerSolution {
    Distribution worst;
    Distribution best;
    double value_worst = 0.0;
    double value_best = 0.0;
    double divergence_worst = 1.0;
    double divergence_best = 1.0;
};

namespace detail {

inline InnerSolution make_inner(std::span<const double> p0, std::vector<double> worst, std::vector<double> best,
                                std::span<const double> u) {
    InnerSolution sol;
    sol.worst = Distribution(std::move(worst));
    sol.best = Distribution(std::move(best));
    sol.value_worst = stats::mean(sol.worst.probs(), u);
    sol.value_best = stats::mean(sol.best.probs(), u);
    sol.divergence_worst = sol.worst.divergence_from(p0);
    sol.divergence_best = sol.best.divergence_from(p0);
    return sol;
}

}  // namespace detail

/// Closed-form minimizer and maximizer of E_P[u] over the divergence ball.
/// Requires the strict interior condition on c; a negative probability means
/// the precondition was violated and is reported, not clamped.
inline InnerSolution worst_best_closed_form(const ReferencePrior& prior, const AmbiguitySpec& amb,
                                            std::span<const double> u) {
    detail::require(u.size() == prior.size(), "utility vector length must equal prior length");
    require_assumption1(prior, amb);
    const auto p0 = prior.probs();
    const std::size_t n = p0.size();
    std::vector<double> worst(p0.begin(), p0.end());
    std::vector<double> best(p0.begin(), p0.end());
    const double sd = stats::stddev(p0, u);
    if (amb.d() > 0.0 && sd >= kFlatTolerance) {
        // Center twice so the tilt p0*(E - u) sums to zero to rounding even
        // when one state dominates the profile.
        const double Eu = stats::mean(p0, u);
        std::vector<double> centered(n);
        for (std::size_t s = 0; s < n; ++s) centered[s] = u[s] - Eu;
        const double drift = stats::mean(p0, centered);
        const double k = std::sqrt(amb.d()) / sd;
        for (std::size_t s = 0; s < n; ++s) {
            const double z = (drift - centered[s]) * k;
            worst[s] = p0[s] * (1.0 + z);
            best[s] = p0[s] * (1.0 - z);
            if (worst[s] < 0.0 || best[s] < 0.0) {
                throw DomainError("closed-form belief has a negative probability in state " + std::to_string(s));
            }
        }
    }
    return detail::make_inner(p0, std::move(worst), std::move(best), u);
}

inline InnerSolution worst_best_closed_form(const Agent& agent, std::span<const double> u) {
    return worst_best_closed_form(agent.prior, agent.ambiguity, u);
}

namespace detail {

// Maximizer of E_P[u] over the ball, allowing states to drop out of the support
// when the interior formula would push them negative. Each dropped state
// conditions the prior on the remaining support and rescales the radius.
inline std::vector<double> boundary_maximizer(std::span<const double> p0, double c, std::span<const double> u) {
    const std::size_t n = p0.size();
    std::vector<bool> active(n, true);
    std::vector<double> p(n, 0.0);
    for (std::size_t round = 0; round < n; ++round) {
        double mass = 0.0;
        for (std::size_t s = 0; s < n; ++s) if (active[s]) mass += p0[s];
        std::vector<double> q;
        std::vector<double> uu;
        std::vector<std::size_t> idx;
        for (std::size_t s = 0; s < n; ++s) {
            if (!active[s]) continue;
            q.push_back(p0[s] / mass);
            uu.push_back(u[s]);
            idx.push_back(s);
        }
        const double d_tilde = c * mass - 1.0;
        if (d_tilde < 0.0) throw NumericalError("boundary fallback: conditioned radius became negative");
        const double sd = stats::stddev(q, uu);
        const double Eu = stats::mean(q, uu);
        std::size_t worst_state = n;
        double most_negative = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double z = sd < kFlatTolerance ? 0.0 : (Eu - uu[j]) * std::sqrt(d_tilde) / sd;
            const double pj = q[j] * (1.0 - z);
            p[idx[j]] = pj;
            if (pj < most_negative) {
                most_negative = pj;
                worst_state = idx[j];
            }
        }
        if (worst_state == n) {
            for (std::size_t s = 0; s < n; ++s) if (!active[s]) p[s] = 0.0;
            return p;
        }
        active[worst_state] = false;
        p[worst_state] = 0.0;
    }
    throw NumericalError("boundary fallback did not terminate");
}

}  // namespace detail

/// Variant of the closed form for radii beyond the interior condition: states
/// whose interior probability would be negative are removed from the support
/// and the problem is re-solved under the conditional prior. The minimizer
/// mirrors the maximizer construction applied to -u.
inline InnerSolution worst_best_boundary_fallback(const ReferencePrior& prior, const AmbiguitySpec& amb,
                                                  std::span<const double> u) {
    detail::require(u.size() == prior.size(), "utility vector length must equal prior length");
    const auto p0 = prior.probs();
    std::vector<double> neg(u.begin(), u.end());
    for (auto& x : neg) x = -x;
    auto best = detail::boundary_maximizer(p0, amb.c(), u);
    auto worst = detail::boundary_maximizer(p0, amb.c(), neg);
    return detail::make_inner(p0, std::move(worst), std::move(best), u);
}

/// V = E0[u] - delta S0[u] for an arbitrary utility vector.
inline double value_alpha_from(const ReferencePrior& prior, const AmbiguitySpec& amb, std::span<const double> u) {
    detail::require(u.size() == prior.size(), "utility vector length must equal prior length");
    require_assumption1(prior, amb);
    return stats::mean(prior.probs(), u) - amb.delta() * stats::stddev(prior.probs(), u);
}

/// V(theta) - u(w0), accurate for small positions.
inline double value_alpha_relative(const Agent& agent, const Scenario& sc, std::span<const double> theta) {
    const StateEval ev = evaluate_states(agent, sc, theta);
    return value_alpha_from(agent.prior, agent.ambiguity, ev.rel);
}

inline double value_alpha_relative(const Agent& agent, const Scenario& sc, double theta) {
    return value_alpha_relative(agent, sc, std::span<const double>(&theta, 1));
}

inline double value_alpha(const Agent& agent, const Scenario& sc, std::span<const double> theta) {
    return agent.utility.value(agent.w0) + value_alpha_relative(agent, sc, theta);
}

inline double value_alpha(const Agent& agent, const Scenario& sc, double theta) {
    return value_alpha(agent, sc, std::span<const double>(&theta, 1));
}

struct Lemma1Report {
    bool holds = true;
    double upper_slack = 0.0;  ///< E0[u] + S0[u]/sqrt(d) - max u
    double lower_slack = 0.0;  ///< min u - (E0[u] - S0[u]/sqrt(d))
};

/// Checks that every utility value sits strictly within S0[u]/sqrt(d) of the
/// mean. Constant vectors pass with zero slack.
inline Lemma1Report lemma1_bounds(const ReferencePrior& prior, const AmbiguitySpec& amb, std::span<const double> u) {
    detail::require(u.size() == prior.size(), "utility vector length must equal prior length");
    detail::require(amb.d() > 0.0, "bound check needs d > 0");
    const auto p0 = prior.probs();
    const double Eu = stats::mean(p0, u);
    const double sd = stats::stddev(p0, u);
    const double reach = sd / std::sqrt(amb.d());
    const double umax = *std::max_element(u.begin(), u.end());
    const double umin = *std::min_element(u.begin(), u.end());
    Lemma1Report r;
    r.upper_slack = Eu + reach - umax;
    r.lower_slack = umin - (Eu - reach);
    if (sd < kFlatTolerance) {
        r.holds = r.upper_slack >= -kFlatTolerance && r.lower_slack >= -kFlatTolerance;
    } else {
        r.holds = r.upper_slack > 0.0 && r.lower_slack > 0.0;
    }
    return r;
}

inline Lemma1Report lemma1_bounds(const Agent& agent, std::span<const double> u) {
    return lemma1_bounds(agent.prior, agent.ambiguity, u);
}

/// Moment form of the quadratic quasi-linear value, without the constant
/// w0 - 1/(2 gamma). Only E0[S^k] for k <= 4 enter.
inline double quadratic_moment_value(const Agent& agent, const Scenario& sc, double theta) {
    sc.require_single_asset();
    agent.require_matches(sc);
    detail::require(agent.utility.kind() == UtilityKind::quadratic_quasilinear,
                    "moment form needs quadratic quasi-linear utility");
    detail::require(!agent.has_endowment(), "moment form assumes zero endowment");
    const auto p0 = agent.prior.probs();
    const auto S = sc.payoff();
    const double g = agent.utility.gamma();
    const double m1 = stats::raw_moment(p0, S, 1);
    const double m2 = stats::raw_moment(p0, S, 2);
    const double m3 = stats::raw_moment(p0, S, 3);
    const double m4 = stats::raw_moment(p0, S, 4);
    // Var[(1 - g theta S)^2] expanded in central combinations of the raw
    // moments, which keeps the small-theta regime free of cancellation.
    const double t = g * theta;
    const double var_s = m2 - m1 * m1;
    const double cov_s_s2 = m3 - m1 * m2;
    const double var_s2 = m4 - m2 * m2;
    const double var_y = std::max(0.0, 4.0 * t * t * var_s - 4.0 * t * t * t * cov_s_s2 + t * t * t * t * var_s2);
    return theta * (m1 - sc.price()) - 0.5 * g * theta * theta * m2 -
           agent.delta() * std::sqrt(var_y) / (2.0 * g);
}

/// Value gap V(W_a) - V(W_b) for statewise ordered wealth profiles.
inline double stochastic_dominance_check(const Agent& agent, const WealthProfile& a, const WealthProfile& b) {
    const std::size_t n = agent.prior.size();
    detail::require(a.wealth.size() == n && b.wealth.size() == n, "profile length must equal prior length");
    bool strict = false;
    for (std::size_t s = 0; s < n; ++s) {
        if (a.wealth[s] < b.wealth[s]) throw DomainError("profiles are not statewise ordered");
        if (a.wealth[s] > b.wealth[s]) strict = true;
    }
    if (!strict) throw DomainError("profiles must differ in at least one state");
    detail::require_admissible(agent, a.wealth);
    detail::require_admissible(agent, b.wealth);
    std::vector<double> ua(n);
    std::vector<double> ub(n);
    for (std::size_t s = 0; s < n; ++s) {
        ua[s] = agent.utility.shift(agent.w0, a.wealth[s] - agent.w0);
        ub[s] = agent.utility.shift(agent.w0, b.wealth[s] - agent.w0);
    }
    return value_alpha_from(agent.prior, agent.ambiguity, ua) - value_alpha_from(agent.prior, agent.ambiguity, ub);
}

/// FOC measure p*_s = p0_s (1 - delta (u_s - E0 u)/S0 u), which equals
/// alpha * worst + (1 - alpha) * best.
inline Distribution foc_measure(const ReferencePrior& prior, const AmbiguitySpec& amb, std::span<const double> u) {
    const auto p0 = prior.probs();
    const double sd = stats::stddev(p0, u);
    std::vector<double> p(p0.begin(), p0.end());
    if (sd >= kFlatTolerance) {
        const double Eu = stats::mean(p0, u);
        for (std::size_t s = 0; s < p.size(); ++s) p[s] = p0[s] * (1.0 - amb.delta() * (u[s] - Eu) / sd);
    }
    return Distribution(std::move(p));
}

}  // namespace ambimax

#endif
