#ifndef AMBIMAX_SEEKER_HPP
#define AMBIMAX_SEEKER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ambimax/ambiguity.hpp"
#include "ambimax/csv.hpp"
#include "ambimax/demand.hpp"
#include "ambimax/error.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/stats.hpp"

namespace ambimax {

struct TraceEntry {
    int iteration = 0;
    double theta = 0.0;
    double value = 0.0;  ///< V_alpha(theta), absolute
    std::vector<double> measure;
};

struct Algorithm1Result {
    double theta = 0.0;
    double value = 0.0;
    Distribution measure;
    std::vector<TraceEntry> trace;
    int iterations = 0;
    bool converged = false;
    /// The inner expected-utility step found no gain on the starting side, so
    /// the iteration stopped at the kink theta = 0.
    bool reached_zero = false;
};

/// Alternating maximization for alpha < 1/2. Since the seeker's value is a
/// plain maximum over the reduced ball of radius d(1 - 2 alpha)^2, each round
/// takes the best-case belief at the current position and then the
/// expected-utility optimum under that belief. Positions stay on the half-line
/// of `theta0`.
inline Algorithm1Result algorithm1(const Agent& agent, const Scenario& sc, double theta0, double epsilon = 1e-10,
                                   int max_iter = 10000) {
    detail::require(agent.alpha() < 0.5, "algorithm1 needs an ambiguity seeker (alpha < 1/2)");
    sc.require_single_asset();
    sc.require_interior_price();
    agent.require_matches(sc);
    detail::require(!agent.has_endowment(), "algorithm1 assumes zero endowment");
    detail::require(theta0 != 0.0, "algorithm1 needs a nonzero starting position");
    detail::require(epsilon > 0.0, "algorithm1 tolerance must be positive");
    if (!wealth_profile(agent, sc, theta0).admissible) {
        throw DomainError("inadmissible start theta0 = " + csv::number(theta0));
    }
    const AmbiguitySpec reduced(1.0 + agent.ambiguity.reduced_d(), 0.0);
    require_assumption1(agent.prior, reduced);
    const Side side = side_of(theta0);
    const auto p0 = agent.prior.probs();

    auto best_belief = [&](const StateEval& ev) -> std::vector<double> {
        if (reduced.d() == 0.0 || stats::stddev(p0, ev.rel) < kFlatTolerance) return {p0.begin(), p0.end()};
        const InnerSolution inner = worst_best_closed_form(agent.prior, reduced, ev.rel);
        const auto best = inner.best.probs();
        return {best.begin(), best.end()};
    };

    Algorithm1Result out;
    double theta = theta0;
    for (int it = 0;; ++it) {
        const StateEval ev = evaluate_states(agent, sc, theta);
        std::vector<double> P = best_belief(ev);
        const double value = ev.base + stats::mean(P, ev.rel);
        out.trace.push_back({it, theta, value, P});
        if (it > 0 && (out.converged || out.reached_zero)) {
            out.theta = theta;
            out.value = value;
            out.measure = Distribution(std::move(P));
            out.iterations = it;
            return out;
        }
        if (it >= max_iter) {
            throw NumericalError("algorithm1 did not converge within " + std::to_string(max_iter) + " iterations");
        }
        const double next = expected_utility_demand(agent, sc, P, side).x;
        if (std::abs(next - theta) <= epsilon || reduced.d() == 0.0) out.converged = true;
        if (next == 0.0) out.reached_zero = true;
        theta = next;
    }
}

inline void write_trace_csv(std::ostream& os, const Algorithm1Result& r) {
    std::vector<std::string> header{"iteration", "theta", "value"};
    const std::size_t n = r.trace.empty() ? 0 : r.trace.front().measure.size();
    for (std::size_t s = 0; s < n; ++s) header.push_back("p" + std::to_string(s + 1));
    csv::write_row(os, header);
    for (const auto& e : r.trace) {
        std::vector<std::string> row{csv::number(e.iteration), csv::number(e.theta), csv::number(e.value)};
        for (double p : e.measure) row.push_back(csv::number(p));
        csv::write_row(os, row);
    }
}

struct LocalOptimum {
    double theta = 0.0;
    double value = 0.0;
    int iterations = 0;
    bool converged = true;
};

struct SeekerDemand {
    double price = 0.0;
    std::optional<LocalOptimum> local_long;
    std::optional<LocalOptimum> local_short;
    /// `both` when the two optima tie to 1e-12 relative; `zero` when neither
    /// side improves on no trade.
    Side global_side = Side::zero;
    /// NaN on a tie, so callers must look at both optima.
    double global_theta = 0.0;
    double global_value = 0.0;
};

namespace detail {

inline void settle_global(SeekerDemand& d, double no_trade_value) {
    const bool L = d.local_long.has_value();
    const bool S = d.local_short.has_value();
    if (!L && !S) {
        d.global_side = Side::zero;
        d.global_theta = 0.0;
        d.global_value = no_trade_value;
        return;
    }
    if (L && S) {
        const double vl = d.local_long->value;
        const double vs = d.local_short->value;
        if (std::abs(vl - vs) <= 1e-12 * std::max(1.0, std::max(std::abs(vl), std::abs(vs)))) {
            d.global_side = Side::both;
            d.global_theta = std::numeric_limits<double>::quiet_NaN();
            d.global_value = std::max(vl, vs);
            return;
        }
    }
    const bool pick_long = L && (!S || d.local_long->value > d.local_short->value);
    const LocalOptimum& o = pick_long ? *d.local_long : *d.local_short;
    d.global_side = pick_long ? Side::long_side : Side::short_side;
    d.global_theta = o.theta;
    d.global_value = o.value;
}

inline void require_seeker_problem(const Agent& agent, const Scenario& sc) {
    detail::require(agent.alpha() < 0.5, "seeker demand needs alpha < 1/2; use solve_demand otherwise");
    sc.require_single_asset();
    sc.require_interior_price();
    agent.require_matches(sc);
    detail::require(!agent.has_endowment(), "seeker demand assumes zero endowment");
}

inline double seeker_start(const Agent& agent, const Scenario& sc) {
    if (!agent.utility.positive_domain()) return 0.5;
    const PositionBounds b = admissible_bounds(agent, sc);
    return std::min(0.1 * (b.upper - b.lower) / 2.0, 0.5);
}

// Best of 129 interior grid points on one half-line, or `fallback` if the plain
// start is at least as good.
inline double prescan_start(const Agent& agent, const Scenario& sc, double dir, double fallback) {
    double reach;
    if (agent.utility.positive_domain()) {
        const PositionBounds b = admissible_bounds(agent, sc);
        reach = dir > 0.0 ? b.upper : -b.lower;
    } else {
        reach = 20.0 * position_scale(agent, sc);
    }
    double best_theta = fallback;
    double best_value = value_alpha_relative(agent, sc, fallback);
    for (int j = 1; j <= 129; ++j) {
        const double th = dir * reach * j / 130.0;
        const double v = value_alpha_relative(agent, sc, th);
        if (v > best_value) {
            best_value = v;
            best_theta = th;
        }
    }
    return best_theta;
}

}  // namespace detail

/// Both local optima of a seeker's value. Outside the reservation interval
/// only the profitable side is searched; inside it both are.
inline SeekerDemand seeker_demand(const Agent& agent, const Scenario& sc) {
    detail::require_seeker_problem(agent, sc);
    const ReservationBounds rb = reservation_interval(agent, sc);
    const double pi = sc.price();
    const double start = detail::seeker_start(agent, sc);
    const bool prescan = sc.num_states() > 2;

    SeekerDemand out;
    out.price = pi;
    auto run = [&](double dir) -> std::optional<LocalOptimum> {
        double th0 = dir * start;
        if (prescan) th0 = detail::prescan_start(agent, sc, dir, th0);
        const Algorithm1Result r = algorithm1(agent, sc, th0);
        if (r.reached_zero || r.theta == 0.0) return std::nullopt;
        return LocalOptimum{r.theta, r.value, r.iterations, r.converged};
    };
    if (pi < rb.eta_high) out.local_long = run(1.0);
    if (pi > rb.eta_low) out.local_short = run(-1.0);
    detail::settle_global(out, agent.utility.value(agent.w0));
    return out;
}

inline SeekerDemand seeker_demand(const Agent& agent, const Scenario& sc, double price) {
    return seeker_demand(agent, sc.with_price(price));
}

/// Long-side and short-side beliefs in a two-state model, indexed like the
/// scenario's states.
struct BinomialMeasures {
    std::vector<double> plus;   ///< used for theta > 0
    std::vector<double> minus;  ///< used for theta < 0
};

inline BinomialMeasures binomial_measures(const Agent& agent, const Scenario& sc) {
    detail::require(sc.num_states() == 2, "binomial measures need exactly two states");
    const auto S = sc.payoff();
    const std::size_t h = S[0] >= S[1] ? 0 : 1;
    const double ph = agent.prior[h];
    const double tilt = agent.delta() * std::sqrt(ph * (1.0 - ph));
    BinomialMeasures m{std::vector<double>(2), std::vector<double>(2)};
    m.plus[h] = ph - tilt;
    m.plus[1 - h] = 1.0 - m.plus[h];
    m.minus[h] = ph + tilt;
    m.minus[1 - h] = 1.0 - m.minus[h];
    return m;
}

namespace detail {

// Expected-utility optimum under a fixed two-point belief, restricted to `side`.
inline double binomial_side_optimum(const Agent& agent, const Scenario& sc, const std::vector<double>& P, Side side) {
    const auto S = sc.payoff();
    const std::size_t h = S[0] >= S[1] ? 0 : 1;
    const double pi = sc.price();
    const double a = S[h] - pi;
    const double b = S[1 - h] - pi;
    const double R = P[1 - h] * (-b) / (P[h] * a);
    double theta;
    switch (agent.utility.kind()) {
        case UtilityKind::power:
        case UtilityKind::log: {
            const double r = std::pow(R, -1.0 / agent.utility.gamma());
            theta = agent.w0 * (r - 1.0) / (a - r * b);
            break;
        }
        case UtilityKind::exponential:
            theta = -std::log(R) / (agent.utility.gamma() * (a - b));
            break;
        default:
            return expected_utility_demand(agent, sc, P, side).x;
    }
    if (side == Side::long_side && !(theta > 0.0)) return 0.0;
    if (side == Side::short_side && !(theta < 0.0)) return 0.0;
    return theta;
}

}  // namespace detail

/// Two-state seeker demand: on each half-line the problem is a plain
/// expected-utility problem under P+ or P-.
inline SeekerDemand binomial_seeker_closed(const Agent& agent, const Scenario& sc) {
    detail::require(sc.num_states() == 2, "binomial_seeker_closed needs exactly two states");
    detail::require_seeker_problem(agent, sc);
    const BinomialMeasures m = binomial_measures(agent, sc);
    const ReservationBounds rb = reservation_interval(agent, sc);
    const double pi = sc.price();
    SeekerDemand out;
    out.price = pi;
    if (pi < rb.eta_high) {
        const double th = detail::binomial_side_optimum(agent, sc, m.plus, Side::long_side);
        if (th != 0.0) out.local_long = LocalOptimum{th, value_alpha(agent, sc, th), 0, true};
    }
    if (pi > rb.eta_low) {
        const double th = detail::binomial_side_optimum(agent, sc, m.minus, Side::short_side);
        if (th != 0.0) out.local_short = LocalOptimum{th, value_alpha(agent, sc, th), 0, true};
    }
    detail::settle_global(out, agent.utility.value(agent.w0));
    return out;
}

inline SeekerDemand binomial_seeker_closed(const Agent& agent, const Scenario& sc, double price) {
    return binomial_seeker_closed(agent, sc.with_price(price));
}

struct DiscontinuityProbe {
    double price_below = 0.0;
    double price_above = 0.0;
    double theta_below = 0.0;
    double theta_above = 0.0;
    double jump = 0.0;  ///< theta_below - theta_above
};

/// Chosen demand just below and just above E0[S]. A tie at either probe price
/// resolves toward the long side below and the short side above.
inline DiscontinuityProbe discontinuity_probe(const Agent& agent, const Scenario& sc) {
    sc.require_single_asset();
    const auto p0 = agent.prior.probs();
    const double E = stats::mean(p0, sc.payoff());
    const double eps = 1e-6 * stats::stddev(p0, sc.payoff());
    DiscontinuityProbe out;
    out.price_below = E - eps;
    out.price_above = E + eps;
    auto chosen = [&](double price, bool below) {
        if (agent.alpha() >= 0.5) return solve_demand(agent, sc, price).theta_star;
        const SeekerDemand d = seeker_demand(agent, sc, price);
        if (d.global_side != Side::both) return d.global_theta;
        return below ? d.local_long->theta : d.local_short->theta;
    };
    out.theta_below = chosen(out.price_below, true);
    out.theta_above = chosen(out.price_above, false);
    out.jump = out.theta_below - out.theta_above;
    return out;
}

}  // namespace ambimax

#endif
