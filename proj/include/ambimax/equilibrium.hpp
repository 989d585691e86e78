#ifndef AMBIMAX_EQUILIBRIUM_HPP
#define AMBIMAX_EQUILIBRIUM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ambimax/ambiguity.hpp"
#include "ambimax/csv.hpp"
#include "ambimax/demand.hpp"
#include "ambimax/error.hpp"
#include "ambimax/roots.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/seeker.hpp"
#include "ambimax/stats.hpp"

namespace ambimax {

struct Market {
    Scenario scenario;
    std::vector<Agent> agents;
    double supply = 0.0;  ///< theta_0; clearing means sum theta_i + theta_0 = 0

    void validate() const {
        scenario.require_single_asset();
        detail::require(agents.size() >= 2, "a market needs at least two agents");
        for (const auto& a : agents) a.require_matches(scenario);
    }
    std::size_t size() const noexcept { return agents.size(); }
};

enum class EquilibriumKind { first_best, second_best, local_second_best, no_trade };

inline const char* to_string(EquilibriumKind k) {
    switch (k) {
        case EquilibriumKind::first_best: return "first_best";
        case EquilibriumKind::second_best: return "second_best";
        case EquilibriumKind::local_second_best: return "local_second_best";
        case EquilibriumKind::no_trade: return "no_trade";
    }
    return "?";
}

struct PriceInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x > lo && x < hi; }
    bool empty() const { return !(lo < hi); }
};

struct EquilibriumResult {
    EquilibriumKind kind = EquilibriumKind::no_trade;
    double price = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> allocations;
    double residual = 0.0;  ///< |sum theta_i + theta_0|
    PriceInterval interval;  ///< price bracket that was searched
    std::optional<PriceInterval> predicted;    ///< second best: interval the theory places the price in
    std::optional<PriceInterval> restriction;  ///< local second best: the position set [-r, r]
    bool cleared = true;
    bool knife_edge = false;  ///< the price sits on a seeker's side switch
    std::string note;
};

inline bool nontriviality_condition(const Market& m) {
    m.validate();
    double min_high = kInf;
    double max_low = -kInf;
    for (const auto& a : m.agents) {
        const auto rb = reservation_interval(a, m.scenario);
        min_high = std::min(min_high, rb.eta_high);
        max_low = std::max(max_low, rb.eta_low);
    }
    return min_high < max_low;
}

/// Trade condition for two agents whose priors give the asset the same
/// standard deviation: |delta_1| + |delta_2| < (E_2 - E_1)/S0, agents ordered
/// so that E_1 <= E_2.
inline bool sharpe_condition(const Agent& a1, const Agent& a2, const Scenario& sc) {
    sc.require_single_asset();
    a1.require_matches(sc);
    a2.require_matches(sc);
    const auto S = sc.payoff();
    const double s1 = stats::stddev(a1.prior.probs(), S);
    const double s2 = stats::stddev(a2.prior.probs(), S);
    if (std::abs(s1 - s2) > 1e-10) {
        throw DomainError("sharpe_condition needs a common standard deviation (got " + csv::number(s1) + " and " +
                          csv::number(s2) + ")");
    }
    double e1 = stats::mean(a1.prior.probs(), S);
    double e2 = stats::mean(a2.prior.probs(), S);
    if (e1 > e2) std::swap(e1, e2);
    return std::abs(a1.delta()) + std::abs(a2.delta()) < (e2 - e1) / s1;
}

inline bool sharpe_condition(const Market& m) {
    detail::require(m.size() == 2, "sharpe_condition applies to two-agent markets");
    return sharpe_condition(m.agents[0], m.agents[1], m.scenario);
}

namespace detail {

inline double prior_mean(const Agent& a, const Scenario& sc) { return stats::mean(a.prior.probs(), sc.payoff()); }

inline double averse_demand(const Agent& a, const Scenario& sc) {
    return a.has_endowment() ? solve_demand_with_endowment(a, sc).theta_star : solve_demand(a, sc).theta_star;
}

inline SeekerDemand seeker_sides(const Agent& a, const Scenario& sc) {
    return sc.num_states() == 2 ? binomial_seeker_closed(a, sc) : seeker_demand(a, sc);
}

// Seeker's position under the one-sided rule: short-only when E_i[S] >= pi.
inline double restricted_seeker_demand(const Agent& a, const Scenario& sc) {
    const SeekerDemand d = seeker_sides(a, sc);
    if (prior_mean(a, sc) >= sc.price()) return d.local_short ? d.local_short->theta : 0.0;
    return d.local_long ? d.local_long->theta : 0.0;
}

inline PriceInterval open_price_range(const Scenario& sc) {
    const double lo = sc.min_payoff();
    const double hi = sc.max_payoff();
    const double pad = 1e-6 * (hi - lo);
    return {lo + pad, hi - pad};
}

inline double sum(const std::vector<double>& v, double start) {
    for (double x : v) start += x;
    return start;
}

inline bool all_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

inline std::string samples_text(double lo, double zlo, double hi, double zhi) {
    return "Z(" + csv::number(lo) + ") = " + csv::number(zlo) + ", Z(" + csv::number(hi) + ") = " + csv::number(zhi);
}

// Largest interval around x where all allocations vanish, found by bisection
// on each side.
template <class Alloc>
PriceInterval zero_plateau(Alloc&& alloc, double lo, double x, double hi) {
    auto edge = [&](double a, double b) {  // a trades, b does not
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            if (mid <= std::min(a, b) || mid >= std::max(a, b)) break;
            (all_zero(alloc(mid)) ? b : a) = mid;
        }
        return b;
    };
    return {edge(lo, x), edge(hi, x)};
}

// Bisection for the clearing price of a decreasing excess demand on [lo, hi].
// Returns nullopt when there is no sign change.
template <class Alloc>
std::optional<EquilibriumResult> clear_on(Alloc&& alloc, double supply, double lo, double hi) {
    auto Z = [&](double p) { return sum(alloc(p), supply); };
    const double zlo = Z(lo);
    const double zhi = Z(hi);
    if (!(zlo * zhi <= 0.0)) return std::nullopt;
    const BisectionResult root = bisect(Z, lo, hi, zlo, zhi);
    EquilibriumResult r;
    r.price = root.x;
    r.allocations = alloc(root.x);
    r.residual = std::abs(sum(r.allocations, supply));
    r.interval = {lo, hi};
    r.cleared = r.residual < 1e-8;
    return r;
}

}  // namespace detail

struct FirstBestOptions {
    /// Let seekers trade their globally chosen side. The excess demand then
    /// jumps at each seeker's side switch and may skip zero.
    bool allow_seekers = false;
};

namespace detail {

// Allocations with seekers on their chosen side. On an exact tie the branch
// argument picks long (true) or short (false).
inline std::vector<double> first_best_allocations(const Market& m, double price, bool tie_long) {
    const Scenario sc = m.scenario.with_price(price);
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Agent& a = m.agents[i];
        if (a.alpha() >= 0.5) {
            out[i] = averse_demand(a, sc);
            continue;
        }
        const SeekerDemand d = seeker_sides(a, sc);
        if (d.global_side == Side::both) {
            out[i] = tie_long ? d.local_long->theta : d.local_short->theta;
        } else {
            out[i] = d.global_theta;
        }
    }
    return out;
}

}  // namespace detail

/// Market clearing with every agent on its unrestricted optimal demand.
inline EquilibriumResult first_best_equilibrium(const Market& m, FirstBestOptions opt = {}) {
    m.validate();
    bool seekers = false;
    bool endowments = false;
    for (const auto& a : m.agents) {
        seekers = seekers || a.alpha() < 0.5;
        endowments = endowments || a.has_endowment();
    }
    if (seekers && !opt.allow_seekers) {
        throw DomainError("first-best equilibrium needs alpha >= 1/2 for every agent; use second_best_equilibrium");
    }
    const PriceInterval range = detail::open_price_range(m.scenario);

    if (!seekers && !endowments && m.supply == 0.0 && !nontriviality_condition(m)) {
        EquilibriumResult r;
        double lo = -kInf;
        double hi = kInf;
        for (const auto& a : m.agents) {
            const auto rb = reservation_interval(a, m.scenario);
            lo = std::max(lo, rb.eta_low);
            hi = std::min(hi, rb.eta_high);
        }
        r.price = 0.5 * (lo + hi);
        r.allocations.assign(m.size(), 0.0);
        r.interval = {lo, hi};
        r.note = "reservation intervals overlap";
        return r;
    }

    auto alloc_long = [&](double p) { return detail::first_best_allocations(m, p, true); };
    auto alloc_short = [&](double p) { return detail::first_best_allocations(m, p, false); };
    auto Z = [&](double p) {
        const double zl = detail::sum(alloc_long(p), m.supply);
        if (!seekers) return zl;
        const double zs = detail::sum(alloc_short(p), m.supply);
        return (zl > 0.0) == (zs > 0.0) ? zl : 0.0;
    };
    const double zlo = Z(range.lo);
    const double zhi = Z(range.hi);
    if (!(zlo > 0.0 && zhi < 0.0)) {
        throw NumericalError("first-best bracket failure: " + detail::samples_text(range.lo, zlo, range.hi, zhi));
    }
    const BisectionResult root = bisect(Z, range.lo, range.hi, zlo, zhi);
    EquilibriumResult r;
    r.kind = EquilibriumKind::first_best;
    r.price = root.x;
    r.interval = range;
    r.allocations = alloc_long(root.x);
    r.residual = std::abs(detail::sum(r.allocations, m.supply));
    if (seekers) {
        auto other = alloc_short(root.x);
        const double res = std::abs(detail::sum(other, m.supply));
        if (res < r.residual) {
            r.allocations = std::move(other);
            r.residual = res;
        }
    }
    if (r.residual >= 1e-8) {
        r.kind = EquilibriumKind::no_trade;
        r.cleared = false;
        r.note = "excess demand jumps across zero at a seeker's side switch; no price clears (jump residual " +
                 csv::number(r.residual) + ")";
        r.allocations.assign(m.size(), 0.0);
        return r;
    }
    if (detail::all_zero(r.allocations)) {
        const PriceInterval flat = detail::zero_plateau(alloc_long, range.lo, root.x, range.hi);
        r.kind = EquilibriumKind::no_trade;
        r.price = 0.5 * (flat.lo + flat.hi);
        r.interval = flat;
        r.note = "all agents inert at the clearing price";
    }
    return r;
}

struct SecondBestReport {
    std::vector<EquilibriumResult> equilibria;  ///< nonempty; holds one no_trade entry if nothing clears
    /// Single-seeker sufficient condition on the reservation bounds; absent
    /// when the market has several seekers.
    std::optional<bool> sufficient_condition;
    /// alpha_seeker + min alpha_i < 1; present only for homogeneous agents.
    std::optional<bool> common_beliefs_condition;
    std::vector<PriceInterval> candidates;  ///< single seeker: long-side and short-side intervals
};

namespace detail {

inline std::vector<std::size_t> seeker_indices(const Market& m) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.agents[i].alpha() < 0.5) out.push_back(i);
    }
    return out;
}

inline bool homogeneous_except_alpha(const Market& m) {
    const Agent& a = m.agents.front();
    for (const auto& b : m.agents) {
        if (!(b.prior == a.prior) || b.ambiguity.c() != a.ambiguity.c() || !(b.utility == a.utility) || b.w0 != a.w0 ||
            b.has_endowment()) {
            return false;
        }
    }
    return true;
}

// Long-side and short-side price intervals for a single seeker s: the seeker
// buys above its mean and below its upper bound while the cheapest seller has
// entered, and symmetrically on the short side.
inline std::vector<PriceInterval> single_seeker_intervals(const Market& m, std::size_t s) {
    const Scenario& sc = m.scenario;
    const auto rs = reservation_interval(m.agents[s], sc);
    const double Es = prior_mean(m.agents[s], sc);
    double min_high = kInf;
    double max_low = -kInf;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == s) continue;
        const auto rb = reservation_interval(m.agents[i], sc);
        min_high = std::min(min_high, rb.eta_high);
        max_low = std::max(max_low, rb.eta_low);
    }
    return {{std::max(Es, min_high), rs.eta_high}, {rs.eta_low, std::min(Es, max_low)}};
}

// Search every stretch between consecutive seeker means, where each seeker's
// side is fixed, for a sign change of excess demand.
template <class Alloc>
std::vector<EquilibriumResult> scan_segments(const Market& m, Alloc&& alloc, EquilibriumKind kind) {
    const PriceInterval range = open_price_range(m.scenario);
    const double width = range.hi - range.lo;
    std::vector<double> cuts{range.lo, range.hi};
    for (std::size_t i : seeker_indices(m)) {
        const double E = prior_mean(m.agents[i], m.scenario);
        if (range.contains(E)) cuts.push_back(E);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<EquilibriumResult> out;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        // Stay strictly off a seeker mean so sides do not flip inside the bracket.
        const double a = cuts[k] + (k == 0 ? 0.0 : 1e-12 * width);
        const double b = cuts[k + 1] - (k + 2 == cuts.size() ? 0.0 : 1e-12 * width);
        if (!(a < b)) continue;
        auto r = clear_on(alloc, m.supply, a, b);
        if (!r || !r->cleared || all_zero(r->allocations)) continue;
        r->kind = kind;
        r->interval = {cuts[k], cuts[k + 1]};
        for (std::size_t i : seeker_indices(m)) {
            const double E = prior_mean(m.agents[i], m.scenario);
            if (std::abs(r->price - E) <= 1e-10 * width) r->knife_edge = true;
        }
        if (r->knife_edge) r->note = "clearing price sits on a seeker's mean; the side rule is discontinuous here";
        out.push_back(std::move(*r));
    }
    return out;
}

inline EquilibriumResult no_trade_result(const Market& m, std::string note) {
    EquilibriumResult r;
    r.allocations.assign(m.size(), 0.0);
    r.interval = open_price_range(m.scenario);
    r.cleared = false;
    r.note = std::move(note);
    return r;
}

inline void require_second_best_market(const Market& m) {
    m.validate();
    detail::require(m.supply == 0.0, "second-best equilibria assume zero supply");
    detail::require(!seeker_indices(m).empty(),
                    "second-best equilibrium needs at least one seeker (alpha < 1/2); use first_best_equilibrium");
    for (const auto& a : m.agents) {
        detail::require(a.alpha() >= 0.5 || !a.has_endowment(), "seekers with endowments are not supported");
    }
}

}  // namespace detail

/// Clearing prices when each seeker is held to one side: short when its mean
/// is at least the price, long otherwise. Every clearing price found is
/// returned, in increasing order.
inline SecondBestReport second_best_equilibrium(const Market& m) {
    detail::require_second_best_market(m);
    const auto seekers = detail::seeker_indices(m);
    SecondBestReport rep;
    if (seekers.size() == 1) {
        const std::size_t s = seekers.front();
        const auto rs = reservation_interval(m.agents[s], m.scenario);
        double max_high = -kInf;
        double min_low = kInf;
        double min_alpha = kInf;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i == s) continue;
            const auto rb = reservation_interval(m.agents[i], m.scenario);
            max_high = std::max(max_high, rb.eta_high);
            min_low = std::min(min_low, rb.eta_low);
            min_alpha = std::min(min_alpha, m.agents[i].alpha());
        }
        rep.sufficient_condition = rs.eta_high > max_high || rs.eta_low < min_low;
        if (detail::homogeneous_except_alpha(m)) rep.common_beliefs_condition = m.agents[s].alpha() + min_alpha < 1.0;
        rep.candidates = detail::single_seeker_intervals(m, s);
    }
    auto alloc = [&](double p) {
        const Scenario sc = m.scenario.with_price(p);
        std::vector<double> out(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Agent& a = m.agents[i];
            out[i] = a.alpha() >= 0.5 ? detail::averse_demand(a, sc) : detail::restricted_seeker_demand(a, sc);
        }
        return out;
    };
    rep.equilibria = detail::scan_segments(m, alloc, EquilibriumKind::second_best);
    for (auto& r : rep.equilibria) {
        for (const auto& c : rep.candidates) {
            if (c.contains(r.price)) r.predicted = c;
        }
    }
    if (rep.equilibria.empty()) {
        rep.equilibria.push_back(detail::no_trade_result(m, "no sign change of restricted excess demand on any segment"));
    }
    return rep;
}

namespace detail {

constexpr int kRestrictedGrid = 257;

// argmax of V over [lo, hi] on one half-line: a grid pass, then golden-section
// refinement inside the best cell.
inline double bounded_argmax(const Agent& a, const Scenario& sc, double lo, double hi) {
    auto V = [&](double th) { return value_alpha_relative(a, sc, th); };
    double best = lo;
    double best_v = lo == 0.0 ? 0.0 : V(lo);
    for (int j = 1; j <= kRestrictedGrid; ++j) {
        const double th = lo + (hi - lo) * j / kRestrictedGrid;
        if (th == 0.0) continue;
        const double v = V(th);
        if (v > best_v) {
            best_v = v;
            best = th;
        }
    }
    const double step = (hi - lo) / kRestrictedGrid;
    double x0 = std::max(lo, best - step);
    double x1 = std::min(hi, best + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto safeV = [&](double th) { return th == 0.0 ? 0.0 : V(th); };
    double c = x1 - phi * (x1 - x0);
    double d = x0 + phi * (x1 - x0);
    double fc = safeV(c);
    double fd = safeV(d);
    for (int it = 0; it < 200 && x1 - x0 > 1e-15 * std::max(1.0, std::abs(best)); ++it) {
        if (fc > fd) {
            x1 = d;
            d = c;
            fd = fc;
            c = x1 - phi * (x1 - x0);
            fc = safeV(c);
        } else {
            x0 = c;
            c = d;
            fc = fd;
            d = x0 + phi * (x1 - x0);
            fd = safeV(d);
        }
    }
    const double mid = 0.5 * (x0 + x1);
    return safeV(mid) > best_v ? mid : best;
}

inline double side_reach(const Agent& a, const Scenario& sc, double dir) {
    if (!a.utility.positive_domain()) return kInf;
    const PositionBounds b = admissible_bounds(a, sc);
    return (dir > 0.0 ? b.upper : -b.lower) * (1.0 - 1e-9);
}

// Seeker argmax over [0, r] (long) or [-r, 0] (short), with the side fixed by the mean rule.
inline double restricted_seeker_bounded(const Agent& a, const Scenario& sc, double r) {
    const double dir = prior_mean(a, sc) >= sc.price() ? -1.0 : 1.0;
    const double reach = std::min(r, side_reach(a, sc, dir));
    if (sc.num_states() == 2) {
        const SeekerDemand d = binomial_seeker_closed(a, sc);
        const auto& opt = dir > 0.0 ? d.local_long : d.local_short;
        const double th = opt ? opt->theta : 0.0;
        return dir * std::min(std::abs(th), reach);
    }
    return dir > 0.0 ? bounded_argmax(a, sc, 0.0, reach) : bounded_argmax(a, sc, -reach, 0.0);
}

}  // namespace detail

/// Clearing prices when every agent must also hold a position in [-r, r].
inline SecondBestReport local_second_best(const Market& m, double half_width) {
    detail::require_second_best_market(m);
    detail::require(half_width >= 0.0, "position restriction half-width must be >= 0");
    SecondBestReport rep;
    const auto seekers = detail::seeker_indices(m);
    if (seekers.size() == 1) rep.candidates = detail::single_seeker_intervals(m, seekers.front());
    if (half_width == 0.0) {
        auto r = detail::no_trade_result(m, "empty trading set");
        r.restriction = PriceInterval{0.0, 0.0};
        rep.equilibria.push_back(std::move(r));
        return rep;
    }
    auto alloc = [&](double p) {
        const Scenario sc = m.scenario.with_price(p);
        std::vector<double> out(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
            const Agent& a = m.agents[i];
            out[i] = a.alpha() >= 0.5 ? std::clamp(detail::averse_demand(a, sc), -half_width, half_width)
                                      : detail::restricted_seeker_bounded(a, sc, half_width);
        }
        return out;
    };
    rep.equilibria = detail::scan_segments(m, alloc, EquilibriumKind::local_second_best);
    for (auto& r : rep.equilibria) {
        r.restriction = PriceInterval{-half_width, half_width};
        for (const auto& c : rep.candidates) {
            if (c.contains(r.price)) r.predicted = c;
        }
    }
    if (rep.equilibria.empty()) {
        auto r = detail::no_trade_result(m, "no sign change of restricted excess demand on any segment");
        r.restriction = PriceInterval{-half_width, half_width};
        rep.equilibria.push_back(std::move(r));
    }
    return rep;
}

namespace detail {

// First critical point of V on the half-line `dir`, starting from the kink
// where V' has the sign of dir.
inline double first_local_max(const Agent& a, const Scenario& sc, double dir) {
    double reach = side_reach(a, sc, dir);
    if (!std::isfinite(reach)) reach = 50.0 * position_scale(a, sc);
    auto g = [&](double t) { return dir * derivative(a, sc, dir * t); };
    constexpr int kSteps = 400;
    double prev = reach * 1e-9;
    double gprev = g(prev);
    for (int j = 1; j <= kSteps; ++j) {
        const double t = reach * std::pow(1e-9, 1.0 - static_cast<double>(j) / kSteps);
        const double gt = g(t);
        if (gprev > 0.0 && gt <= 0.0) return dir * bisect(g, prev, t, gprev, gt).x;
        prev = t;
        gprev = gt;
    }
    return dir * reach;
}

}  // namespace detail

/// Restriction set construction at a fixed price inside one of the
/// single-seeker intervals: the set [-r, r] is chosen so that the restricted
/// optima clear at this price.
inline EquilibriumResult local_second_best_at(const Market& m, double price) {
    detail::require_second_best_market(m);
    const auto seekers = detail::seeker_indices(m);
    detail::require(seekers.size() == 1, "the restriction construction handles exactly one seeker");
    const std::size_t s = seekers.front();
    const Scenario sc = m.scenario.with_price(price);
    sc.require_interior_price();
    const auto iv = detail::single_seeker_intervals(m, s);
    // The proof's intervals, further cut at the seeker's mean by the side rule.
    const auto rs = reservation_interval(m.agents[s], sc);
    double max_high = -kInf;
    double min_low = kInf;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == s) continue;
        const auto rb = reservation_interval(m.agents[i], sc);
        max_high = std::max(max_high, rb.eta_high);
        min_low = std::min(min_low, rb.eta_low);
    }
    const double Es = detail::prior_mean(m.agents[s], sc);
    const PriceInterval up{std::max(Es, max_high), rs.eta_high};
    const PriceInterval down{rs.eta_low, std::min(Es, min_low)};
    double dir;
    PriceInterval where;
    if (up.contains(price)) {
        dir = 1.0;
        where = up;
    } else if (down.contains(price) || (price == Es && down.lo < price && price < min_low)) {
        dir = -1.0;
        where = down;
    } else {
        throw DomainError("price " + csv::number(price) + " lies outside both local second-best intervals");
    }
    std::vector<double> others(m.size(), 0.0);
    double need = 0.0;
    double largest = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == s) continue;
        const double th = detail::averse_demand(m.agents[i], sc);
        others[i] = th;
        need += th;
        largest = std::max(largest, std::abs(th));
    }
    const double first = std::abs(detail::first_local_max(m.agents[s], sc, dir));
    // F(r) = seeker's restricted position plus everyone else clamped to [-r, r].
    auto F = [&](double r) {
        double z = dir * std::min(r, first);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i != s) z += std::clamp(others[i], -r, r);
        }
        return z;
    };
    double r;
    if (m.size() == 2) {
        r = std::min(first, largest);
    } else {
        const double top = std::max(first, largest);
        const double ftop = F(top);
        const double fsmall = F(1e-12 * top);
        if (!(ftop * fsmall <= 0.0)) {
            throw DomainError("no symmetric position restriction clears at price " + csv::number(price));
        }
        r = bisect(F, 1e-12 * top, top, fsmall, ftop).x;
    }
    EquilibriumResult out;
    out.kind = EquilibriumKind::local_second_best;
    out.price = price;
    out.allocations.assign(m.size(), 0.0);
    out.allocations[s] = dir * std::min(r, first);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i != s) out.allocations[i] = std::clamp(others[i], -r, r);
    }
    out.residual = std::abs(detail::sum(out.allocations, 0.0));
    out.cleared = out.residual < 1e-8;
    out.interval = where;
    out.predicted = where;
    out.restriction = PriceInterval{-r, r};
    (void)need;
    (void)iv;
    return out;
}

/// V_i(theta_i) - V_i(0) for each agent at the given allocation.
inline std::vector<double> gains_over_no_trade(const Market& m, const EquilibriumResult& r) {
    const Scenario sc = m.scenario.with_price(r.price);
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Agent& a = m.agents[i];
        const double at0 = a.has_endowment() ? value_alpha_relative(a, sc, 0.0) : 0.0;
        out[i] = value_alpha_relative(a, sc, r.allocations.at(i)) - at0;
    }
    return out;
}

struct RiskSharingResult {
    double transfer = 0.0;   ///< units moved from agent 2 to agent 1
    double exposure1 = 0.0;  ///< theta_1 + transfer
    double exposure2 = 0.0;  ///< theta_2 - transfer
    double total_compensation = 0.0;
    /// gamma_2 (theta_1 + theta_2)/(gamma_1 + gamma_2), reported when priors
    /// and delta coincide.
    std::optional<double> closed_form_exposure1;
};

namespace detail {

// d/dx of the total compensation of an exponential agent holding x units,
// without the price term (it cancels between the two agents).
inline double compensation_slope(const Agent& a, const Scenario& sc, double x) {
    const auto p0 = a.prior.probs();
    const auto S = sc.payoff();
    const double g = a.utility.gamma();
    std::vector<double> e(S.size());
    std::vector<double> de(S.size());
    for (std::size_t s = 0; s < S.size(); ++s) {
        e[s] = std::exp(-g * x * S[s]);
        de[s] = -g * S[s] * e[s];
    }
    const double sd = stats::stddev(p0, e);
    const double M = stats::mean(p0, e) + a.delta() * sd;
    double dM = stats::mean(p0, de);
    if (sd > 0.0) dM += a.delta() * stats::covariance(p0, e, de) / sd;
    return dM / (g * M);
}

inline double compensation_level(const Agent& a, const Scenario& sc, double x) {
    const auto p0 = a.prior.probs();
    const auto S = sc.payoff();
    const double g = a.utility.gamma();
    std::vector<double> e(S.size());
    for (std::size_t s = 0; s < S.size(); ++s) e[s] = std::exp(-g * x * S[s]);
    return x * sc.price() + std::log(stats::mean(p0, e) + a.delta() * stats::stddev(p0, e)) / g;
}

}  // namespace detail

/// Transfer of asset units between two exponential agents that minimizes the
/// sum of their total compensations.
inline RiskSharingResult exponential_risk_sharing(const Agent& a1, const Agent& a2, const Scenario& sc, double theta1,
                                                  double theta2) {
    detail::require(a1.utility.kind() == UtilityKind::exponential && a2.utility.kind() == UtilityKind::exponential,
                    "risk sharing needs exponential utility for both agents");
    sc.require_single_asset();
    a1.require_matches(sc);
    a2.require_matches(sc);
    require_assumption1(a1.prior, a1.ambiguity);
    require_assumption1(a2.prior, a2.ambiguity);
    auto slope = [&](double t) {
        return detail::compensation_slope(a1, sc, theta1 + t) - detail::compensation_slope(a2, sc, theta2 - t);
    };
    const double scale = 1.0 / (std::min(a1.utility.gamma(), a2.utility.gamma()) * (sc.max_payoff() - sc.min_payoff()));
    double lo = -scale;
    double hi = scale;
    for (int k = 0; k < 200 && slope(lo) > 0.0; ++k) lo *= 2.0;
    for (int k = 0; k < 200 && slope(hi) < 0.0; ++k) hi *= 2.0;
    const double slo = slope(lo);
    const double shi = slope(hi);
    if (!(slo <= 0.0 && shi >= 0.0)) throw NumericalError("risk-sharing bracket failure");
    RiskSharingResult r;
    r.transfer = bisect(slope, lo, hi, slo, shi).x;
    r.exposure1 = theta1 + r.transfer;
    r.exposure2 = theta2 - r.transfer;
    r.total_compensation =
        detail::compensation_level(a1, sc, r.exposure1) + detail::compensation_level(a2, sc, r.exposure2);
    if (a1.prior == a2.prior && a1.delta() == a2.delta()) {
        const double g1 = a1.utility.gamma();
        const double g2 = a2.utility.gamma();
        r.closed_form_exposure1 = g2 * (theta1 + theta2) / (g1 + g2);
    }
    return r;
}

struct CounterexampleReport {
    double mean1 = 0.0;         ///< seeker's E_1[S]
    double theta1_at_mean = 0.0;  ///< seeker's long demand at E_1[S]
    double theta2_at_mean = 0.0;  ///< averse agent's short demand at E_1[S]
    bool disjoint_intervals = false;   ///< upper bound of agent 2 below lower bound of agent 1
    bool no_trade_condition = false;   ///< -theta_2 < theta_1 at E_1[S]
    bool holds = false;                ///< both: no trade despite disjoint intervals
};

namespace detail {

// Unrestricted exponential optimum under a fixed two-point belief.
inline double exponential_binomial_theta(double gamma, const std::vector<double>& P, const Scenario& sc, double price) {
    const auto S = sc.payoff();
    const std::size_t h = S[0] >= S[1] ? 0 : 1;
    const double up = S[h] - price;
    const double down = price - S[1 - h];
    return std::log(P[h] * up / (P[1 - h] * down)) / (gamma * (S[h] - S[1 - h]));
}

}  // namespace detail

/// Whether a seeker (agent 1) and an averse agent (agent 2), both exponential
/// in a two-state market, fail to trade although agent 2's reservation
/// interval lies wholly below agent 1's.
inline CounterexampleReport counterexample_check(const Agent& seeker, const Agent& averse, const Scenario& sc) {
    detail::require(sc.num_states() == 2 && sc.num_assets() == 1, "counterexample check needs a two-state single-asset market");
    detail::require(seeker.utility.kind() == UtilityKind::exponential && averse.utility.kind() == UtilityKind::exponential,
                    "counterexample check needs exponential utility for both agents");
    detail::require(seeker.alpha() < 0.5 && averse.alpha() > 0.5,
                    "counterexample check needs a seeker first and an ambiguity-averse agent second");
    CounterexampleReport r;
    r.mean1 = detail::prior_mean(seeker, sc);
    const Scenario at = sc.with_price(r.mean1);
    at.require_interior_price();
    r.theta1_at_mean = detail::exponential_binomial_theta(seeker.utility.gamma(), binomial_measures(seeker, at).plus, at, r.mean1);
    r.theta2_at_mean = detail::exponential_binomial_theta(averse.utility.gamma(), binomial_measures(averse, at).minus, at, r.mean1);
    r.disjoint_intervals = reservation_interval(averse, at).eta_high < reservation_interval(seeker, at).eta_low;
    r.no_trade_condition = -r.theta2_at_mean < r.theta1_at_mean;
    r.holds = r.disjoint_intervals && r.no_trade_condition;
    return r;
}

}  // namespace ambimax

#endif
