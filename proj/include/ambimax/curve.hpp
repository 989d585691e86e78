#ifndef AMBIMAX_CURVE_HPP
#define AMBIMAX_CURVE_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ambimax/csv.hpp"
#include "ambimax/demand.hpp"
#include "ambimax/error.hpp"
#include "ambimax/parallel.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/seeker.hpp"

namespace ambimax {

/// n evenly spaced points from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    detail::require(n >= 1, "grid needs at least one point");
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

/// Averse or neutral demand at each price, evaluated concurrently and returned in grid order.
inline std::vector<DemandCurvePoint> demand_curve(const Agent& agent, const Scenario& sc,
                                                  const std::vector<double>& prices) {
    return parallel_map(prices.size(), [&](std::size_t i) {
        const Scenario at = sc.with_price(prices[i]);
        DemandResult r = agent.has_endowment() ? solve_demand_with_endowment(agent, at) : solve_demand(agent, at);
        return DemandCurvePoint{prices[i], std::move(r)};
    });
}

/// Both seeker optima at each price; two-state scenarios use the closed form.
inline std::vector<SeekerDemand> seeker_curve(const Agent& agent, const Scenario& sc, const std::vector<double>& prices) {
    return parallel_map(prices.size(), [&](std::size_t i) {
        const Scenario at = sc.with_price(prices[i]);
        return sc.num_states() == 2 ? binomial_seeker_closed(agent, at) : seeker_demand(agent, at);
    });
}

/// One CSV line of a demand curve. Averse agents produce a single `optimum`
/// row per price; seekers produce `local_long`, `local_short` and `global` rows.
struct CurveRow {
    double price = 0.0;
    std::string branch;
    double theta = 0.0;
    Side side = Side::zero;
    double value = 0.0;
    double foc_residual = 0.0;
    std::vector<double> q;  ///< pricing measure; prior at a kink
};

namespace detail {

inline CurveRow seeker_row(const Agent& agent, const Scenario& sc, std::string branch, double theta, double value) {
    CurveRow row{sc.price(), std::move(branch), theta, side_of(theta), value, 0.0, {}};
    if (theta == 0.0 || std::isnan(theta)) {
        row.foc_residual = std::numeric_limits<double>::quiet_NaN();
        const auto p = agent.prior.probs();
        row.q.assign(p.begin(), p.end());
        return row;
    }
    row.foc_residual = std::abs(derivative(agent, sc, theta));
    const MartingaleCheck mg = martingale_measure(agent, sc, theta);
    const auto q = mg.measure.probs();
    row.q.assign(q.begin(), q.end());
    return row;
}

}  // namespace detail

inline std::vector<CurveRow> curve_rows(const Agent& agent, const Scenario& sc, const std::vector<double>& prices) {
    std::vector<CurveRow> rows;
    if (agent.alpha() >= 0.5) {
        for (const auto& pt : demand_curve(agent, sc, prices)) {
            const auto q = pt.result.martingale.probs();
            rows.push_back({pt.price, "optimum", pt.result.theta_star, pt.result.side, pt.result.value,
                            pt.result.kink ? std::numeric_limits<double>::quiet_NaN() : pt.result.foc_residual,
                            {q.begin(), q.end()}});
        }
        return rows;
    }
    const auto sides = seeker_curve(agent, sc, prices);
    const double u0 = agent.utility.value(agent.w0);
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const Scenario at = sc.with_price(prices[i]);
        const SeekerDemand& d = sides[i];
        const LocalOptimum none{0.0, u0, 0, true};
        const LocalOptimum& lo = d.local_long ? *d.local_long : none;
        const LocalOptimum& sh = d.local_short ? *d.local_short : none;
        rows.push_back(detail::seeker_row(agent, at, "local_long", lo.theta, lo.value));
        rows.push_back(detail::seeker_row(agent, at, "local_short", sh.theta, sh.value));
        CurveRow g = detail::seeker_row(agent, at, "global", d.global_theta, d.global_value);
        g.side = d.global_side;
        rows.push_back(std::move(g));
    }
    return rows;
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurveRow>& rows, std::size_t states) {
    std::vector<std::string> header{"price", "branch", "theta", "side", "value", "foc_residual"};
    for (std::size_t s = 0; s < states; ++s) header.push_back("q_" + std::to_string(s + 1));
    csv::write_row(os, header);
    for (const auto& r : rows) {
        std::vector<std::string> line{csv::number(r.price), r.branch,         csv::number(r.theta),
                                      to_string(r.side),    csv::number(r.value), csv::number(r.foc_residual)};
        for (double x : r.q) line.push_back(csv::number(x));
        csv::write_row(os, line);
    }
}

}  // namespace ambimax

#endif
