#ifndef AMBIMAX_SCAN_HPP
#define AMBIMAX_SCAN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ambimax/ambiguity.hpp"
#include "ambimax/demand.hpp"
#include "ambimax/error.hpp"
#include "ambimax/parallel.hpp"
#include "ambimax/scenario.hpp"

namespace ambimax {

constexpr std::size_t kDefaultScanPoints = 2049;

struct SideArgmax {
    double theta = 0.0;
    double gain = 0.0;  ///< V(theta) - u(w0)
};

struct GridScan {
    std::vector<double> grid;    ///< ascending, includes 0
    std::vector<double> values;  ///< V_alpha, absolute
    std::vector<double> gains;   ///< V_alpha - u(w0), free of cancellation
    SideArgmax best_long;
    SideArgmax best_short;
    std::vector<std::size_t> local_maxima;  ///< indices into grid

    /// Larger of the two cells adjacent to grid[i].
    double step_at(std::size_t i) const {
        double h = 0.0;
        if (i > 0) h = std::max(h, grid[i] - grid[i - 1]);
        if (i + 1 < grid.size()) h = std::max(h, grid[i + 1] - grid[i]);
        return h;
    }
    std::size_t index_of(double theta) const {
        const auto it = std::lower_bound(grid.begin(), grid.end(), theta);
        if (it == grid.end()) return grid.size() - 1;
        if (it == grid.begin()) return 0;
        const std::size_t j = static_cast<std::size_t>(it - grid.begin());
        return theta - grid[j - 1] < grid[j] - theta ? j - 1 : j;
    }
};

namespace detail {

// Distances from 0 along one side of reach R: a quarter of the points spaced
// geometrically inside R/100, half linear across the middle, and the last
// quarter closing in on R geometrically.
inline std::vector<double> hybrid_offsets(double R, std::size_t points) {
    detail::require(points >= 8, "scan needs at least 8 points per side");
    const std::size_t inner = points / 4;
    const std::size_t outer = points / 4;
    const std::size_t middle = points - inner - outer;
    const double tiny = 1e-9 * R;
    const double edge = 0.01 * R;
    std::vector<double> out;
    out.reserve(points);
    for (std::size_t j = 0; j < inner; ++j) {
        out.push_back(tiny * std::pow(edge / tiny, static_cast<double>(j) / static_cast<double>(inner)));
    }
    for (std::size_t j = 0; j < middle; ++j) {
        out.push_back(edge + (R - 2.0 * edge) * static_cast<double>(j) / static_cast<double>(middle - 1));
    }
    for (std::size_t j = 1; j <= outer; ++j) {
        out.push_back(R - edge * std::pow(tiny / edge, static_cast<double>(j) / static_cast<double>(outer)));
    }
    return out;
}

inline double scan_reach(const Agent& agent, const Scenario& sc, double dir) {
    if (agent.utility.positive_domain()) {
        const PositionBounds b = admissible_bounds(agent, sc);
        return dir > 0.0 ? b.upper : -b.lower;
    }
    return 20.0 * position_scale(agent, sc);
}

}  // namespace detail

/// Dense scan of V_alpha over the admissible positions at the scenario price.
inline GridScan value_scan(const Agent& agent, const Scenario& sc, std::size_t points_per_side = kDefaultScanPoints) {
    sc.require_single_asset();
    sc.require_interior_price();
    detail::require(!agent.has_endowment(), "value_scan assumes zero endowment");
    GridScan g;
    const auto up = detail::hybrid_offsets(detail::scan_reach(agent, sc, 1.0), points_per_side);
    const auto down = detail::hybrid_offsets(detail::scan_reach(agent, sc, -1.0), points_per_side);
    g.grid.reserve(2 * points_per_side + 1);
    for (auto it = down.rbegin(); it != down.rend(); ++it) g.grid.push_back(-*it);
    g.grid.push_back(0.0);
    g.grid.insert(g.grid.end(), up.begin(), up.end());

    g.gains = parallel_map(g.grid.size(), [&](std::size_t i) { return value_alpha_relative(agent, sc, g.grid[i]); });
    const double base = agent.utility.value(agent.w0);
    g.values.resize(g.gains.size());
    for (std::size_t i = 0; i < g.gains.size(); ++i) g.values[i] = base + g.gains[i];

    g.best_long = {g.grid.back(), -kInf};
    g.best_short = {g.grid.front(), -kInf};
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        const double th = g.grid[i];
        SideArgmax& side = th > 0.0 ? g.best_long : g.best_short;
        if (th != 0.0 && g.gains[i] > side.gain) side = {th, g.gains[i]};
        const bool left = i == 0 || g.gains[i] > g.gains[i - 1];
        const bool right = i + 1 == g.grid.size() || g.gains[i] >= g.gains[i + 1];
        if (left && right && i > 0 && i + 1 < g.grid.size()) g.local_maxima.push_back(i);
    }
    return g;
}

inline GridScan value_scan(const Agent& agent, const Scenario& sc, double price, std::size_t points_per_side) {
    return value_scan(agent, sc.with_price(price), points_per_side);
}

/// Central difference of V_alpha of order 1 or 2 with step h, kept on one side of the kink.
inline double finite_difference_derivative(const Agent& agent, const Scenario& sc, double theta, int order, double h) {
    detail::require(order == 1 || order == 2, "finite differences support order 1 or 2");
    detail::require(h > 0.0, "finite-difference step must be positive");
    detail::require(theta != 0.0 || agent.has_endowment(), "finite differences need theta != 0 at the kink");
    detail::require(h < std::abs(theta) || agent.has_endowment(), "finite-difference stencil crosses theta = 0");
    if (theta + h == theta || theta - h == theta) throw NumericalError("finite-difference step underflows at this theta");
    auto V = [&](double t) { return value_alpha_relative(agent, sc, t); };
    if (order == 1) return (V(theta + h) - V(theta - h)) / (2.0 * h);
    return (V(theta + h) - 2.0 * V(theta) + V(theta - h)) / (h * h);
}

struct ConcavityScan {
    int long_points = 0;
    int long_violations = 0;  ///< positive second differences on (0, reach)
    int short_points = 0;
    int short_violations = 0;
    double worst_long = -kInf;
    double worst_short = -kInf;
};

/// Sign of the second difference on each half-line. A diagnostic only: per-side
/// concavity is proven for two states and merely observed beyond that.
inline ConcavityScan side_concavity_scan(const Agent& agent, const Scenario& sc, int points = 200) {
    ConcavityScan out;
    for (double dir : {1.0, -1.0}) {
        const double reach = 0.95 * detail::scan_reach(agent, sc, dir);
        for (int j = 1; j <= points; ++j) {
            const double th = dir * reach * j / (points + 1.0);
            const double h = 1e-4 * std::abs(th);
            const double d2 = finite_difference_derivative(agent, sc, th, 2, h);
            if (dir > 0.0) {
                ++out.long_points;
                out.long_violations += d2 > 0.0;
                out.worst_long = std::max(out.worst_long, d2);
            } else {
                ++out.short_points;
                out.short_violations += d2 > 0.0;
                out.worst_short = std::max(out.worst_short, d2);
            }
        }
    }
    return out;
}

}  // namespace ambimax

#endif
