#ifndef AMBIMAX_ORACLE_HPP
#define AMBIMAX_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ambimax/ambiguity.hpp"
#include "ambimax/error.hpp"
#include "ambimax/scenario.hpp"

// Brute-force solvers for the inner problem, used to validate the closed form.
// Nothing here calls into the closed-form path.

namespace ambimax::oracle {

namespace detail {

// Euclidean projection onto {sum p = 1, sum p^2/p0 <= c, p >= 0}. For fixed
// multipliers (mu, lam) the problem separates by state:
//   p_s = max(0, p0_s (y_s - mu)/(p0_s + lam)).
// mu is pinned by the sum for each lam, and lam >= 0 by the divergence bound.
inline std::vector<double> project_feasible(std::span<const double> y, std::span<const double> p0, double c) {
    const std::size_t n = y.size();
    std::vector<double> p(n);
    auto fill = [&](double mu, double lam) {
        double sum = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            p[s] = std::max(0.0, p0[s] * (y[s] - mu) / (p0[s] + lam));
            sum += p[s];
        }
        return sum;
    };
    auto solve_mu = [&](double lam) {
        const double ymax = *std::max_element(y.begin(), y.end());
        double hi = ymax;  // every entry clamps to zero
        double lo = ymax - 1.0;
        while (fill(lo, lam) < 1.0) {
            lo = hi - 2.0 * (hi - lo);
            if (!std::isfinite(lo)) throw NumericalError("oracle projection: sum multiplier bracket failed");
        }
        for (int it = 0; it < 300; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (fill(mid, lam) >= 1.0) lo = mid;
            else hi = mid;
        }
        fill(lo, lam);
        double div = 0.0;
        for (std::size_t s = 0; s < n; ++s) div += p[s] * p[s] / p0[s];
        return div;
    };
    if (solve_mu(0.0) <= c) return p;
    double lo = 0.0;
    double hi = 1.0;
    while (solve_mu(hi) > c) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericalError("oracle projection: multiplier bracket failed");
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (solve_mu(mid) > c) lo = mid;
        else hi = mid;
    }
    solve_mu(hi);
    return p;
}

inline std::vector<double> minimize_linear(std::span<const double> p0, double c, std::span<const double> u,
                                           long max_iter) {
    const std::size_t n = u.size();
    std::vector<double> p(p0.begin(), p0.end());
    double ubar = 0.0;
    for (std::size_t s = 0; s < n; ++s) ubar += u[s] / static_cast<double>(n);
    double spread = 0.0;
    for (std::size_t s = 0; s < n; ++s) spread = std::max(spread, std::abs(u[s] - ubar));
    if (c == 1.0 || spread == 0.0) return p;
    const double step = 1e3 / spread;
    std::vector<double> y(n);
    for (long it = 0; it < max_iter; ++it) {
        for (std::size_t s = 0; s < n; ++s) y[s] = p[s] - step * u[s];
        std::vector<double> next = project_feasible(y, p0, c);
        double change = 0.0;
        for (std::size_t s = 0; s < n; ++s) change = std::max(change, std::abs(next[s] - p[s]));
        p = std::move(next);
        if (change < 1e-15) return p;
    }
    throw NumericalError("oracle projected gradient did not converge");
}

inline std::vector<double> normalized(std::vector<double> p) {
    double sum = 0.0;
    for (auto& x : p) {
        x = std::max(0.0, x);
        sum += x;
    }
    for (auto& x : p) x /= sum;
    return p;
}

}  // namespace detail

/// Projected-gradient solution of min/max sum_s u_s p_s over the divergence ball.
inline InnerSolution worst_best_oracle(const ReferencePrior& prior, double c, std::span<const double> u,
                                       long max_iter = 1000000) {
    ambimax::detail::require(prior.size() <= 8, "oracle is limited to at most 8 states");
    ambimax::detail::require(u.size() == prior.size(), "utility vector length must equal prior length");
    ambimax::detail::require(c >= 1.0, "divergence bound c must be >= 1");
    const auto p0 = prior.probs();
    std::vector<double> neg(u.begin(), u.end());
    for (auto& x : neg) x = -x;
    auto worst = detail::normalized(detail::minimize_linear(p0, c, u, max_iter));
    auto best = detail::normalized(detail::minimize_linear(p0, c, neg, max_iter));
    return ambimax::detail::make_inner(p0, std::move(worst), std::move(best), u);
}

/// Exhaustive search over (x, 1 - x) for two-state problems.
inline InnerSolution worst_best_grid(const ReferencePrior& prior, double c, std::span<const double> u,
                                     double resolution = 1e-7) {
    ambimax::detail::require(prior.size() == 2, "grid oracle handles two states");
    ambimax::detail::require(u.size() == 2, "utility vector length must equal prior length");
    const double a = prior[0];
    const long steps = static_cast<long>(std::ceil(1.0 / resolution));
    double best_lo = kInf;
    double best_hi = -kInf;
    double x_lo = a;
    double x_hi = a;
    for (long i = 0; i <= steps; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(steps);
        const double div = x * x / a + (1.0 - x) * (1.0 - x) / (1.0 - a);
        if (div > c) continue;
        const double v = x * u[0] + (1.0 - x) * u[1];
        if (v < best_lo) {
            best_lo = v;
            x_lo = x;
        }
        if (v > best_hi) {
            best_hi = v;
            x_hi = x;
        }
    }
    return ambimax::detail::make_inner(prior.probs(), {x_lo, 1.0 - x_lo}, {x_hi, 1.0 - x_hi}, u);
}

}  // namespace ambimax::oracle

#endif
