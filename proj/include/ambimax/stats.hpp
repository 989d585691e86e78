#ifndef AMBIMAX_STATS_HPP
#define AMBIMAX_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

// Population moments under a discrete probability vector.

namespace ambimax::stats {

inline double mean(std::span<const double> p, std::span<const double> x) {
    double m = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) m += p[s] * x[s];
    return m;
}

inline double covariance(std::span<const double> p, std::span<const double> x,
                         std::span<const double> y) {
    const double mx = mean(p, x);
    const double my = mean(p, y);
    double c = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) c += p[s] * (x[s] - mx) * (y[s] - my);
    return c;
}

inline double variance(std::span<const double> p, std::span<const double> x) {
    return std::max(0.0, covariance(p, x, x));
}

inline double stddev(std::span<const double> p, std::span<const double> x) {
    return std::sqrt(variance(p, x));
}

/// E[x^k] for integer k >= 0.
inline double raw_moment(std::span<const double> p, std::span<const double> x, int k) {
    double m = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) m += p[s] * std::pow(x[s], k);
    return m;
}

}  // namespace ambimax::stats

#endif
