#ifndef AMBIMAX_TEST_SUPPORT_HPP
#define AMBIMAX_TEST_SUPPORT_HPP

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "ambimax/ambimax.hpp"

namespace testing_support {

using namespace ambimax;

/// Seed for randomized checks; AMBIMAX_SEED overrides the fixed default.
inline std::uint64_t seed() {
    if (const char* env = std::getenv("AMBIMAX_SEED")) return std::strtoull(env, nullptr, 10);
    return 20240917ULL;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(seed());
    return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

/// Dirichlet(1,...,1) draw with every atom at least `floor`.
inline std::vector<double> random_prior(std::size_t n, double floor = 0.02) {
    std::gamma_distribution<double> g(1.0, 1.0);
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& x : p) {
        x = g(rng());
        sum += x;
    }
    for (auto& x : p) x = floor + (1.0 - floor * static_cast<double>(n)) * x / sum;
    return p;
}

/// c strictly inside the interior condition for `p`, as a fraction of the slack.
inline double random_c(const std::vector<double>& p, double frac_lo = 0.05, double frac_hi = 0.9) {
    double bound = 1e300;
    for (double x : p) bound = std::min(bound, 1.0 / (1.0 - x));
    return 1.0 + uniform(frac_lo, frac_hi) * (bound - 1.0);
}

inline std::vector<double> random_vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
}

/// Binomial desk scenario S = (1.1, 0.9).
inline Scenario desk_scenario(double price = 1.0) { return Scenario::single({1.1, 0.9}, price); }

/// Power-utility agent on the desk scenario with mass p on the up state.
inline Agent desk_agent(double p, double alpha, double gamma = 2.0, double c = 1.01, double w0 = 1.0) {
    return Agent(Utility::power(gamma), w0, ReferencePrior::binomial(p), AmbiguitySpec(c, alpha));
}

/// Trinomial seeker agent and scenario: S = (0.5, 1, 1.1), p0 = (0.05, 0.7, 0.25).
inline Scenario trinomial_scenario(double price = 1.0) { return Scenario::single({0.5, 1.0, 1.1}, price); }
inline Agent trinomial_agent(double alpha, double gamma = 2.0) {
    return Agent(Utility::power(gamma), 1.0, ReferencePrior({0.05, 0.7, 0.25}), AmbiguitySpec(1.01, alpha));
}

inline Utility random_utility(bool include_quadratic = false) {
    const int k = uniform_int(0, include_quadratic ? 3 : 2);
    switch (k) {
        case 0: return Utility::power(uniform(0.5, 5.0));
        case 1: return Utility::log();
        case 2: return Utility::exponential(uniform(0.5, 5.0));
        default: return Utility::quadratic_quasilinear(uniform(0.1, 1.0));
    }
}

/// Random single-asset scenario with payoffs in [0.5, 1.5] and an interior price.
inline Scenario random_scenario(std::size_t n) {
    std::vector<double> S = random_vector(n, 0.5, 1.5);
    const double lo = *std::min_element(S.begin(), S.end());
    const double hi = *std::max_element(S.begin(), S.end());
    return Scenario::single(S, lo + uniform(0.1, 0.9) * (hi - lo));
}

}  // namespace testing_support

#endif
