#ifndef AMBIMAX_SCENARIO_HPP
#define AMBIMAX_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ambimax/error.hpp"
#include "ambimax/utility.hpp"

namespace ambimax {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Probability vector over the states of a scenario.
class Distribution {
public:
    static constexpr double kSumTolerance = 1e-12;

    Distribution() = default;
    explicit Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
        detail::require(!probs_.empty(), "distribution must have at least one state");
        double sum = 0.0;
        for (std::size_t s = 0; s < probs_.size(); ++s) {
            if (!(probs_[s] >= 0.0)) {
                throw DomainError("negative probability " + std::to_string(probs_[s]) +
                                  " in state " + std::to_string(s));
            }
            sum += probs_[s];
        }
        if (std::abs(sum - 1.0) > kSumTolerance) {
            throw DomainError("probabilities sum to " + std::to_string(sum) + ", not 1");
        }
    }

    std::span<const double> probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t s) const { return probs_[s]; }

    /// Quadratic divergence sum_s p_s^2 / q_s from a reference q.
    double divergence_from(std::span<const double> ref) const {
        double d = 0.0;
        for (std::size_t s = 0; s < probs_.size(); ++s) d += probs_[s] * probs_[s] / ref[s];
        return d;
    }

    bool operator==(const Distribution&) const = default;

private:
    std::vector<double> probs_;
};

/// Reference prior P0; every atom carries strictly positive mass.
class ReferencePrior {
public:
    ReferencePrior() = default;
    explicit ReferencePrior(std::vector<double> probs) : dist_(std::move(probs)) {
        for (std::size_t s = 0; s < dist_.size(); ++s) {
            if (!(dist_[s] > 0.0)) {
                throw DomainError("reference prior must be strictly positive (state " +
                                  std::to_string(s) + ")");
            }
        }
    }
    /// Two-state prior with mass p on the first state.
    static ReferencePrior binomial(double p) { return ReferencePrior({p, 1.0 - p}); }

    const Distribution& dist() const noexcept { return dist_; }
    std::span<const double> probs() const noexcept { return dist_.probs(); }
    std::size_t size() const noexcept { return dist_.size(); }
    double operator[](std::size_t s) const { return dist_[s]; }

    bool operator==(const ReferencePrior&) const = default;

private:
    Distribution dist_;
};

/// Divergence radius c and ambiguity weight alpha.
class AmbiguitySpec {
public:
    AmbiguitySpec() = default;
    AmbiguitySpec(double c, double alpha) : c_(c), alpha_(alpha) {
        detail::require(c >= 1.0, "divergence bound c must be >= 1");
        detail::require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    }

    double c() const noexcept { return c_; }
    double alpha() const noexcept { return alpha_; }
    double d() const noexcept { return c_ - 1.0; }
    /// sqrt(d) (2 alpha - 1): positive for aversion, negative for seeking.
    double delta() const noexcept { return std::sqrt(d()) * (2.0 * alpha_ - 1.0); }
    /// d (1 - 2 alpha)^2, the radius of the equivalent pure maxmax ball.
    double reduced_d() const noexcept {
        const double t = 1.0 - 2.0 * alpha_;
        return d() * t * t;
    }
    bool seeker() const noexcept { return alpha_ < 0.5; }

    bool operator==(const AmbiguitySpec&) const = default;

private:
    double c_ = 1.0;
    double alpha_ = 0.5;
};

struct Assumption1Report {
    bool holds = false;
    double bound = 0.0;   ///< min_s 1/(1 - p0_s)
    double margin = 0.0;  ///< bound - c
    std::size_t binding_state = 0;
};

/// c < min_s 1/(1 - p0_s).
inline Assumption1Report check_assumption1(const ReferencePrior& prior, const AmbiguitySpec& amb) {
    Assumption1Report r;
    r.bound = kInf;
    for (std::size_t s = 0; s < prior.size(); ++s) {
        const double b = 1.0 / (1.0 - prior[s]);
        if (b < r.bound) {
            r.bound = b;
            r.binding_state = s;
        }
    }
    r.margin = r.bound - amb.c();
    r.holds = amb.c() < r.bound;
    return r;
}

inline void require_assumption1(const ReferencePrior& prior, const AmbiguitySpec& amb) {
    const auto r = check_assumption1(prior, amb);
    if (!r.holds) {
        throw DomainError("divergence bound c = " + std::to_string(amb.c()) +
                          " violates c < min 1/(1-p0) = " + std::to_string(r.bound) +
                          " (binding state " + std::to_string(r.binding_state) + ")");
    }
}

/// States, asset payoffs (K x n) and asset prices.
class Scenario {
public:
    Scenario() = default;
    Scenario(std::vector<std::string> states, std::vector<std::vector<double>> payoffs,
             std::vector<double> prices)
        : states_(std::move(states)), payoffs_(std::move(payoffs)), prices_(std::move(prices)) {
        detail::require(states_.size() >= 2, "scenario needs at least two states");
        detail::require(!payoffs_.empty(), "scenario needs at least one asset");
        detail::require(payoffs_.size() == prices_.size(), "one price per asset is required");
        for (const auto& row : payoffs_) {
            detail::require(row.size() == states_.size(), "payoff row length must equal state count");
        }
        detail::require(full_row_rank(), "asset payoffs must be linearly independent");
    }

    /// Single asset with default state labels s1..sn.
    static Scenario single(std::vector<double> payoff, double price) {
        std::vector<std::string> labels;
        for (std::size_t s = 0; s < payoff.size(); ++s) labels.push_back("s" + std::to_string(s + 1));
        return Scenario(std::move(labels), {std::move(payoff)}, {price});
    }

    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t num_assets() const noexcept { return payoffs_.size(); }
    const std::vector<std::string>& states() const noexcept { return states_; }
    const std::vector<std::vector<double>>& payoffs() const noexcept { return payoffs_; }
    std::span<const double> payoff(std::size_t k = 0) const { return payoffs_.at(k); }
    std::span<const double> prices() const noexcept { return prices_; }
    double price(std::size_t k = 0) const { return prices_.at(k); }

    double min_payoff(std::size_t k = 0) const {
        return *std::min_element(payoffs_.at(k).begin(), payoffs_.at(k).end());
    }
    double max_payoff(std::size_t k = 0) const {
        return *std::max_element(payoffs_.at(k).begin(), payoffs_.at(k).end());
    }

    /// Copy of a single-asset scenario quoted at another price.
    Scenario with_price(double price) const {
        detail::require(num_assets() == 1, "with_price needs a single-asset scenario");
        Scenario s = *this;
        s.prices_[0] = price;
        return s;
    }

    void require_single_asset() const {
        detail::require(num_assets() == 1, "operation requires a single risky asset (K = 1)");
    }
    /// min S < pi < max S.
    void require_interior_price() const {
        require_single_asset();
        if (!(price() > min_payoff() && price() < max_payoff())) {
            throw DomainError("price " + std::to_string(price()) + " outside no-arbitrage interval (" +
                              std::to_string(min_payoff()) + ", " + std::to_string(max_payoff()) + ")");
        }
    }

private:
    bool full_row_rank() const {
        // Modified Gram-Schmidt on the payoff rows.
        std::vector<std::vector<double>> basis;
        for (const auto& row : payoffs_) {
            std::vector<double> v = row;
            const double scale = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
            if (scale == 0.0) return false;
            for (const auto& b : basis) {
                const double proj = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
                for (std::size_t s = 0; s < v.size(); ++s) v[s] -= proj * b[s];
            }
            const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
            if (norm <= 1e-10 * scale) return false;
            for (auto& x : v) x /= norm;
            basis.push_back(std::move(v));
        }
        return true;
    }

    std::vector<std::string> states_;
    std::vector<std::vector<double>> payoffs_;
    std::vector<double> prices_;
};

/// An investor: felicity, initial wealth, beliefs, ambiguity attitude and an
/// optional per-state random endowment (empty means zero).
struct Agent {
    Utility utility = Utility::log();
    double w0 = 1.0;
    ReferencePrior prior;
    AmbiguitySpec ambiguity;
    std::vector<double> endowment;

    Agent() = default;
    Agent(Utility u, double wealth, ReferencePrior p0, AmbiguitySpec amb, std::vector<double> endow = {})
        : utility(u), w0(wealth), prior(std::move(p0)), ambiguity(amb), endowment(std::move(endow)) {
        if (utility.positive_domain()) {
            detail::require(w0 > 0.0, "initial wealth must be positive for " + utility.describe());
        }
        detail::require(endowment.empty() || endowment.size() == prior.size(),
                        "endowment length must equal prior length");
    }

    bool has_endowment() const {
        return std::any_of(endowment.begin(), endowment.end(), [](double e) { return e != 0.0; });
    }
    double endowment_at(std::size_t s) const { return endowment.empty() ? 0.0 : endowment[s]; }
    double alpha() const noexcept { return ambiguity.alpha(); }
    double delta() const noexcept { return ambiguity.delta(); }

    void require_matches(const Scenario& sc) const {
        if (prior.size() != sc.num_states()) {
            throw DomainError("prior has " + std::to_string(prior.size()) + " states, scenario has " +
                              std::to_string(sc.num_states()));
        }
    }
};

/// Terminal wealth per state, W_s = w0 + theta.(S_s - pi) + E_s.
struct WealthProfile {
    std::vector<double> wealth;
    bool admissible = true;
};

inline WealthProfile wealth_profile(const Agent& agent, const Scenario& sc, std::span<const double> theta) {
    agent.require_matches(sc);
    detail::require(theta.size() == sc.num_assets(), "position dimension must equal asset count");
    WealthProfile w;
    w.wealth.resize(sc.num_states());
    for (std::size_t s = 0; s < sc.num_states(); ++s) {
        double x = agent.w0 + agent.endowment_at(s);
        for (std::size_t k = 0; k < sc.num_assets(); ++k) x += theta[k] * (sc.payoff(k)[s] - sc.price(k));
        w.wealth[s] = x;
        if (agent.utility.positive_domain() && !(x > kWealthFloor)) w.admissible = false;
    }
    return w;
}

inline WealthProfile wealth_profile(const Agent& agent, const Scenario& sc, double theta) {
    return wealth_profile(agent, sc, std::span<const double>(&theta, 1));
}

struct PositionBounds {
    double lower = -kInf;
    double upper = kInf;
};

/// Open interval of single-asset positions with positive wealth in every state,
/// endowment included. Full-line utilities get (-inf, inf).
inline PositionBounds admissible_interval(const Agent& agent, const Scenario& sc) {
    sc.require_single_asset();
    agent.require_matches(sc);
    PositionBounds b;
    if (!agent.utility.positive_domain()) return b;
    for (std::size_t s = 0; s < sc.num_states(); ++s) {
        const double base = agent.w0 + agent.endowment_at(s);
        const double excess = sc.payoff()[s] - sc.price();
        if (excess > 0.0) {
            b.lower = std::max(b.lower, -base / excess);
        } else if (excess < 0.0) {
            b.upper = std::min(b.upper, base / -excess);
        } else if (!(base > 0.0)) {
            throw DomainError("state " + std::to_string(s) + " has nonpositive wealth for every position");
        }
    }
    if (!(b.lower < b.upper)) throw DomainError("empty admissible position set");
    return b;
}

/// Bounds of the admissible set without endowment: -w0/(max S - pi), w0/(pi - min S).
inline PositionBounds admissible_bounds(const Agent& agent, const Scenario& sc) {
    sc.require_interior_price();
    detail::require(!agent.has_endowment(), "admissible_bounds assumes zero endowment");
    agent.require_matches(sc);
    if (!agent.utility.positive_domain()) return {};
    return {-agent.w0 / (sc.max_payoff() - sc.price()), agent.w0 / (sc.price() - sc.min_payoff())};
}

}  // namespace ambimax

#endif
