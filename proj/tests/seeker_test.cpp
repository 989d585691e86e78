#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_support.hpp"

using namespace ambimax;
namespace ts = testing_support;

namespace {

struct GridMax {
    double theta;
    double value;
    double step;
};

// Dense linear scan over (0, reach) * dir.
GridMax grid_argmax(const Agent& a, const Scenario& sc, double dir, double reach, int points) {
    GridMax g{0.0, -kInf, reach / points};
    for (int j = 1; j < points; ++j) {
        const double th = dir * reach * j / points;
        const double v = value_alpha(a, sc, th);
        if (v > g.value) {
            g.value = v;
            g.theta = th;
        }
    }
    return g;
}

Agent random_seeker(std::size_t n, bool binomial_utilities = false) {
    const auto p = ts::random_prior(n, 0.05);
    Utility u = ts::random_utility();
    if (binomial_utilities) {
        const int k = ts::uniform_int(0, 2);
        u = k == 0 ? Utility::power(ts::uniform(0.5, 5.0)) : (k == 1 ? Utility::log() : Utility::exponential(ts::uniform(0.5, 5.0)));
    }
    const double w0 = u.positive_domain() ? ts::uniform(0.5, 2.0) : 0.0;
    return Agent(u, w0, ReferencePrior(p), AmbiguitySpec(ts::random_c(p, 0.1, 0.9), ts::uniform(0.05, 0.45)));
}

}  // namespace

TEST(Algorithm1, NoAmbiguityIsExpectedUtility) {
    const Agent a = ts::desk_agent(0.4, 0.3, 2.0, 1.0);
    const Scenario sc = ts::desk_scenario(0.97);
    const auto r = algorithm1(a, sc, 0.5);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_TRUE(r.converged);
    const std::vector<double> p0{0.4, 0.6};
    EXPECT_DOUBLE_EQ(r.theta, expected_utility_demand(a, sc, p0).x);
}

TEST(Algorithm1, Preconditions) {
    const Scenario sc = ts::desk_scenario(0.97);
    EXPECT_THROW(algorithm1(ts::desk_agent(0.4, 0.6), sc, 0.5), DomainError);
    EXPECT_THROW(algorithm1(ts::desk_agent(0.4, 0.3), sc, 0.0), DomainError);
    EXPECT_THROW(algorithm1(ts::desk_agent(0.4, 0.3), sc, 100.0), DomainError);
    EXPECT_THROW(algorithm1(ts::desk_agent(0.4, 0.3), sc.with_price(1.2), 0.5), DomainError);
}

TEST(Algorithm1, TrinomialTwoLocalOptima) {
    const Agent a = ts::trinomial_agent(0.25);
    const Scenario sc = ts::trinomial_scenario(1.0);
    const auto up = algorithm1(a, sc, 0.5);
    const auto dn = algorithm1(a, sc, -0.5);
    ASSERT_TRUE(up.converged && dn.converged);
    EXPECT_GT(up.theta, 0.0);
    EXPECT_LT(dn.theta, 0.0);
    EXPECT_LT(std::abs(derivative(a, sc, up.theta)), 1e-8);
    EXPECT_LT(std::abs(derivative(a, sc, dn.theta)), 1e-8);
    const auto b = admissible_bounds(a, sc);
    const auto gu = grid_argmax(a, sc, 1.0, b.upper, 20000);
    const auto gd = grid_argmax(a, sc, -1.0, -b.lower, 20000);
    EXPECT_NEAR(up.theta, gu.theta, gu.step);
    EXPECT_NEAR(dn.theta, gd.theta, gd.step);
    EXPECT_GE(up.value + 1e-12, gu.value);
    EXPECT_GE(dn.value + 1e-12, gd.value);
}

TEST(Algorithm1, MonotoneTraceOnRandomInstances) {
    int runs = 0;
    while (runs < 100) {
        const std::size_t n = static_cast<std::size_t>(ts::uniform_int(2, 6));
        const Agent a = random_seeker(n);
        const Scenario sc = ts::random_scenario(n);
        if (!check_assumption1(a.prior, AmbiguitySpec(1.0 + a.ambiguity.reduced_d(), 0.0)).holds) continue;
        for (double dir : {1.0, -1.0}) {
            const auto r = algorithm1(a, sc, dir * detail::seeker_start(a, sc));
            for (std::size_t i = 1; i < r.trace.size(); ++i) {
                EXPECT_GE(r.trace[i].value, r.trace[i - 1].value - 1e-12) << a.utility.describe();
            }
            EXPECT_TRUE(r.converged || r.reached_zero);
            if (!r.reached_zero) {
                EXPECT_LT(std::abs(derivative(a, sc, r.theta)), 1e-8) << a.utility.describe();
            }
        }
        ++runs;
    }
}

TEST(Algorithm1, ReducedDivergenceEquivalence) {
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = static_cast<std::size_t>(ts::uniform_int(2, 6));
        const Agent a = random_seeker(n);
        const Agent r(a.utility, a.w0, a.prior, AmbiguitySpec(1.0 + a.ambiguity.reduced_d(), 0.0));
        const Scenario sc = ts::random_scenario(n);
        const double th = ts::uniform(-0.5, 0.5) * detail::seeker_start(a, sc);
        EXPECT_NEAR(value_alpha(a, sc, th), value_alpha(r, sc, th), 1e-12);
    }
}

TEST(Algorithm1, TraceCsv) {
    const auto r = algorithm1(ts::desk_agent(0.4, 0.3), ts::desk_scenario(0.97), 0.5);
    std::ostringstream os;
    write_trace_csv(os, r);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "iteration,theta,value,p1,p2");
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.trace.size() + 1);
}

TEST(SeekerDemand, AboveUpperReservationOnlyShort) {
    const Agent a = ts::desk_agent(0.25, 0.25);
    const Scenario sc = ts::desk_scenario();
    const auto rb = reservation_interval(a, sc);
    const auto d = seeker_demand(a, sc, rb.eta_high + 0.01);
    EXPECT_FALSE(d.local_long.has_value());
    ASSERT_TRUE(d.local_short.has_value());
    EXPECT_EQ(d.global_side, Side::short_side);
    const Scenario at = sc.with_price(rb.eta_high + 0.01);
    const double u0 = a.utility.value(a.w0);
    const double reach = admissible_bounds(a, at).upper;
    for (int j = 1; j < 2000; ++j) EXPECT_LT(value_alpha(a, at, reach * j / 2000.0), u0);
}

TEST(SeekerDemand, SymmetricTwinPeaks) {
    const Agent a = ts::desk_agent(0.5, 0.25);
    const auto d = seeker_demand(a, ts::desk_scenario(1.0));
    ASSERT_TRUE(d.local_long && d.local_short);
    EXPECT_NEAR(d.local_long->theta, -d.local_short->theta, 1e-8);
    EXPECT_EQ(d.global_side, Side::both);
    EXPECT_TRUE(std::isnan(d.global_theta));
}

TEST(SeekerDemand, ShortBetterJustAboveMean) {
    const Agent a = ts::desk_agent(0.25, 0.25);
    const auto d = seeker_demand(a, ts::desk_scenario(0.952));
    ASSERT_TRUE(d.local_long && d.local_short);
    EXPECT_GT(d.local_short->value, d.local_long->value);
    EXPECT_EQ(d.global_side, Side::short_side);
}

TEST(SeekerDemand, NoReservationPrice) {
    for (double alpha : {0.1, 0.25, 0.4}) {
        const Agent a = ts::desk_agent(0.25, alpha);
        const auto rb = reservation_interval(a, ts::desk_scenario());
        const double u0 = a.utility.value(a.w0);
        for (int k = 1; k < 10; ++k) {
            const double price = rb.eta_low + rb.width() * k / 10.0;
            const auto d = seeker_demand(a, ts::desk_scenario(price));
            ASSERT_TRUE(d.local_long && d.local_short);
            EXPECT_GT(d.local_long->value, u0);
            EXPECT_GT(d.local_short->value, u0);
        }
    }
}

TEST(SeekerDemand, TrinomialUsesBetterBasin) {
    const Agent a = ts::trinomial_agent(0.25);
    const Scenario sc = ts::trinomial_scenario(1.0);
    const auto d = seeker_demand(a, sc);
    ASSERT_TRUE(d.local_long && d.local_short);
    const auto b = admissible_bounds(a, sc);
    const double best = std::max(grid_argmax(a, sc, 1.0, b.upper, 20000).value,
                                 grid_argmax(a, sc, -1.0, -b.lower, 20000).value);
    EXPECT_GE(d.global_value + 1e-9, best);
}

TEST(SeekerDemand, ComparativeStaticsInAlpha) {
    for (double gamma : {1.0, 2.0, 4.0}) {
        double prev_long = 0.0;
        double prev_short = 0.0;
        for (double alpha : {0.45, 0.35, 0.25, 0.15}) {
            const auto d = seeker_demand(ts::desk_agent(0.25, alpha, gamma), ts::desk_scenario(0.95));
            ASSERT_TRUE(d.local_long && d.local_short);
            EXPECT_GE(std::abs(d.local_long->theta), prev_long);
            EXPECT_GE(std::abs(d.local_short->theta), prev_short);
            prev_long = std::abs(d.local_long->theta);
            prev_short = std::abs(d.local_short->theta);
        }
    }
}

TEST(BinomialClosed, Measures) {
    const auto neutral = binomial_measures(ts::desk_agent(0.3, 0.5), ts::desk_scenario());
    EXPECT_DOUBLE_EQ(neutral.plus[0], 0.3);
    EXPECT_DOUBLE_EQ(neutral.minus[0], 0.3);
    const auto m = binomial_measures(ts::desk_agent(0.5, 0.25), ts::desk_scenario());
    EXPECT_NEAR(m.plus[0], 0.525, 1e-15);
    EXPECT_NEAR(m.plus[1], 0.475, 1e-15);
    EXPECT_NEAR(m.minus[0], 0.475, 1e-15);
    // Payoffs listed low-first: the tilt follows the high-payoff state.
    const auto flipped = binomial_measures(ts::desk_agent(0.5, 0.25), Scenario::single({0.9, 1.1}, 1.0));
    EXPECT_NEAR(flipped.plus[1], 0.525, 1e-15);
}

TEST(BinomialClosed, AgreesWithAlgorithm1) {
    for (int i = 0; i < 200; ++i) {
        const Agent a = random_seeker(2, true);
        const Scenario sc = ts::random_scenario(2);
        if (!check_assumption1(a.prior, AmbiguitySpec(1.0 + a.ambiguity.reduced_d(), 0.0)).holds) continue;
        const auto c = binomial_seeker_closed(a, sc);
        const auto rb = reservation_interval(a, sc);
        EXPECT_EQ(c.local_long.has_value(), sc.price() < rb.eta_high);
        EXPECT_EQ(c.local_short.has_value(), sc.price() > rb.eta_low);
        const double start = detail::seeker_start(a, sc);
        if (c.local_long) {
            const auto r = algorithm1(a, sc, start);
            EXPECT_NEAR(r.theta, c.local_long->theta, 1e-8 * std::max(1.0, std::abs(r.theta))) << a.utility.describe();
        }
        if (c.local_short) {
            const auto r = algorithm1(a, sc, -start);
            EXPECT_NEAR(r.theta, c.local_short->theta, 1e-8 * std::max(1.0, std::abs(r.theta))) << a.utility.describe();
        }
    }
}

TEST(BinomialClosed, AboveUpperReservationLongIsZero) {
    const Agent a = ts::desk_agent(0.25, 0.25);
    const auto rb = reservation_interval(a, ts::desk_scenario());
    const auto c = binomial_seeker_closed(a, ts::desk_scenario(rb.eta_high + 1e-3));
    EXPECT_FALSE(c.local_long.has_value());
    EXPECT_TRUE(c.local_short.has_value());
    EXPECT_THROW(binomial_seeker_closed(ts::trinomial_agent(0.25), ts::trinomial_scenario(1.0)), DomainError);
}

TEST(BinomialClosed, PiecewiseConcave) {
    for (int i = 0; i < 50; ++i) {
        const Agent a = random_seeker(2, true);
        const Scenario sc = ts::random_scenario(2);
        const double reach = a.utility.positive_domain() ? 0.9 * std::min(admissible_bounds(a, sc).upper, -admissible_bounds(a, sc).lower) : 3.0;
        const double h = 1e-4 * reach;
        for (int j = 1; j < 100; ++j) {
            for (double dir : {1.0, -1.0}) {
                const double th = dir * reach * j / 100.0;
                if (std::abs(th) <= 2 * h) continue;
                const double fd = value_alpha(a, sc, th + h) - 2 * value_alpha(a, sc, th) + value_alpha(a, sc, th - h);
                EXPECT_LT(fd, 1e-13) << a.utility.describe() << " theta " << th;
            }
        }
    }
}

TEST(Discontinuity, ProbeAroundMean) {
    const Agent sym = ts::desk_agent(0.5, 0.25);
    const auto p = discontinuity_probe(sym, ts::desk_scenario());
    const auto d = seeker_demand(sym, ts::desk_scenario(1.0));
    EXPECT_GT(p.theta_below, 0.0);
    EXPECT_LT(p.theta_above, 0.0);
    EXPECT_NEAR(p.jump, 2.0 * d.local_long->theta, 1e-3 * d.local_long->theta);

    const auto control = discontinuity_probe(ts::desk_agent(0.5, 0.5), ts::desk_scenario());
    EXPECT_LT(std::abs(control.jump), 1e-3);

}

TEST(Discontinuity, TrinomialSideSwitchInsideReservationInterval) {
    // Skewed payoffs: the switch sits away from E0[S], where the long side is chosen.
    const Agent a = ts::trinomial_agent(0.25);
    const Scenario sc = ts::trinomial_scenario();
    EXPECT_GT(discontinuity_probe(a, sc).theta_above, 0.0);
    const auto rb = reservation_interval(a, sc);
    double lo = rb.eta_low + 1e-9;
    double hi = rb.eta_high - 1e-9;
    ASSERT_EQ(seeker_demand(a, sc, lo).global_side, Side::long_side);
    ASSERT_EQ(seeker_demand(a, sc, hi).global_side, Side::short_side);
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (seeker_demand(a, sc, mid).global_side == Side::long_side ? lo : hi) = mid;
    }
    const auto below = seeker_demand(a, sc, lo);
    const auto above = seeker_demand(a, sc, hi);
    ASSERT_TRUE(below.local_long && above.local_short);
    EXPECT_GT(below.local_long->theta, 0.1);
    EXPECT_LT(above.local_short->theta, -0.1);
    EXPECT_NE(above.global_side, Side::long_side);
    EXPECT_GT(lo, 1.0);
}
