#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace ambimax;
namespace ts = testing_support;

TEST(ClosedForm, ConstantProfileReturnsPrior) {
    const ReferencePrior p0({0.2, 0.3, 0.5});
    const std::vector<double> u{1.5, 1.5, 1.5};
    const auto sol = worst_best_closed_form(p0, AmbiguitySpec(1.05, 0.7), u);
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_DOUBLE_EQ(sol.worst[s], p0[s]);
        EXPECT_DOUBLE_EQ(sol.best[s], p0[s]);
    }
}

TEST(ClosedForm, SingletonBallReturnsPrior) {
    const ReferencePrior p0({0.2, 0.3, 0.5});
    const std::vector<double> u{0.0, 2.0, 1.0};
    const auto sol = worst_best_closed_form(p0, AmbiguitySpec(1.0, 0.9), u);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_DOUBLE_EQ(sol.worst[s], p0[s]);
}

TEST(ClosedForm, BinomialMatchesHandValues) {
    // sqrt(d) = 0.1, S0[u] = 0.5, (E0 u - u_s)/S0 = -1, +1.
    const auto sol = worst_best_closed_form(ReferencePrior::binomial(0.5), AmbiguitySpec(1.01, 0.5),
                                            std::vector<double>{2.0, 1.0});
    EXPECT_NEAR(sol.worst[0], 0.45, 1e-15);
    EXPECT_NEAR(sol.best[0], 0.55, 1e-15);
    EXPECT_NEAR(sol.divergence_worst, 1.01, 1e-12);
    EXPECT_NEAR(sol.value_worst, 1.45, 1e-14);
}

TEST(ClosedForm, ViolatedConditionIsAnError) {
    EXPECT_THROW(worst_best_closed_form(ReferencePrior::binomial(0.5), AmbiguitySpec(2.5, 0.5),
                                        std::vector<double>{0.0, 1.0}),
                 DomainError);
}

TEST(ClosedForm, BoundaryFallbackMatchesOracleBeyondCondition) {
    // p0 = 0.1 is below (c-1)/c for c = 1.5, so a state leaves the support.
    const ReferencePrior p0({0.1, 0.5, 0.4});
    const std::vector<double> u{3.0, 0.0, 1.0};
    const auto fb = worst_best_boundary_fallback(p0, AmbiguitySpec(1.5, 0.5), u);
    const auto ref = oracle::worst_best_oracle(p0, 1.5, u);
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_NEAR(fb.worst[s], ref.worst[s], 1e-6);
        EXPECT_NEAR(fb.best[s], ref.best[s], 1e-6);
    }
    EXPECT_EQ(fb.worst[0], 0.0);
}

TEST(ValueAlpha, TrivialCases) {
    const Agent a = ts::desk_agent(0.3, 0.8);
    const Scenario sc = ts::desk_scenario(1.0);
    EXPECT_DOUBLE_EQ(value_alpha(a, sc, 0.0), a.utility.value(1.0));
    const Agent neutral = ts::desk_agent(0.3, 0.5);
    const auto ev = evaluate_states(neutral, sc, 1.7);
    const auto u = ev.absolute();
    EXPECT_NEAR(value_alpha(neutral, sc, 1.7), 0.3 * u[0] + 0.7 * u[1], 1e-14);
    EXPECT_THROW(value_alpha(a, sc, 11.0), DomainError);
}

TEST(ValueAlpha, LogDeskCaseMatchesOracleMixture) {
    const Agent a(Utility::log(), 1.0, ReferencePrior::binomial(0.5), AmbiguitySpec(1.01, 0.75));
    const Scenario sc = ts::desk_scenario(1.0);
    const auto u = evaluate_states(a, sc, 1.0).absolute();
    const auto ref = oracle::worst_best_oracle(a.prior, 1.01, u);
    EXPECT_NEAR(value_alpha(a, sc, 1.0), 0.75 * ref.value_worst + 0.25 * ref.value_best, 1e-8);
}

TEST(ValueAlpha, RepresentationIdentityOnRandomInstances) {
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = static_cast<std::size_t>(ts::uniform_int(2, 6));
        const auto p = ts::random_prior(n);
        const AmbiguitySpec amb(ts::random_c(p), ts::uniform(0.0, 1.0));
        const ReferencePrior p0(p);
        const auto u = ts::random_vector(n, -2.0, 2.0);
        const auto sol = worst_best_closed_form(p0, amb, u);
        const double v = value_alpha_from(p0, amb, u);
        EXPECT_NEAR(v, amb.alpha() * sol.value_worst + (1 - amb.alpha()) * sol.value_best, 1e-12);
        EXPECT_NEAR(sol.divergence_worst, amb.c(), 1e-9);
        EXPECT_NEAR(sol.divergence_best, amb.c(), 1e-9);
        for (std::size_t s = 0; s < n; ++s) {
            EXPECT_GT(sol.worst[s], 0.0);
            EXPECT_GT(sol.best[s], 0.0);
        }
        EXPECT_LE(sol.value_worst, stats::mean(p, u) + 1e-15);
        EXPECT_GE(sol.value_best, stats::mean(p, u) - 1e-15);
    }
}

TEST(UtilityBounds, HoldsUnderConditionAndCanFailWithout) {
    const std::vector<double> flat{1.0, 1.0};
    EXPECT_TRUE(lemma1_bounds(ReferencePrior::binomial(0.5), AmbiguitySpec(1.01, 0.5), flat).holds);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = static_cast<std::size_t>(ts::uniform_int(2, 6));
        const auto p = ts::random_prior(n);
        const auto u = ts::random_vector(n, -1.0, 1.0);
        EXPECT_TRUE(lemma1_bounds(ReferencePrior(p), AmbiguitySpec(ts::random_c(p), 0.5), u).holds);
    }
    const auto r = lemma1_bounds(ReferencePrior::binomial(0.5), AmbiguitySpec(1.9, 0.5), std::vector<double>{0.0, 1.0});
    // With d = 0.9 the reach S0/sqrt(d) = 0.527 barely covers the spread; a wider radius breaks it.
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.upper_slack, 0.5 / std::sqrt(0.9) - 0.5, 1e-12);
    const auto broken =
        lemma1_bounds(ReferencePrior({0.1, 0.9}), AmbiguitySpec(1.5, 0.5), std::vector<double>{0.0, 1.0});
    EXPECT_FALSE(broken.holds);
}

TEST(QuadraticMoment, ConstantGapAcrossTheta) {
    for (int i = 0; i < 50; ++i) {
        const auto p = ts::random_prior(2);
        const double g = ts::uniform(0.1, 1.0);
        const Agent a(Utility::quadratic_quasilinear(g), ts::uniform(0.5, 2.0), ReferencePrior(p),
                      AmbiguitySpec(ts::random_c(p), ts::uniform(0.0, 1.0)));
        const Scenario sc = ts::random_scenario(2);
        const double expected = a.w0 - 0.5 / g;
        for (double th : {-1.0, 0.3, 2.0}) {
            EXPECT_NEAR(value_alpha(a, sc, th) - quadratic_moment_value(a, sc, th), expected, 1e-10);
        }
    }
}

TEST(QuadraticMoment, TrivialBranches) {
    const Agent a(Utility::quadratic_quasilinear(0.5), 1.0, ReferencePrior::binomial(0.4), AmbiguitySpec(1.02, 0.7));
    const Scenario sc = ts::desk_scenario(0.98);
    EXPECT_EQ(quadratic_moment_value(a, sc, 0.0), 0.0);
    const Agent n(Utility::quadratic_quasilinear(0.5), 1.0, ReferencePrior::binomial(0.4), AmbiguitySpec(1.02, 0.5));
    const double th = 0.7;
    const double m1 = 0.4 * 1.1 + 0.6 * 0.9;
    const double m2 = 0.4 * 1.21 + 0.6 * 0.81;
    EXPECT_NEAR(quadratic_moment_value(n, sc, th), th * (m1 - 0.98) - 0.25 * th * th * m2, 1e-14);
}

TEST(StochasticDominance, PositiveGaps) {
    const Agent a = ts::desk_agent(0.3, 0.7);
    const WealthProfile b{{1.0, 0.9}, true};
    EXPECT_GT(stochastic_dominance_check(a, WealthProfile{{1.1, 1.0}, true}, b), 0.0);
    EXPECT_GT(stochastic_dominance_check(a, WealthProfile{{1.0, 1.1}, true}, b), 0.0);
    EXPECT_GT(stochastic_dominance_check(a, WealthProfile{{1.2, 0.9}, true}, b), 0.0);
    const Agent maxmin = ts::desk_agent(0.3, 1.0);
    EXPECT_GT(stochastic_dominance_check(maxmin, WealthProfile{{1.0, 1.1}, true}, b), 0.0);
    EXPECT_THROW(stochastic_dominance_check(a, WealthProfile{{1.1, 0.8}, true}, b), DomainError);
    EXPECT_THROW(stochastic_dominance_check(a, b, b), DomainError);
}

TEST(FocMeasure, EqualsAlphaMixture) {
    const ReferencePrior p0({0.2, 0.5, 0.3});
    const AmbiguitySpec amb(1.05, 0.8);
    const std::vector<double> u{0.1, -0.4, 0.9};
    const auto sol = worst_best_closed_form(p0, amb, u);
    const auto m = foc_measure(p0, amb, u);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(m[s], 0.8 * sol.worst[s] + 0.2 * sol.best[s], 1e-15);
}
