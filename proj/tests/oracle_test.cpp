#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace ambimax;
namespace ts = testing_support;

TEST(Oracle, SingletonBall) {
    const ReferencePrior p0({0.3, 0.3, 0.4});
    const auto sol = oracle::worst_best_oracle(p0, 1.0, std::vector<double>{1.0, 0.0, 2.0});
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_DOUBLE_EQ(sol.worst[s], p0[s]);
        EXPECT_DOUBLE_EQ(sol.best[s], p0[s]);
    }
}

TEST(Oracle, GridSearchTwoStates) {
    const ReferencePrior p0 = ReferencePrior::binomial(0.25);
    const std::vector<double> u{0.0, 1.0};
    const auto grid = oracle::worst_best_grid(p0, 1.01, u);
    const auto cf = worst_best_closed_form(p0, AmbiguitySpec(1.01, 0.5), u);
    // The pessimist loads the zero-utility state as far as the ball permits.
    EXPECT_GT(grid.worst[0], 0.25);
    EXPECT_NEAR(grid.worst[0], cf.worst[0], 1e-6);
    EXPECT_NEAR(grid.best[0], cf.best[0], 1e-6);
}

TEST(Oracle, TrinomialAgreesWithClosedForm) {
    const ReferencePrior p0({0.05, 0.7, 0.25});
    const std::vector<double> u{-1.0, 0.0, 1.0};
    const auto ref = oracle::worst_best_oracle(p0, 1.01, u);
    const auto cf = worst_best_closed_form(p0, AmbiguitySpec(1.01, 0.5), u);
    for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_NEAR(ref.worst[s], cf.worst[s], 1e-6);
        EXPECT_NEAR(ref.best[s], cf.best[s], 1e-6);
    }
}

TEST(Oracle, BinomialDeskExample) {
    const ReferencePrior p0 = ReferencePrior::binomial(0.5);
    const std::vector<double> u{2.0, 1.0};
    const auto ref = oracle::worst_best_oracle(p0, 1.01, u);
    const auto cf = worst_best_closed_form(p0, AmbiguitySpec(1.01, 0.5), u);
    EXPECT_NEAR(ref.worst[0], cf.worst[0], 1e-8);
    EXPECT_NEAR(ref.best[0], cf.best[0], 1e-8);
}

TEST(Oracle, RandomInstancesAgree) {
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = static_cast<std::size_t>(ts::uniform_int(2, 6));
        const auto p = ts::random_prior(n);
        const double c = ts::random_c(p);
        const auto u = ts::random_vector(n, -1.0, 1.0);
        const auto ref = oracle::worst_best_oracle(ReferencePrior(p), c, u);
        const auto cf = worst_best_closed_form(ReferencePrior(p), AmbiguitySpec(c, 0.5), u);
        for (std::size_t s = 0; s < n; ++s) {
            EXPECT_NEAR(ref.worst[s], cf.worst[s], 1e-6);
            EXPECT_NEAR(ref.best[s], cf.best[s], 1e-6);
        }
        EXPECT_NEAR(ref.value_worst, cf.value_worst, 1e-8);
        EXPECT_NEAR(ref.value_best, cf.value_best, 1e-8);
    }
}

TEST(Oracle, RejectsLargeInstances) {
    const std::vector<double> p(9, 1.0 / 9.0);
    EXPECT_THROW(oracle::worst_best_oracle(ReferencePrior(p), 1.01, std::vector<double>(9, 0.0)), DomainError);
}
