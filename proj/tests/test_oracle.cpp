#include <cmath>
#include <gtest/gtest.h>
#include "helpers.hpp"

using namespace sdwd;
using namespace sdwd::oracle;

TEST(Oracle, HugeLambdaGivesInterceptOnly)
{
    Dataset raw = test::random_raw(1, 25, 6);
    raw.y[1] = 1;  // 14 positives, 11 negatives
    const Dataset d = standardize(raw).data;
    const PenaltySpec pen = PenaltySpec::uniform(50.0, 0.0, 6);
    const OracleResult o = oracle_fit(d, pen);
    const FitState s = fit_fixed(d, pen);
    EXPECT_TRUE(o.state.beta.isZero(0));
    EXPECT_TRUE(s.beta.isZero(0));
    EXPECT_NEAR(reference_objective(o.state, d, pen), reference_objective(s, d, pen), 1e-10);
    EXPECT_LE(std::abs(intercept_gradient(o.state, d)), 1e-8);
}

TEST(Oracle, AgreesWithSolverBothWays)
{
    const Dataset d = test::random_standardized(2, 20, 10);
    const PenaltySpec pen = PenaltySpec::uniform(0.1, 0.1, 10);
    const FitState s = fit_fixed(d, pen);
    const OracleResult o = oracle_fit(d, pen);
    const CompareReport ab = compare(s, o.state, d, pen);
    const CompareReport ba = compare(o.state, s, d, pen);
    EXPECT_LE(ab.relative_gap, 1e-6);
    EXPECT_LE(ba.relative_gap, 1e-6);
    EXPECT_LE(ab.coefficient_gap, 1e-4);
    EXPECT_EQ(ab.objective_gap, -ba.objective_gap);
    EXPECT_LE(ab.kkt_a, 1e-5);
    EXPECT_LE(ab.kkt_b, 1e-5);
}

TEST(Oracle, RidgeGivesMatchingCoefficients)
{
    for (double l2 : {0.1, 1.0}) {
        for (std::uint64_t seed : {3, 4, 5}) {
            const Dataset d = test::random_standardized(seed, 30, 12);
            const PenaltySpec pen{0.02, l2, Vector::LinSpaced(12, 0.5, 1.5)};
            const CompareReport r = compare(fit_fixed(d, pen), oracle_fit(d, pen).state, d, pen);
            EXPECT_LE(r.coefficient_gap, 1e-4);
            EXPECT_LE(r.relative_gap, 1e-6);
        }
    }
}

TEST(Oracle, ObjectiveNeverIncreases)
{
    const Dataset d = test::random_standardized(6, 30, 15);
    OracleConfig cfg;
    cfg.trace = true;
    for (const PenaltySpec& pen : {PenaltySpec::uniform(0.05, 0.0, 15), PenaltySpec::uniform(0.01, 1.0, 15)}) {
        const OracleResult o = oracle_fit(d, pen, cfg);
        ASSERT_EQ(o.objective_trace.size(), static_cast<std::size_t>(o.iterations));
        for (std::size_t k = 1; k < o.objective_trace.size(); ++k) {
            EXPECT_LE(o.objective_trace[k], o.objective_trace[k - 1] + 1e-14) << "iteration " << k;
        }
        EXPECT_LE(o.gradient_mapping, cfg.tol);
    }
}

TEST(Oracle, StepComesFromAValidLipschitzBound)
{
    const Dataset d = test::random_standardized(7, 25, 8);
    const double lambda2 = 0.3;
    const double L = oracle::detail::lipschitz_bound(d, lambda2);
    // Curvature of the loss is at most 4, so v' H v <= 4 |Z v|^2 / n + lambda2 |v|^2 <= L |v|^2.
    Rng rng(1);
    Matrix z(25, 9);
    z.col(0).setOnes();
    z.rightCols(8) = d.x;
    for (int t = 0; t < 100; ++t) {
        Vector v(9);
        for (Index j = 0; j < 9; ++j) v[j] = rng.gaussian();
        EXPECT_LE(4.0 * (z * v).squaredNorm() / 25.0 + lambda2 * v.tail(8).squaredNorm(), L * v.squaredNorm() * (1 + 1e-12));
    }
    EXPECT_NEAR(oracle_fit(d, PenaltySpec::uniform(0.05, lambda2, 8)).step, 1.0 / L, 1e-15);
}

TEST(Compare, IdenticalStates)
{
    const Dataset d = test::random_standardized(8, 20, 6);
    const PenaltySpec pen = PenaltySpec::uniform(0.05, 0.1, 6);
    const FitState s = fit_fixed(d, pen);
    const CompareReport r = compare(s, s, d, pen);
    EXPECT_EQ(r.objective_gap, 0.0);
    EXPECT_EQ(r.relative_gap, 0.0);
    EXPECT_EQ(r.coefficient_gap, 0.0);
    EXPECT_EQ(r.support_difference, 0);
    EXPECT_EQ(r.kkt_a, r.kkt_b);
}

TEST(Compare, UnconvergedStateShowsAGap)
{
    const Dataset d = test::random_standardized(9, 30, 10);
    const PenaltySpec pen = PenaltySpec::uniform(0.02, 0.1, 10);
    FitState one = FitState::zeros(d);
    for (Index j = 0; j < d.p(); ++j) update_coefficient(one, d, pen, j);
    update_intercept(one, d);
    const CompareReport r = compare(one, oracle_fit(d, pen).state, d, pen);
    EXPECT_GT(r.objective_gap, 1e-6);
    EXPECT_GT(r.kkt_a, 1e-3);
    EXPECT_THROW(compare(one, FitState::zeros(test::random_standardized(9, 30, 9)), d, pen), InvalidArgument);
}

TEST(Compare, SupportDifference)
{
    const Dataset d = test::random_standardized(10, 20, 4);
    const PenaltySpec pen = PenaltySpec::uniform(0.0, 0.1, 4);
    Vector a(4), b(4);
    a << 1, 0, 0, 2;
    b << 1, 3, 0, 0;
    EXPECT_EQ(compare(FitState::from(d, 0, a), FitState::from(d, 0, b), d, pen).support_difference, 2);
}

TEST(Battery, DefaultPasses)
{
    const auto reports = run_battery(BatteryConfig{});
    ASSERT_EQ(reports.size(), 50u);
    int modes[3] = {0, 0, 0};
    for (const auto& r : reports) {
        EXPECT_TRUE(r.passed) << "instance " << r.id << ": " << r.error << " gap " << r.gaps.relative_gap;
        EXPECT_TRUE(r.error.empty());
        EXPECT_GE(r.n, 10);
        EXPECT_LE(r.n, 50);
        EXPECT_GE(r.p, 5);
        EXPECT_LE(r.p, 20);
        EXPECT_FALSE(r.lambda1 == 0.0 && r.lambda2 == 0.0);
        if (r.mode == BatteryMode::lasso) EXPECT_EQ(r.lambda2, 0.0);
        ++modes[static_cast<int>(r.mode)];
    }
    EXPECT_GT(modes[0], 0);
    EXPECT_GT(modes[1], 0);
    EXPECT_GT(modes[2], 0);
}

TEST(Battery, PassesWithoutRefinement)
{
    BatteryConfig cfg;
    cfg.instances = 15;
    cfg.seed = 2;
    cfg.solver.newton_refine = false;
    for (const auto& r : run_battery(cfg)) EXPECT_TRUE(r.passed) << "instance " << r.id << ": " << r.error;
}

TEST(Battery, RejectsBadRanges)
{
    BatteryConfig cfg;
    cfg.max_n = 5;
    EXPECT_THROW(run_battery(cfg), InvalidArgument);
}
