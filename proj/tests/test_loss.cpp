#include <cmath>
#include <limits>
#include <gtest/gtest.h>
#include <sdwd/loss.hpp>
#include "loss_properties.hpp"

using namespace sdwd;

TEST(Loss, Values)
{
    EXPECT_DOUBLE_EQ(dwd_loss(0.0), 1.0);
    EXPECT_DOUBLE_EQ(dwd_loss(0.5), 0.5);
    EXPECT_DOUBLE_EQ(1.0 - 0.5, 1.0 / (4 * 0.5));
    EXPECT_DOUBLE_EQ(dwd_loss(1.0), 0.25);
}

TEST(Loss, Derivative)
{
    EXPECT_DOUBLE_EQ(dwd_loss_deriv(0.0), -1.0);
    EXPECT_DOUBLE_EQ(dwd_loss_deriv(0.5), -1.0);
    EXPECT_DOUBLE_EQ(-1.0 / (4 * 0.5 * 0.5), -1.0);
    EXPECT_DOUBLE_EQ(dwd_loss_deriv(1.0), -0.25);
}

TEST(Loss, PositiveAndMonotone)
{
    double prev_v = dwd_loss(-10.0), prev_d = dwd_loss_deriv(-10.0);
    for (double u = -10.0; u <= 10.0; u += 0.01) {
        const double v = dwd_loss(u), d = dwd_loss_deriv(u);
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, prev_v);
        EXPECT_GE(d, -1.0);
        EXPECT_LT(d, 0.0);
        EXPECT_GE(d, prev_d);
        prev_v = v;
        prev_d = d;
    }
}

TEST(Loss, NonFiniteRejected)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(dwd_loss(inf), InvalidArgument);
    EXPECT_THROW(dwd_loss(nan), InvalidArgument);
    EXPECT_THROW(dwd_loss_deriv(-inf), InvalidArgument);
    EXPECT_THROW(dwd_loss_deriv(nan), InvalidArgument);
}

TEST(SoftThreshold, Values)
{
    EXPECT_DOUBLE_EQ(soft_threshold(3.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 1.0), 0.0);
    for (double z : {-2.5, -1e-300, 0.0, 0.7, 1e300}) EXPECT_EQ(soft_threshold(z, 0.0), z);
    EXPECT_DOUBLE_EQ(soft_threshold(-3.0, 1.0), -2.0);
}

TEST(SoftThreshold, NegativeThresholdRejected)
{
    EXPECT_THROW(soft_threshold(1.0, -0.1), InvalidArgument);
    EXPECT_THROW(soft_threshold(1.0, std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
}

TEST(Majorization, Constants)
{
    static_assert(dwd_majorization.valid());
    EXPECT_EQ(dwd_majorization.lipschitz, 4.0);
    EXPECT_EQ(dwd_majorization.quad_coeff, 2.0);
    EXPECT_FALSE((MajorizationConstants{4.0, 1.0}.valid()));
    EXPECT_FALSE((MajorizationConstants{0.0, 0.0}.valid()));
}

TEST(Majorization, EqualityAtTouchPoint)
{
    for (double b : {-2.0, 0.0, 0.5, 0.75, 3.0}) {
        EXPECT_EQ(dwd_loss(b) + dwd_loss_deriv(b) * 0.0 + 2.0 * 0.0, dwd_loss(b));
    }
}

TEST(LossProperties, RandomPoints)
{
    const auto bad = test::check_loss_properties(42, 10000);
    EXPECT_EQ(bad.majorization, 0);
    EXPECT_EQ(bad.lipschitz, 0);
    EXPECT_EQ(bad.convexity, 0);
    EXPECT_EQ(bad.derivative, 0);
    EXPECT_EQ(bad.soft_threshold, 0);
}
