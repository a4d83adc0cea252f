#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "loopforge/controller.hpp"
#include "loopforge/errors.hpp"

using namespace loopforge;

TEST(PdTorque, ZeroErrorGivesZeroTorque) {
    const auto cmd = pd_torque({20.0, 2.0}, {0.4, -0.1}, {0.4, -0.1});
    EXPECT_EQ(cmd.tau, 0.0);
    EXPECT_FALSE(cmd.saturated);
}

TEST(PdTorque, ScalarEvaluation) {
    // 2 * 0.3 + 0.5 * (-0.2) = 0.5
    const auto cmd = pd_torque({2.0, 0.5}, {0.3, -0.2}, {0.0, 0.0});
    EXPECT_NEAR(cmd.tau, 0.5, 1e-15);
    EXPECT_FALSE(cmd.saturated);
}

TEST(PdTorque, ClampsAndFlagsSaturation) {
    auto cmd = pd_torque({100.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, 10.0);
    EXPECT_EQ(cmd.tau, 10.0);
    EXPECT_TRUE(cmd.saturated);
    cmd = pd_torque({100.0, 0.0}, {-1.0, 0.0}, {0.0, 0.0}, 10.0);
    EXPECT_EQ(cmd.tau, -10.0);
    EXPECT_TRUE(cmd.saturated);
    cmd = pd_torque({10.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, 10.0);
    EXPECT_EQ(cmd.tau, 10.0);
    EXPECT_FALSE(cmd.saturated);
}

TEST(PdTorque, RejectsBadInputs) {
    EXPECT_THROW(pd_torque({1.0, 1.0}, {NAN, 0.0}, {}), NumericError);
    EXPECT_THROW(pd_torque({1.0, 1.0}, {}, {}, 0.0), ConfigError);
}

TEST(PdTorqueProperty, LinearBelowSaturation) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.1, 0.1), g(0.1, 5.0);
    for (int trial = 0; trial < 500; ++trial) {
        const PDGains gains{g(rng), g(rng)};
        const double e = u(rng), ed = u(rng);
        const double tau = pd_torque(gains, {e, ed}, {}).tau;
        EXPECT_NEAR(pd_torque(gains, {2 * e, 2 * ed}, {}).tau, 2 * tau, 1e-12);
        const double c = g(rng);
        EXPECT_NEAR(pd_torque({c * gains.kp, c * gains.kd}, {e, ed}, {}).tau, c * tau, 1e-12);
    }
}

TEST(PdTorqueProperty, SaturationFlagMatchesUnclampedMagnitude) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        const PDGains gains{10.0, 1.0};
        const Setpoint sp{u(rng), u(rng)};
        const double raw = gains.kp * sp.q_d + gains.kd * sp.q_dot_d;
        const auto cmd = pd_torque(gains, sp, {}, 10.0);
        EXPECT_EQ(cmd.saturated, std::abs(raw) > 10.0);
        EXPECT_LE(std::abs(cmd.tau), 10.0);
    }
}

TEST(ApplyAction, HoldLeavesInputsUnchanged) {
    const auto table = ActionTable::standard({20.0, 2.0});
    const PDGains gains{25.0, 3.0};
    const Setpoint adj{0.1, 0.0};
    const auto [g, s] = apply_action(0, table, gains, adj);
    EXPECT_EQ(g.kp, 25.0);
    EXPECT_EQ(g.kd, 3.0);
    EXPECT_EQ(s.q_d, 0.1);
}

TEST(ApplyAction, StiffenMultipliesKp) {
    const auto table = ActionTable::standard({2.0, 0.5});
    ASSERT_EQ(table.entries[1].name, "stiffen");
    const auto [g, s] = apply_action(1, table, {2.0, 0.5}, {});
    EXPECT_DOUBLE_EQ(g.kp, 3.0);
    EXPECT_EQ(g.kd, 0.5);
}

TEST(ApplyAction, StiffenThenSoftenRestoresGains) {
    auto table = ActionTable::standard({2.0, 0.5});
    table.entries.push_back({"soften", 2.0 / 3.0, 1.0, 0.0, false});
    const PDGains start{2.0, 0.5};
    const auto [stiff, s1] = apply_action(1, table, start, {});
    const auto [back, s2] = apply_action(4, table, stiff, s1);
    EXPECT_NEAR(back.kp, start.kp, 1e-12);
    EXPECT_NEAR(back.kd, start.kd, 1e-12);
}

TEST(ApplyAction, RecoverResetsGainsAndOffset) {
    const auto table = ActionTable::standard({20.0, 2.0});
    ASSERT_EQ(table.entries[3].name, "recover");
    const auto [g, s] = apply_action(3, table, {45.0, 4.5}, {0.2, 0.0});
    EXPECT_EQ(g.kp, 20.0);
    EXPECT_EQ(g.kd, 2.0);
    EXPECT_EQ(s.q_d, 0.0);
}

TEST(ApplyAction, GainsStayWithinScaleLimits) {
    const auto table = ActionTable::standard({20.0, 2.0});
    PDGains g{20.0, 2.0};
    Setpoint s{};
    for (int i = 0; i < 20; ++i) std::tie(g, s) = apply_action(1, table, g, s);
    EXPECT_DOUBLE_EQ(g.kp, 80.0);
}

TEST(ApplyAction, SetpointOffsetAccumulates) {
    auto table = ActionTable::standard({20.0, 2.0});
    table.entries.push_back({"nudge", 1.0, 1.0, 0.05, false});
    auto [g, s] = apply_action(4, table, {20.0, 2.0}, {});
    std::tie(g, s) = apply_action(4, table, g, s);
    EXPECT_NEAR(s.q_d, 0.1, 1e-15);
}

TEST(ApplyAction, OutOfRangeIndexThrows) {
    const auto table = ActionTable::standard({20.0, 2.0});
    EXPECT_THROW(apply_action(4, table, {20.0, 2.0}, {}), ActionError);
}

TEST(ActionTableValidate, FirstEntryMustBeNoOp) {
    auto table = ActionTable::standard({20.0, 2.0});
    EXPECT_NO_THROW(table.validate());
    table.entries[0].kp_scale = 2.0;
    EXPECT_THROW(table.validate(), ConfigError);
}
