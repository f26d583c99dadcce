#include <gtest/gtest.h>

#include "cei/scenario.hpp"

using namespace cei;

TEST(Resistance, FormulaValues) {
  EXPECT_DOUBLE_EQ(resistance(10.0), 1.0);
  EXPECT_DOUBLE_EQ(resistance(0.0), 0.5);
  EXPECT_DOUBLE_EQ(resistance(20.0), 2.5);
}

TEST(StepDynamics, TunnelKeepsVelocity) {
  VehicleState s{20.0, 10.0, 0.3, 2.0};
  const auto n = step_dynamics(s, 3.5, 0.05, true);
  EXPECT_DOUBLE_EQ(n.velocity, 10.0);
  EXPECT_DOUBLE_EQ(n.front_position, 20.5);
  EXPECT_DOUBLE_EQ(n.net_acceleration, 0.0);
}

TEST(StepDynamics, CommandBalancingResistance) {
  const auto n = step_dynamics({0.0, 10.0, 0.0, 0.0}, 1.0, 0.05, false);
  EXPECT_DOUBLE_EQ(n.net_acceleration, 0.0);
  EXPECT_DOUBLE_EQ(n.velocity, 10.0);
  EXPECT_DOUBLE_EQ(n.front_position, 0.5);
}

TEST(StepDynamics, VelocityClampsAtZero) {
  const auto n = step_dynamics({5.0, 0.01, 0.0, 0.0}, 0.0, 0.05, false);
  EXPECT_EQ(n.velocity, 0.0);
  EXPECT_EQ(n.front_position, 5.0);
  EXPECT_NEAR(n.net_acceleration, -0.2, 1e-12);  // realized: -0.01 m/s over one step
}

TEST(StepDynamics, SemiImplicitPositionUpdate) {
  const auto n = step_dynamics({0.0, 10.0, 0.0, 0.0}, 3.0, 0.05, false);
  EXPECT_DOUBLE_EQ(n.velocity, 10.1);
  EXPECT_DOUBLE_EQ(n.front_position, 10.1 * 0.05);
}

TEST(Condition, ParseAndLabel) {
  for (const auto& c : all_conditions()) EXPECT_EQ(parse_condition(c.label()), c);
  EXPECT_EQ(parse_condition("-4_8"), (Condition{-4, 8}));
  EXPECT_THROW(parse_condition("3_0"), UnknownConditionError);
  EXPECT_THROW(parse_condition("0_5"), UnknownConditionError);
  EXPECT_THROW(parse_condition("bogus"), UnknownConditionError);
  EXPECT_THROW(parse_condition(""), UnknownConditionError);
  try {
    parse_condition("9_9");
    FAIL();
  } catch (const UnknownConditionError& e) {
    EXPECT_EQ(e.label(), "9_9");
    EXPECT_NE(std::string(e.what()).find("9_9"), std::string::npos);
  }
}

TEST(Condition, DefaultSetIsMirrorClosed) {
  const auto conds = default_conditions();
  EXPECT_EQ(conds.size(), 11u);
  for (const auto& c : conds) {
    EXPECT_NE(std::find(conds.begin(), conds.end(), c.mirrored()), conds.end()) << c.label();
  }
}

TEST(InitialStates, SymmetricCondition) {
  Track track;
  const auto [l, r] = initial_states({0, 0}, track);
  EXPECT_EQ(l.front_position, 0.0);
  EXPECT_EQ(r.front_position, 0.0);
  EXPECT_EQ(l.velocity, 10.0);
  EXPECT_EQ(r.velocity, 10.0);
}

TEST(InitialStates, HeadwayAdvantage) {
  Track track;
  const auto [l, r] = initial_states({4, 0}, track);
  EXPECT_DOUBLE_EQ(l.front_position - r.front_position, 4.0);
  EXPECT_EQ(std::min(l.front_position, r.front_position), 0.0);
}

// Constant-velocity extrapolation must reproduce the projected headway at the
// instant the leading vehicle reaches the merge point.
TEST(InitialStates, ArrivalEquationsHoldForAllConditions) {
  Track track;
  for (const auto& c : all_conditions()) {
    const auto [l, r] = initial_states(c, track);
    EXPECT_DOUBLE_EQ(std::min(l.front_position, r.front_position), 0.0) << c.label();
    const double tl = (track.merge_point() - l.front_position) / l.velocity;
    const double tr = (track.merge_point() - r.front_position) / r.velocity;
    const double t = std::min(tl, tr);
    const double headway = (l.front_position + l.velocity * t) - (r.front_position + r.velocity * t);
    EXPECT_NEAR(headway, c.projected_headway(), 1e-9) << c.label();
  }
  const auto [l, r] = initial_states({0, 8}, track);
  EXPECT_DOUBLE_EQ(l.velocity, 10.4);
  EXPECT_DOUBLE_EQ(r.velocity, 9.6);
  EXPECT_EQ(l.front_position, 0.0);
  EXPECT_NEAR(r.front_position, 100.0 - 9.6 * 100.0 / 10.4, 1e-9);
}

TEST(CollisionBounds, Examples) {
  Track track;
  EXPECT_FALSE(collision_bounds(90.0, track));
  const auto beyond = collision_bounds(110.0, track);
  ASSERT_TRUE(beyond);
  EXPECT_DOUBLE_EQ(beyond->lower, 105.5);
  EXPECT_DOUBLE_EQ(beyond->upper, 114.5);
  const auto straddle = collision_bounds(98.0, track);
  ASSERT_TRUE(straddle);
  EXPECT_DOUBLE_EQ(straddle->lower, 100.0);
  EXPECT_DOUBLE_EQ(straddle->upper, 102.5);
}

// Bounds agree with a direct overlap check on a fine grid of other-front positions.
TEST(CollisionBounds, MatchesBruteForceOverlap) {
  Track track;
  for (double ego = 80.0; ego <= 130.0; ego += 0.37) {
    const auto b = collision_bounds(ego, track);
    for (double other = 70.0; other <= 140.0; other += 0.013) {
      const bool overlap = std::abs(ego - other) < track.vehicle_length &&
                           std::max(ego, other) > track.merge_point();
      EXPECT_EQ(overlap, b.has_value() && b->contains(other)) << ego << " " << other;
    }
  }
}

TEST(DetectCollision, Examples) {
  Track track;
  auto at = [](double p) { return VehicleState{p, 10.0, 0.0, 0.0}; };
  EXPECT_TRUE(detect_collision(at(110), at(113), track));
  EXPECT_FALSE(detect_collision(at(95), at(96), track));
  EXPECT_FALSE(detect_collision(at(101), at(105.6), track));
  EXPECT_TRUE(detect_collision(at(98), at(101), track));
  EXPECT_EQ(detect_collision(at(98), at(101), track), detect_collision(at(101), at(98), track));
}
