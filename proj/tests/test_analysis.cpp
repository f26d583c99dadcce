#include <gtest/gtest.h>

#include <functional>

#include "cei/analysis.hpp"

using namespace cei;

namespace {

using Profile = std::function<std::pair<double, double>(double)>;  // t -> (position, velocity)

// Log sampled at dt from two closed-form profiles.
TrialLog synthetic(const Profile& left, const Profile& right, double duration, double dt = 0.05) {
  TrialLog log;
  log.dt = dt;
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    StepRecord s;
    s.t = t;
    std::tie(s.left.front_position, s.left.velocity) = left(t);
    std::tie(s.right.front_position, s.right.velocity) = right(t);
    log.steps.push_back(s);
  }
  return log;
}

Profile constant(double p0, double v) {
  return [=](double t) { return std::make_pair(p0 + v * t, v); };
}

}  // namespace

TEST(Deviation, ConstantVelocityIsZero) {
  Track track;
  const auto log = synthetic(constant(0, 10), constant(0, 10), 12);
  const auto d = velocity_deviation_metrics(log, Side::kLeft, track);
  EXPECT_EQ(d.max_dev, 0.0);
  EXPECT_EQ(d.min_dev, 0.0);
  EXPECT_EQ(d.max_abs_dev, 0.0);
}

TEST(Deviation, PeakAndDip) {
  Track track;
  auto log = synthetic(constant(0, 10), constant(0, 10), 12);
  // exit at t = 5
  log.steps[120].left.velocity = 11.2;
  log.steps[140].left.velocity = 9.7;
  const auto d = velocity_deviation_metrics(log, Side::kLeft, track);
  EXPECT_NEAR(d.max_dev, 1.2, 1e-12);
  EXPECT_NEAR(d.min_dev, -0.3, 1e-12);
  EXPECT_NEAR(d.max_abs_dev, 1.2, 1e-12);
}

TEST(Deviation, IgnoresTunnelPhase) {
  Track track;
  auto log = synthetic(constant(0, 10), constant(0, 10), 12);
  log.steps[10].left.velocity = 20.0;
  EXPECT_EQ(velocity_deviation_metrics(log, Side::kLeft, track).max_abs_dev, 0.0);
}

TEST(Deviation, TriangularAgainstScan) {
  Track track;
  const Profile tri = [](double t) {
    const double v = 10.0 + (t < 7.0 ? 0.0 : t < 8.0 ? -(t - 7.0) * 1.5 : t < 9.5 ? -1.5 + (t - 8.0) * 2.0 : 1.5);
    return std::make_pair(10.0 * t, v);
  };
  const auto log = synthetic(tri, constant(0, 10), 14);
  double mx = -1e9, mn = 1e9;
  for (const auto& s : log.steps) {
    if (s.left.front_position < 50.0 || s.right.front_position < 50.0) continue;
    mx = std::max(mx, s.left.velocity - 10.0);
    mn = std::min(mn, s.left.velocity - 10.0);
  }
  const auto d = velocity_deviation_metrics(log, Side::kLeft, track);
  EXPECT_EQ(d.max_dev, mx);
  EXPECT_EQ(d.min_dev, mn);
  EXPECT_EQ(d.max_abs_dev, std::max(std::abs(mx), std::abs(mn)));
}

TEST(DeviationAfterExit, Interpolates) {
  Track track;
  const Profile ramp = [](double t) { return std::make_pair(10.0 * t, t < 5.0 ? 10.0 : 10.0 + 0.5 * (t - 5.0)); };
  const auto log = synthetic(ramp, constant(0, 10), 8);
  EXPECT_NEAR(*deviation_after_exit(log, Side::kLeft, track, 1.0), 0.5, 1e-9);
  EXPECT_NEAR(*deviation_after_exit(log, Side::kLeft, track, 1.01), 0.505, 1e-9);
  EXPECT_FALSE(deviation_after_exit(log, Side::kLeft, track, 10.0));
}

TEST(Gap, ClearanceAtCrossing) {
  Track track;
  // Left reaches 100 at t = 10 exactly; right is 7 m behind.
  const auto log = synthetic(constant(0, 10), constant(-7, 10), 12);
  EXPECT_NEAR(*gap_at_merge(log, track), 2.5, 1e-9);
  EXPECT_NEAR(*gap_at_merge(log, track, GapDefinition::kFrontToFront), 7.0, 1e-9);
  EXPECT_EQ(*merge_order(log, track), Side::kLeft);
}

TEST(Gap, InterpolatedBetweenSteps) {
  Track track;
  // Leader crosses between samples; follower at a different speed.
  const auto log = synthetic(constant(-8, 11), constant(0.37, 10.3), 12);
  const double tc = (100.0 - 0.37) / 10.3;
  const double expected = 100.0 - (-8 + 11 * tc) - 4.5;
  EXPECT_EQ(*merge_order(log, track), Side::kRight);
  EXPECT_NEAR(*gap_at_merge(log, track), expected, 1e-9);
}

TEST(Gap, SimultaneousIsNegative) {
  Track track;
  const auto log = synthetic(constant(0, 10), constant(0, 10), 12);
  EXPECT_NEAR(*gap_at_merge(log, track), -4.5, 1e-12);
}

TEST(Gap, AbsentWithoutCrossing) {
  Track track;
  const auto log = synthetic(constant(0, 5), constant(0, 5), 10);
  EXPECT_FALSE(gap_at_merge(log, track));
  EXPECT_FALSE(merge_order(log, track));
}

TEST(MergeOrder, InterpolatedCrossingTimes) {
  Track track;
  // Left crosses at 9.84 s, right at 10.42 s.
  const auto log = synthetic(constant(100 - 9.84 * 10, 10), constant(100 - 10.42 * 10, 10), 12);
  EXPECT_EQ(*merge_order(log, track), Side::kLeft);
  EXPECT_NEAR(merge_crossing(log, track)->time, 9.84, 1e-9);
}

TEST(Crt, ZeroWhenOrderNeverChanges) {
  Track track;
  const auto log = synthetic(constant(0, 10), constant(-3, 10), 12);
  EXPECT_EQ(*conflict_resolution_time(log, track), 0.0);
}

TEST(Crt, SingleFlip) {
  Track track;
  // Exit at t = 5 (both at >= 50). Right starts ahead, left speeds up so the
  // projected order flips at t = 8.2, i.e. 3.2 s after exit.
  const Profile right = constant(1.0, 10.0);
  const Profile left = [](double t) {
    if (t < 8.175) return std::make_pair(10.0 * t, 10.0);
    return std::make_pair(10.0 * t + 4.0 * (t - 8.175), 14.0);
  };
  const auto log = synthetic(left, right, 12);
  EXPECT_NEAR(*conflict_resolution_time(log, track), 3.2, 1e-9);
}

TEST(Statistics, QuantileAndMean) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(mean_of({1, 2, 6}), 3.0);
  EXPECT_TRUE(std::isnan(mean_of({})));
}

TEST(Statistics, Wilson) {
  const auto ci = wilson_interval(8, 10);
  EXPECT_NEAR(ci.low, 0.4902, 1e-4);
  EXPECT_NEAR(ci.high, 0.9433, 1e-4);
}

TEST(Statistics, SpearmanWithTies) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 2, 3}, {1, 2, 3, 4}), 0.9486832980505138, 1e-12);
}

TEST(Aggregate, ExcludesCollisions) {
  std::vector<TrialMetrics> trials(3);
  for (int i = 0; i < 3; ++i) {
    trials[i].source = "model";
    trials[i].pair = 1;
    trials[i].left.max_abs_dev = i + 1.0;
    trials[i].gap = 2.0 * (i + 1);
    trials[i].order = i == 0 ? Side::kLeft : Side::kRight;
  }
  trials[2].outcome = Outcome::kCollision;
  const auto rows = aggregate(trials);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n_trials, 3);
  EXPECT_EQ(rows[0].n_collisions, 1);
  EXPECT_EQ(rows[0].n_included, 2);
  EXPECT_DOUBLE_EQ(rows[0].mean_max_abs_dev[0], 1.5);
  EXPECT_DOUBLE_EQ(rows[0].mean_gap, 3.0);
  EXPECT_DOUBLE_EQ(rows[0].p_left_first, 0.5);
}

TEST(Csv, VersionedHeader) {
  std::ostringstream os;
  write_aggregate_csv(os, {});
  EXPECT_EQ(os.str().rfind("# cei-csv aggregate v1\n", 0), 0u);
}

TEST(Metrics, PureFunctionOfLog) {
  Track track;
  const auto log = synthetic(constant(-8, 11), constant(0.37, 10.3), 12);
  const auto a = compute_metrics(log, track);
  const auto b = compute_metrics(log, track);
  EXPECT_EQ(*a.gap, *b.gap);
  EXPECT_EQ(*a.crt, *b.crt);
  EXPECT_EQ(a.left.max_abs_dev, b.left.max_abs_dev);
}
