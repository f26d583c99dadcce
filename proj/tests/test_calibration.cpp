#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "cei/calibration.hpp"

using namespace cei;

namespace {

GridSpec small_spec() {
  GridSpec s;
  s.resolution = 5;
  return s;
}

GridResponse handmade_grid(const std::vector<double>& deviations) {
  GridResponse g;
  g.spec = small_spec();
  g.spec.resolution = 2;
  const double tl[] = {0.1, 0.2}, tu[] = {0.5, 0.6};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      GridCell c{i, j, tl[i], tu[j], true, deviations[static_cast<std::size_t>(i * 2 + j)]};
      g.cells.push_back(c);
    }
  }
  return g;
}

std::string participant_name(int p) { return (p < 10 ? "d0" : "d") + std::to_string(p); }

std::vector<TrialThreshold> synthetic_thresholds(const IncentiveCoefficients& lambda, int participants, double sd,
                                                 std::uint64_t seed, std::vector<DriverParams>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  std::uniform_real_distribution<double> base_l(0.05, 0.3), base_u(0.45, 0.7);
  std::vector<TrialThreshold> out;
  for (int p = 0; p < participants; ++p) {
    const DriverParams base{base_l(rng), base_u(rng)};
    if (truth) truth->push_back(base);
    for (const auto& c : default_conditions()) {
      for (const auto& own : {c, c.mirrored()}) {
        const double dp = own.projected_headway(), dv = own.relative_velocity();
        for (int r = 0; r < 5; ++r) {
          const double u = base.theta_u + lambda.upper[0] * dp + lambda.upper[1] * dv + lambda.upper[2] * dp * dv;
          const double l = base.theta_l + lambda.lower[0] * dp + lambda.lower[1] * dv + lambda.lower[2] * dp * dv;
          out.push_back({participant_name(p), dp, dv, l + noise(rng), u + noise(rng)});
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST(Grid, SkipsCellsWithLowerAboveUpper) {
  GridSpec s;
  s.lower_max = 0.5;
  s.upper_min = 0.3;
  s.resolution = 3;
  const auto g = build_grid(parse_condition("0_0"), s, ModelConfig{});
  EXPECT_FALSE(g.at(2, 0).valid);  // 0.5 vs 0.3
  EXPECT_TRUE(std::isnan(g.at(2, 0).deviation));
  EXPECT_TRUE(g.at(0, 0).valid);
  EXPECT_FALSE(std::isnan(g.at(0, 0).deviation));
}

TEST(Grid, ReproducibleAndWorkerIndependent) {
  ModelConfig config;
  const auto c = parse_condition("-2_8");
  const auto a = build_grid(c, small_spec(), config, 1);
  const auto b = build_grid(c, small_spec(), config, 3);
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    if (!a.cells[k].valid) continue;
    EXPECT_EQ(a.cells[k].deviation, b.cells[k].deviation);
  }
}

// The left-driver grid for c and the right-driver grid for c mirrored are the same experiment.
TEST(Grid, MirrorSidesAgree) {
  ModelConfig config;
  for (const char* label : {"4_0", "-2_-8", "0_8"}) {
    const auto c = parse_condition(label);
    const auto left = build_grid(c, small_spec(), config, 1, Side::kLeft);
    const auto right = build_grid(c.mirrored(), small_spec(), config, 1, Side::kRight);
    for (std::size_t k = 0; k < left.cells.size(); ++k) {
      if (!left.cells[k].valid) continue;
      EXPECT_EQ(left.cells[k].deviation, right.cells[k].deviation) << label;
    }
  }
}

TEST(Grid, DisadvantagedLowUpperThresholdBrakes) {
  const double dev = probe_deviation(parse_condition("-4_0"), Side::kLeft, {0.01, 0.3}, ModelConfig{}, 1.0);
  EXPECT_LT(dev, 0.0);
}

TEST(Grid, HighUpperThresholdIsUnconstrained) {
  // With no risk-triggered action the response is the unconstrained plan, the same as thresholds 0.001/0.999.
  ModelConfig config;
  const auto c = parse_condition("4_8");
  const double free = probe_deviation(c, Side::kLeft, {0.001, 0.999}, config, 1.0);
  EXPECT_EQ(probe_deviation(c, Side::kLeft, {0.2, 0.9}, config, 1.0), free);
}

TEST(Grid, CacheRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cei_grid_cache_test";
  std::filesystem::remove_all(dir);
  ModelConfig config;
  const auto c = parse_condition("2_-8");
  bool hit = true;
  const auto built = load_or_build_grid(c, small_spec(), config, 1, dir, &hit);
  EXPECT_FALSE(hit);
  const auto cached = load_or_build_grid(c, small_spec(), config, 1, dir, &hit);
  EXPECT_TRUE(hit);
  for (std::size_t k = 0; k < built.cells.size(); ++k) {
    EXPECT_EQ(built.cells[k].valid, cached.cells[k].valid);
    if (!built.cells[k].valid) continue;
    EXPECT_EQ(built.cells[k].deviation, cached.cells[k].deviation);
  }
  // Any change to the model constants invalidates the entry.
  config.constants.tau = 1.7;
  load_or_build_grid(c, small_spec(), config, 1, dir, &hit);
  EXPECT_FALSE(hit);
  std::filesystem::remove_all(dir);
}

TEST(Grid, CacheDirFromEnvironment) {
  ::setenv("CEI_CACHE_DIR", "/tmp/somewhere", 1);
  EXPECT_EQ(grid_cache_dir(), std::filesystem::path("/tmp/somewhere"));
  ::unsetenv("CEI_CACHE_DIR");
  EXPECT_EQ(grid_cache_dir(), std::filesystem::path(".cei-cache"));
}

TEST(Match, ExactCell) {
  const auto g = handmade_grid({-0.4, -0.1, 0.0, 0.3});
  const auto m = match_trial(-0.1, g);
  EXPECT_EQ(m.lower_index, 0);
  EXPECT_EQ(m.upper_index, 1);
  EXPECT_EQ(m.error, 0.0);
}

TEST(Match, TieGoesToLargestUpperThenLower) {
  const auto g = handmade_grid({0.0, 0.0, 0.0, 0.0});
  const auto m = match_trial(0.0, g);
  EXPECT_EQ(m.theta_u, 0.6);
  EXPECT_EQ(m.theta_l, 0.2);
  const auto h = handmade_grid({0.0, -0.5, 0.0, -0.5});
  const auto n = match_trial(0.0, h);
  EXPECT_EQ(n.theta_u, 0.5);
  EXPECT_EQ(n.theta_l, 0.2);
}

TEST(Match, ErrorWithinQuantizationBound) {
  const auto g = build_grid(parse_condition("-4_0"), small_spec(), ModelConfig{});
  for (double obs = -1.5; obs <= 0.5; obs += 0.037) {
    const auto m = match_trial(obs, g);
    if (std::isfinite(m.quantization_bound)) {
      EXPECT_LE(m.error, m.quantization_bound + 1e-15);
    }
  }
}

TEST(Fit, ExactRecovery) {
  const IncentiveCoefficients lambda;
  std::vector<DriverParams> truth;
  const auto fit = fit_thresholds(synthetic_thresholds(lambda, 6, 0.0, 1, &truth));
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(fit.upper.slopes[k], lambda.upper[k], 1e-10);
    EXPECT_NEAR(fit.lower.slopes[k], lambda.lower[k], 1e-10);
  }
  for (std::size_t p = 0; p < truth.size(); ++p) {
    const auto name = participant_name(static_cast<int>(p));
    EXPECT_NEAR(fit.intercept(name).theta_u, truth[p].theta_u, 1e-10);
    EXPECT_NEAR(fit.intercept(name).theta_l, truth[p].theta_l, 1e-10);
  }
}

TEST(Fit, NoisyRecoveryWithinThreeStandardErrors) {
  const IncentiveCoefficients lambda;
  int inside = 0, total = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto fit = fit_thresholds(synthetic_thresholds(lambda, 18, 0.02, 1000 + rep));
    for (int k = 0; k < 3; ++k) {
      inside += std::abs(fit.upper.slopes[k] - lambda.upper[k]) <= 3 * fit.upper.standard_errors[k];
      inside += std::abs(fit.lower.slopes[k] - lambda.lower[k]) <= 3 * fit.lower.standard_errors[k];
      total += 2;
    }
  }
  // nominal coverage 99.7%
  EXPECT_GE(static_cast<double>(inside) / total, 0.98);
}

TEST(Fit, SingleConditionIsRankDeficient) {
  std::vector<TrialThreshold> data;
  for (int i = 0; i < 10; ++i) data.push_back({i % 2 ? "a" : "b", 2.0, 0.8, 0.1, 0.5});
  EXPECT_THROW(fit_thresholds(data), RankDeficientError);
}

TEST(Fit, NeedsTwoParticipants) {
  std::vector<TrialThreshold> data;
  for (int i = 0; i < 10; ++i) data.push_back({"a", i * 1.0, 0.8, 0.1, 0.5});
  EXPECT_THROW(fit_thresholds(data), std::invalid_argument);
}

TEST(Calibrate, ConditionsNeededIncludeMirrors) {
  TrialLog log;
  log.condition = parse_condition("4_8");
  const auto need = conditions_needed({log});
  ASSERT_EQ(need.size(), 2u);
  EXPECT_EQ(need[0], parse_condition("-4_-8"));
  EXPECT_EQ(need[1], parse_condition("4_8"));
}
