#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cei/config.hpp"

using namespace cei;

namespace {

std::vector<std::string> diagnostics_of(const std::string& text) {
  try {
    parse_run_config_text(text);
  } catch (const ConfigError& e) {
    return e.diagnostics();
  }
  return {};
}

bool mentions(const std::vector<std::string>& d, const std::string& needle) {
  for (const auto& s : d) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto cfg = parse_run_config_text("{}");
  EXPECT_EQ(cfg.conditions.size(), 11u);
  EXPECT_EQ(cfg.parameters.pairs.size(), 9u);
  EXPECT_EQ(cfg.repetitions, 10);
  EXPECT_EQ(cfg.model.constants.tau, 1.6);
}

TEST(Config, ReadsFields) {
  const auto cfg = parse_run_config_text(R"(
track: {vehicle_length: 4.0}
model: {saturation_time: 2.0, incentive_delta: projected}
conditions: [0_0, 4_-8]
repetitions: 3
base_seed: 99
mode: noise_free
workers: 2
analysis: {gap: front_to_front}
calibration: {resolution: 11, probe_time: 0.5}
)");
  EXPECT_EQ(cfg.model.track.vehicle_length, 4.0);
  EXPECT_EQ(cfg.model.constants.tau, 2.0);
  EXPECT_EQ(cfg.model.incentive_delta, IncentiveDelta::kProjected);
  ASSERT_EQ(cfg.conditions.size(), 2u);
  EXPECT_EQ(cfg.conditions[1].label(), "4_-8");
  EXPECT_EQ(cfg.base_seed, 99u);
  EXPECT_EQ(cfg.mode, Mode::kNoiseFree);
  EXPECT_EQ(cfg.analysis.gap, GapDefinition::kFrontToFront);
  EXPECT_EQ(cfg.grid.resolution, 11);
}

TEST(Config, FieldLevelDiagnostics) {
  const auto d = diagnostics_of("repetitions: 0\nworkers: -1\ntrack: {vehicle_length: -2}\nbogus: 1\n");
  EXPECT_TRUE(mentions(d, "repetitions"));
  EXPECT_TRUE(mentions(d, "workers"));
  EXPECT_TRUE(mentions(d, "track.vehicle_length"));
  EXPECT_TRUE(mentions(d, "bogus"));
}

TEST(Config, UnknownConditionNamesLabel) {
  try {
    parse_run_config_text("conditions: [0_0, 3_0]\n");
    FAIL();
  } catch (const UnknownConditionError& e) {
    EXPECT_NE(std::string(e.what()).find("3_0"), std::string::npos);
  }
}

TEST(Config, InlinePairs) {
  const auto cfg = parse_run_config_text(R"(
pairs:
  - {pair: 4, left: {theta_l: 0.1, theta_u: 0.5}, right: {theta_l: 0.2, theta_u: 0.6}}
incentive: {upper: [0, 0, 0], lower: [0, 0, 0]}
)");
  ASSERT_EQ(cfg.parameters.pairs.size(), 1u);
  EXPECT_EQ(cfg.parameters.pairs[0].right.theta_u, 0.6);
  EXPECT_EQ(cfg.model.incentive.upper[1], 0.0);
}

TEST(Config, DriverOrdering) {
  EXPECT_TRUE(mentions(diagnostics_of("pairs: [{pair: 1, left: {theta_l: 0.6, theta_u: 0.5}, right: {theta_l: "
                                      "0.1, theta_u: 0.5}}]\n"),
                       "pairs[0].left"));
}

TEST(Config, EmitParsesBackToSameConfig) {
  auto cfg = parse_run_config_text("conditions: [2_8, -4_0]\nrepetitions: 2\nbase_seed: 7\nmodel: {phi: 2.5}\n");
  cfg.parameters.pairs[2].left.theta_u = 0.1 + 0.2;  // not exactly representable in short decimal
  const std::string text = emit_run_config(cfg);
  const auto back = parse_run_config_text(text);
  EXPECT_EQ(emit_run_config(back), text);
  EXPECT_EQ(back.parameters.pairs[2].left.theta_u, 0.1 + 0.2);
  EXPECT_EQ(back.model.constants.phi, 2.5);
  EXPECT_EQ(back.conditions, cfg.conditions);
}

TEST(Config, ParameterFileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cei_config_test";
  std::filesystem::create_directories(dir);
  ParameterSet p;
  p.incentive.lower[2] = -0.0031;
  std::ofstream(dir / "params.yaml") << emit_parameter_file(p);
  std::ofstream(dir / "run.yaml") << "parameters: params.yaml\nrepetitions: 1\n";
  const auto cfg = load_run_config(dir / "run.yaml");
  EXPECT_EQ(cfg.parameters.incentive.lower[2], -0.0031);
  EXPECT_EQ(cfg.model.incentive.lower[2], -0.0031);
  EXPECT_EQ(cfg.parameters.pairs.size(), 9u);
  std::filesystem::remove_all(dir);
}

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  const auto cfg = load_run_config(std::filesystem::path(CEI_SOURCE_DIR) / "configs" / "default.yaml");
  const RunConfig builtin;
  EXPECT_EQ(emit_run_config(cfg), emit_run_config(builtin));
}

TEST(Config, IngestSchema) {
  const auto dir = std::filesystem::temp_directory_path() / "cei_schema_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "s.yaml") << "source: lab\ndelimiter: ';'\ncolumns: {time: time_s}\nunits: {velocity_scale: "
                                   "0.2777777777777778}\n";
  const auto s = load_ingest_schema(dir / "s.yaml");
  EXPECT_EQ(s.source, "lab");
  EXPECT_EQ(s.delimiter, ';');
  EXPECT_EQ(s.columns.time, "time_s");
  EXPECT_NEAR(s.velocity_scale, 1 / 3.6, 1e-15);
  std::ofstream(dir / "bad.yaml") << "source: model\n";
  EXPECT_THROW(load_ingest_schema(dir / "bad.yaml"), ConfigError);
  std::filesystem::remove_all(dir);
}
