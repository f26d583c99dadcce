#pragma once

// YAML run configuration, driver parameter files and ingest schemas. See
// docs/formats.md for the grammar of each document.

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cei/analysis.hpp"
#include "cei/calibration.hpp"
#include "cei/engine.hpp"
#include "cei/ingest.hpp"
#include "cei/params.hpp"
#include "cei/scenario.hpp"

namespace cei {

/// Invalid configuration; `diagnostics` holds one "field: problem" per issue.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics)
      : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string s;
    for (const auto& line : d) s += (s.empty() ? "" : "\n") + line;
    return s;
  }
  std::vector<std::string> diagnostics_;
};

struct ParameterSet {
  IncentiveCoefficients incentive;
  std::vector<PairParams> pairs = fitted_pair_params();
};

struct RunConfig {
  ModelConfig model;
  bool incentives = true;
  std::vector<Condition> conditions = default_conditions();
  ParameterSet parameters;
  int repetitions = 10;
  std::uint64_t base_seed = 1;
  Mode mode = Mode::kStochastic;
  int workers = 1;
  std::string output = "cei-out";
  AnalysisOptions analysis;
  GridSpec grid;
};

namespace detail {

/// Reads typed values out of a mapping, recording problems instead of throwing.
class NodeReader {
 public:
  NodeReader(const YAML::Node& node, std::string prefix, std::vector<std::string>& errors)
      : node_(node), prefix_(std::move(prefix)), errors_(errors) {
    if (node_ && !node_.IsMap()) errors_.push_back(path("") + "expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }
  YAML::Node get(const std::string& key) const { return has(key) ? node_[key] : YAML::Node(); }
  std::string path(const std::string& key) const {
    const std::string p = prefix_.empty() ? key : (key.empty() ? prefix_ : prefix_ + "." + key);
    return p.empty() ? "" : p + ": ";
  }
  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      errors_.push_back(path(key) + "expected " + type_name<T>());
    }
  }

  void positive(const std::string& key, double& out) {
    read(key, out);
    if (has(key) && !(out > 0.0)) errors_.push_back(path(key) + "must be > 0");
  }

  template <class F>
  void custom(const std::string& key, F&& parse) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      parse(node_[key]);
    } catch (const UnknownConditionError&) {
      throw;
    } catch (const std::exception& e) {
      errors_.push_back(path(key) + e.what());
    }
  }

  void reject_unknown() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) errors_.push_back(path(key) + "unknown key");
    }
  }

 private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else return "a string";
  }

  YAML::Node node_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline std::array<double, 3> read_triple(const YAML::Node& n) {
  if (!n.IsSequence() || n.size() != 3) throw std::invalid_argument("expected a list of 3 numbers");
  return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
}

inline std::pair<double, double> read_range(const YAML::Node& n) {
  if (!n.IsSequence() || n.size() != 2) throw std::invalid_argument("expected [min, max]");
  return {n[0].as<double>(), n[1].as<double>()};
}

inline DriverParams read_driver(const YAML::Node& n, const std::string& prefix, std::vector<std::string>& errors) {
  DriverParams d{-1.0, -1.0};
  NodeReader r(n, prefix, errors);
  r.read("theta_l", d.theta_l);
  r.read("theta_u", d.theta_u);
  r.reject_unknown();
  if (!r.has("theta_l") || !r.has("theta_u")) {
    errors.push_back(prefix + ": theta_l and theta_u are required");
  } else if (!(d.theta_l > 0.0 && d.theta_l < d.theta_u && d.theta_u < 1.0)) {
    errors.push_back(prefix + ": need 0 < theta_l < theta_u < 1");
  }
  return d;
}

inline void read_parameters(const YAML::Node& node, ParameterSet& out, const std::string& prefix,
                            std::vector<std::string>& errors) {
  NodeReader r(node, prefix, errors);
  std::string format;
  r.read("format", format);
  if (r.has("format") && format != "cei-params/1") errors.push_back(r.path("format") + "expected cei-params/1");
  r.custom("incentive", [&](const YAML::Node& n) {
    NodeReader ir(n, r.name("incentive"), errors);
    ir.custom("upper", [&](const YAML::Node& v) { out.incentive.upper = read_triple(v); });
    ir.custom("lower", [&](const YAML::Node& v) { out.incentive.lower = read_triple(v); });
    ir.reject_unknown();
  });
  r.custom("pairs", [&](const YAML::Node& n) {
    if (!n.IsSequence() || n.size() == 0) throw std::invalid_argument("expected a non-empty list");
    out.pairs.clear();
    std::set<int> ids;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string p = r.name("pairs") + "[" + std::to_string(i) + "]";
      NodeReader pr(n[i], p, errors);
      PairParams pp;
      pr.read("pair", pp.pair);
      if (!pr.has("pair") || pp.pair < 1) errors.push_back(p + ": pair must be a positive integer");
      if (!ids.insert(pp.pair).second) errors.push_back(p + ": duplicate pair " + std::to_string(pp.pair));
      pr.custom("left", [&](const YAML::Node& v) { pp.left = read_driver(v, p + ".left", errors); });
      pr.custom("right", [&](const YAML::Node& v) { pp.right = read_driver(v, p + ".right", errors); });
      if (!pr.has("left") || !pr.has("right")) errors.push_back(p + ": left and right are required");
      pr.reject_unknown();
      out.pairs.push_back(pp);
    }
  });
  r.reject_unknown();
}

inline YAML::Node load_yaml_file(const std::filesystem::path& path) {
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError({path.string() + ": cannot open file"});
  } catch (const YAML::Exception& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
}

}  // namespace detail

inline ParameterSet load_parameter_file(const std::filesystem::path& path) {
  std::vector<std::string> errors;
  ParameterSet out;
  detail::read_parameters(detail::load_yaml_file(path), out, "", errors);
  if (!errors.empty()) throw ConfigError(errors);
  return out;
}

/// Parses a run configuration. Relative `parameters:` paths resolve against `base_dir`.
inline RunConfig parse_run_config(const YAML::Node& root, const std::filesystem::path& base_dir = {}) {
  std::vector<std::string> errors;
  RunConfig cfg;
  detail::NodeReader r(root, "", errors);

  r.custom("track", [&](const YAML::Node& n) {
    detail::NodeReader t(n, "track", errors);
    t.positive("tunnel_length", cfg.model.track.tunnel_length);
    t.positive("approach_length", cfg.model.track.approach_length);
    t.positive("follow_length", cfg.model.track.follow_length);
    t.positive("vehicle_length", cfg.model.track.vehicle_length);
    t.positive("vehicle_width", cfg.model.track.vehicle_width);
    t.reject_unknown();
  });

  r.custom("model", [&](const YAML::Node& n) {
    auto& c = cfg.model.constants;
    detail::NodeReader m(n, "model", errors);
    m.read("horizon", c.horizon);
    m.read("dt", c.dt);
    m.read("memory_span", c.memory_span);
    m.read("belief_frequency", c.belief_frequency);
    m.read("execution_noise_sd", c.sigma_n);
    m.read("perception_noise", c.beta);
    m.read("saturation_time", c.tau);
    m.read("phi", c.phi);
    m.read("alpha", c.alpha);
    m.read("comfortable_accel", c.comfortable_accel);
    m.read("a_max", c.a_max);
    m.read("timeout", c.timeout);
    m.read("incentives", cfg.incentives);
    m.custom("incentive_delta", [&](const YAML::Node& v) {
      const auto s = v.as<std::string>();
      if (s == "instantaneous") cfg.model.incentive_delta = IncentiveDelta::kInstantaneous;
      else if (s == "projected") cfg.model.incentive_delta = IncentiveDelta::kProjected;
      else throw std::invalid_argument("expected instantaneous|projected");
    });
    m.custom("execution_noise_model", [&](const YAML::Node& v) {
      const auto s = v.as<std::string>();
      if (s == "additive") cfg.model.execution_noise = ExecutionNoiseModel::kAdditive;
      else if (s == "multiplicative") cfg.model.execution_noise = ExecutionNoiseModel::kMultiplicative;
      else throw std::invalid_argument("expected additive|multiplicative");
    });
    m.custom("variance_growth", [&](const YAML::Node& v) {
      const auto s = v.as<std::string>();
      if (s == "as_printed") cfg.model.variance_growth = VarianceGrowth::kAsPrinted;
      else if (s == "squared_kinematic") cfg.model.variance_growth = VarianceGrowth::kSquaredKinematic;
      else throw std::invalid_argument("expected as_printed|squared_kinematic");
    });
    m.reject_unknown();
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      errors.push_back(e.what());
    }
  });

  r.custom("conditions", [&](const YAML::Node& n) {
    if (!n.IsSequence() || n.size() == 0) throw std::invalid_argument("expected a non-empty list of labels");
    cfg.conditions.clear();
    for (const auto& item : n) cfg.conditions.push_back(parse_condition(item.as<std::string>()));
  });

  r.custom("parameters", [&](const YAML::Node& n) {
    std::filesystem::path p = n.as<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    detail::read_parameters(detail::load_yaml_file(p), cfg.parameters, p.string(), errors);
  });
  if (r.has("pairs") || r.has("incentive")) {
    if (r.has("parameters")) errors.push_back("parameters: give either a parameter file or inline pairs, not both");
    YAML::Node inline_params;
    if (r.has("pairs")) inline_params["pairs"] = r.get("pairs");
    if (r.has("incentive")) inline_params["incentive"] = r.get("incentive");
    detail::read_parameters(inline_params, cfg.parameters, "", errors);
    r.custom("pairs", [](const YAML::Node&) {});
    r.custom("incentive", [](const YAML::Node&) {});
  }
  cfg.model.incentive = cfg.parameters.incentive;

  r.read("repetitions", cfg.repetitions);
  if (cfg.repetitions < 1) errors.push_back("repetitions: must be >= 1");
  r.read("base_seed", cfg.base_seed);
  r.custom("mode", [&](const YAML::Node& v) { cfg.mode = parse_mode(v.as<std::string>()); });
  r.read("workers", cfg.workers);
  if (cfg.workers < 1) errors.push_back("workers: must be >= 1");
  r.read("output", cfg.output);

  r.custom("analysis", [&](const YAML::Node& n) {
    detail::NodeReader a(n, "analysis", errors);
    a.custom("gap", [&](const YAML::Node& v) {
      const auto s = v.as<std::string>();
      if (s == "clearance") cfg.analysis.gap = GapDefinition::kClearance;
      else if (s == "front_to_front") cfg.analysis.gap = GapDefinition::kFrontToFront;
      else throw std::invalid_argument("expected clearance|front_to_front");
    });
    a.reject_unknown();
  });

  r.custom("calibration", [&](const YAML::Node& n) {
    detail::NodeReader g(n, "calibration", errors);
    g.custom("upper_range", [&](const YAML::Node& v) {
      std::tie(cfg.grid.upper_min, cfg.grid.upper_max) = detail::read_range(v);
    });
    g.custom("lower_range", [&](const YAML::Node& v) {
      std::tie(cfg.grid.lower_min, cfg.grid.lower_max) = detail::read_range(v);
    });
    g.read("resolution", cfg.grid.resolution);
    g.read("probe_time", cfg.grid.probe_time);
    g.reject_unknown();
    try {
      cfg.grid.validate();
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("calibration: ") + e.what());
    }
  });

  r.reject_unknown();
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(detail::load_yaml_file(path), path.parent_path());
}

inline RunConfig parse_run_config_text(const std::string& text) {
  try {
    return parse_run_config(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError({std::string("config: ") + e.what()});
  }
}

namespace detail {

inline void emit_parameters(YAML::Emitter& e, const ParameterSet& p) {
  auto triple = [&](const std::array<double, 3>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v) e << format_double(x);
    e << YAML::EndSeq;
  };
  auto driver = [&](const DriverParams& d) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "theta_l" << YAML::Value << format_double(d.theta_l)
      << YAML::Key << "theta_u" << YAML::Value << format_double(d.theta_u) << YAML::EndMap;
  };
  e << YAML::Key << "incentive" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "upper" << YAML::Value;
  triple(p.incentive.upper);
  e << YAML::Key << "lower" << YAML::Value;
  triple(p.incentive.lower);
  e << YAML::EndMap;
  e << YAML::Key << "pairs" << YAML::Value << YAML::BeginSeq;
  for (const auto& pp : p.pairs) {
    e << YAML::BeginMap << YAML::Key << "pair" << YAML::Value << pp.pair;
    e << YAML::Key << "left" << YAML::Value;
    driver(pp.left);
    e << YAML::Key << "right" << YAML::Value;
    driver(pp.right);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
}

}  // namespace detail

/// Parameter file in the format read by load_parameter_file.
inline std::string emit_parameter_file(const ParameterSet& p) {
  YAML::Emitter e;
  e << YAML::BeginMap << YAML::Key << "format" << YAML::Value << "cei-params/1";
  detail::emit_parameters(e, p);
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

/// Self-contained effective configuration (parameters inlined); parsing it
/// back yields the same RunConfig.
inline std::string emit_run_config(const RunConfig& cfg) {
  const auto& c = cfg.model.constants;
  const auto& t = cfg.model.track;
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "track" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tunnel_length" << YAML::Value << format_double(t.tunnel_length);
  e << YAML::Key << "approach_length" << YAML::Value << format_double(t.approach_length);
  e << YAML::Key << "follow_length" << YAML::Value << format_double(t.follow_length);
  e << YAML::Key << "vehicle_length" << YAML::Value << format_double(t.vehicle_length);
  e << YAML::Key << "vehicle_width" << YAML::Value << format_double(t.vehicle_width);
  e << YAML::EndMap;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "horizon" << YAML::Value << format_double(c.horizon);
  e << YAML::Key << "dt" << YAML::Value << format_double(c.dt);
  e << YAML::Key << "memory_span" << YAML::Value << format_double(c.memory_span);
  e << YAML::Key << "belief_frequency" << YAML::Value << format_double(c.belief_frequency);
  e << YAML::Key << "execution_noise_sd" << YAML::Value << format_double(c.sigma_n);
  e << YAML::Key << "perception_noise" << YAML::Value << format_double(c.beta);
  e << YAML::Key << "saturation_time" << YAML::Value << format_double(c.tau);
  e << YAML::Key << "phi" << YAML::Value << format_double(c.phi);
  e << YAML::Key << "alpha" << YAML::Value << format_double(c.alpha);
  e << YAML::Key << "comfortable_accel" << YAML::Value << format_double(c.comfortable_accel);
  e << YAML::Key << "a_max" << YAML::Value << format_double(c.a_max);
  e << YAML::Key << "timeout" << YAML::Value << format_double(c.timeout);
  e << YAML::Key << "incentives" << YAML::Value << cfg.incentives;
  e << YAML::Key << "incentive_delta" << YAML::Value
    << (cfg.model.incentive_delta == IncentiveDelta::kProjected ? "projected" : "instantaneous");
  e << YAML::Key << "execution_noise_model" << YAML::Value
    << (cfg.model.execution_noise == ExecutionNoiseModel::kMultiplicative ? "multiplicative" : "additive");
  e << YAML::Key << "variance_growth" << YAML::Value
    << (cfg.model.variance_growth == VarianceGrowth::kSquaredKinematic ? "squared_kinematic" : "as_printed");
  e << YAML::EndMap;
  e << YAML::Key << "conditions" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& cond : cfg.conditions) e << cond.label();
  e << YAML::EndSeq;
  detail::emit_parameters(e, cfg.parameters);
  e << YAML::Key << "repetitions" << YAML::Value << cfg.repetitions;
  e << YAML::Key << "base_seed" << YAML::Value << cfg.base_seed;
  e << YAML::Key << "mode" << YAML::Value << std::string(to_string(cfg.mode));
  e << YAML::Key << "workers" << YAML::Value << cfg.workers;
  e << YAML::Key << "output" << YAML::Value << cfg.output;
  e << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap << YAML::Key << "gap" << YAML::Value
    << (cfg.analysis.gap == GapDefinition::kFrontToFront ? "front_to_front" : "clearance") << YAML::EndMap;
  e << YAML::Key << "calibration" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "upper_range" << YAML::Value << YAML::Flow << YAML::BeginSeq
    << format_double(cfg.grid.upper_min) << format_double(cfg.grid.upper_max) << YAML::EndSeq;
  e << YAML::Key << "lower_range" << YAML::Value << YAML::Flow << YAML::BeginSeq
    << format_double(cfg.grid.lower_min) << format_double(cfg.grid.lower_max) << YAML::EndSeq;
  e << YAML::Key << "resolution" << YAML::Value << cfg.grid.resolution;
  e << YAML::Key << "probe_time" << YAML::Value << format_double(cfg.grid.probe_time);
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

inline IngestSchema load_ingest_schema(const std::filesystem::path& path) {
  std::vector<std::string> errors;
  IngestSchema s;
  detail::NodeReader r(detail::load_yaml_file(path), "", errors);
  r.read("source", s.source);
  if (s.source == "model") errors.push_back("source: 'model' is reserved for simulated logs");
  r.custom("delimiter", [&](const YAML::Node& v) {
    const auto d = v.as<std::string>();
    if (d.size() != 1) throw std::invalid_argument("expected a single character");
    s.delimiter = d[0];
  });
  r.read("extension", s.extension);
  r.custom("columns", [&](const YAML::Node& n) {
    detail::NodeReader c(n, "columns", errors);
    c.read("time", s.columns.time);
    c.read("left_position", s.columns.left_position);
    c.read("left_velocity", s.columns.left_velocity);
    c.read("right_position", s.columns.right_position);
    c.read("right_velocity", s.columns.right_velocity);
    c.read("pair", s.columns.pair);
    c.read("condition", s.columns.condition);
    c.read("repetition", s.columns.repetition);
    c.reject_unknown();
  });
  r.custom("units", [&](const YAML::Node& n) {
    detail::NodeReader u(n, "units", errors);
    u.positive("time_scale", s.time_scale);
    u.positive("position_scale", s.position_scale);
    u.positive("velocity_scale", s.velocity_scale);
    u.read("position_offset", s.position_offset);
    u.reject_unknown();
  });
  r.custom("checks", [&](const YAML::Node& n) {
    detail::NodeReader c(n, "checks", errors);
    c.positive("time_tolerance", s.time_tolerance);
    c.positive("unit_tolerance", s.unit_tolerance);
    c.reject_unknown();
  });
  r.reject_unknown();
  if (!errors.empty()) throw ConfigError(errors);
  return s;
}

}  // namespace cei
