#pragma once

// Threshold calibration: noise-free response grids over (theta_l, theta_u),
// per-trial matching of observed velocity deviations against a grid, and a
// least-squares fit of the incentive slopes with per-participant intercepts.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cei/analysis.hpp"
#include "cei/engine.hpp"
#include "cei/log_io.hpp"
#include "cei/params.hpp"

namespace cei {

inline constexpr std::string_view kModelVersion = "cei-merge 1.0.0";

struct GridSpec {
  double upper_min = 0.3;
  double upper_max = 0.9;
  double lower_min = 0.01;
  double lower_max = 0.4;
  int resolution = 25;
  double probe_time = 1.0;  // s after tunnel exit

  double upper(int j) const { return upper_min + (upper_max - upper_min) * j / (resolution - 1); }
  double lower(int i) const { return lower_min + (lower_max - lower_min) * i / (resolution - 1); }
  double upper_step() const { return (upper_max - upper_min) / (resolution - 1); }
  double lower_step() const { return (lower_max - lower_min) / (resolution - 1); }

  void validate() const {
    if (resolution < 2) throw std::invalid_argument("grid.resolution must be >= 2");
    if (!(upper_min < upper_max) || !(lower_min < lower_max)) {
      throw std::invalid_argument("grid ranges must be increasing");
    }
    if (!(lower_min > 0.0) || !(upper_max < 1.0)) throw std::invalid_argument("grid ranges must lie in (0, 1)");
    if (!(probe_time > 0.0)) throw std::invalid_argument("grid.probe_time must be > 0");
  }
};

struct GridCell {
  int lower_index = 0;
  int upper_index = 0;
  double theta_l = 0.0;
  double theta_u = 0.0;
  bool valid = false;  // theta_l < theta_u; other cells are not simulated
  double deviation = std::numeric_limits<double>::quiet_NaN();
};

/// Responses of one CEI driver on `side` in `condition`, cells ordered
/// lower-index major.
struct GridResponse {
  Condition condition;
  Side side = Side::kLeft;
  GridSpec spec;
  std::vector<GridCell> cells;

  const GridCell& at(int lower_index, int upper_index) const {
    return cells.at(static_cast<std::size_t>(lower_index * spec.resolution + upper_index));
  }
};

/// Noise-free, incentive-free trial against a constant-velocity opponent;
/// returns the driver's signed velocity deviation `probe_time` after exit.
inline double probe_deviation(const Condition& condition, Side side, const DriverParams& thresholds,
                              const ModelConfig& config, double probe_time) {
  PairParams pair;
  (side == Side::kLeft ? pair.left : pair.right) = thresholds;
  TrialOptions options;
  options.mode = Mode::kNoiseFree;
  options.incentives_enabled = false;
  options.passive_side = opposite(side);
  options.stop_after_exit = probe_time;
  const TrialLog log = run_trial(condition, pair, 0, config, options);
  const auto dev = deviation_after_exit(log, side, config.track, probe_time);
  if (!dev) throw std::runtime_error("probe trial ended before the probe time (" + condition.label() + ")");
  return *dev;
}

inline GridResponse build_grid(const Condition& condition, const GridSpec& spec, const ModelConfig& config,
                               int workers = 1, Side side = Side::kLeft) {
  spec.validate();
  GridResponse grid{condition, side, spec, {}};
  const int n = spec.resolution;
  grid.cells.resize(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      GridCell& c = grid.cells[static_cast<std::size_t>(i * n + j)];
      c.lower_index = i;
      c.upper_index = j;
      c.theta_l = spec.lower(i);
      c.theta_u = spec.upper(j);
      c.valid = c.theta_l < c.theta_u;
    }
  }
  const auto deviations = parallel_map(grid.cells.size(), workers, [&](std::size_t k) {
    const GridCell& c = grid.cells[k];
    if (!c.valid) return std::numeric_limits<double>::quiet_NaN();
    return probe_deviation(condition, side, {c.theta_l, c.theta_u}, config, spec.probe_time);
  });
  for (std::size_t k = 0; k < deviations.size(); ++k) grid.cells[k].deviation = deviations[k];
  return grid;
}

// ---------------------------------------------------------------------------
// On-disk grid cache

inline std::filesystem::path grid_cache_dir() {
  if (const char* env = std::getenv("CEI_CACHE_DIR"); env && *env) return env;
  return ".cei-cache";
}

/// Hash of everything a grid depends on.
inline std::string grid_cache_key(const Condition& condition, Side side, const GridSpec& spec,
                                  const ModelConfig& config) {
  std::ostringstream s;
  const auto& c = config.constants;
  const auto& t = config.track;
  s << kModelVersion << '|' << condition.label() << '|' << to_string(side);
  for (double v : {spec.upper_min, spec.upper_max, spec.lower_min, spec.lower_max, spec.probe_time, c.horizon, c.dt,
                   c.memory_span, c.belief_frequency, c.tau, c.phi, c.alpha, c.comfortable_accel, c.a_max,
                   c.upper_replan_fraction, c.lower_replan_fraction, t.tunnel_length, t.approach_length,
                   t.follow_length, t.vehicle_length}) {
    s << '|' << format_double(v);
  }
  s << '|' << spec.resolution << '|' << static_cast<int>(config.variance_growth);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(s.str())));
  return buf;
}

inline void write_grid(std::ostream& os, const GridResponse& grid, const std::string& key) {
  os << "# cei-grid v1 key=" << key << " condition=" << grid.condition.label() << " side=" << to_string(grid.side)
     << " resolution=" << grid.spec.resolution << '\n';
  os << "lower_index,upper_index,theta_l,theta_u,valid,deviation\n";
  for (const auto& c : grid.cells) {
    os << c.lower_index << ',' << c.upper_index << ',' << format_double(c.theta_l) << ','
       << format_double(c.theta_u) << ',' << (c.valid ? 1 : 0) << ',' << format_double(c.deviation) << '\n';
  }
}

/// Reads a cached grid; nullopt when the file is absent, stale or malformed.
inline std::optional<GridResponse> read_grid(std::istream& is, const Condition& condition, Side side,
                                             const GridSpec& spec, const std::string& key) {
  std::string line;
  if (!std::getline(is, line) || line.find("key=" + key) == std::string::npos) return std::nullopt;
  if (!std::getline(is, line)) return std::nullopt;
  GridResponse grid{condition, side, spec, {}};
  try {
    while (std::getline(is, line)) {
      const auto f = split_view(trim(line));
      if (f.size() != 6) return std::nullopt;
      GridCell c;
      c.lower_index = std::stoi(std::string(f[0]));
      c.upper_index = std::stoi(std::string(f[1]));
      c.theta_l = parse_double(f[2]);
      c.theta_u = parse_double(f[3]);
      c.valid = f[4] == "1";
      c.deviation = parse_double(f[5]);
      grid.cells.push_back(c);
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (grid.cells.size() != static_cast<std::size_t>(spec.resolution * spec.resolution)) return std::nullopt;
  return grid;
}

inline GridResponse load_or_build_grid(const Condition& condition, const GridSpec& spec, const ModelConfig& config,
                                       int workers, const std::filesystem::path& cache_dir,
                                       bool* cache_hit = nullptr) {
  const std::string key = grid_cache_key(condition, Side::kLeft, spec, config);
  const auto path = cache_dir / ("grid_" + condition.label() + "_" + key + ".csv");
  if (std::ifstream is(path); is) {
    if (auto grid = read_grid(is, condition, Side::kLeft, spec, key)) {
      if (cache_hit) *cache_hit = true;
      return *grid;
    }
  }
  if (cache_hit) *cache_hit = false;
  GridResponse grid = build_grid(condition, spec, config, workers);
  std::filesystem::create_directories(cache_dir);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write grid cache " + tmp);
    write_grid(os, grid, key);
  }
  std::filesystem::rename(tmp, path);
  return grid;
}

// ---------------------------------------------------------------------------
// Matching

struct ThresholdMatch {
  int lower_index = 0;
  int upper_index = 0;
  double theta_l = 0.0;
  double theta_u = 0.0;
  double grid_deviation = 0.0;
  double error = 0.0;               // |grid - observed|
  double quantization_bound = 0.0;  // half the spacing of the grid responses around the observation
};

/// Cell whose response is closest to `observed`. Ties go to the largest
/// theta_u, then the largest theta_l.
inline ThresholdMatch match_trial(double observed, const GridResponse& grid) {
  const GridCell* best = nullptr;
  double best_err = std::numeric_limits<double>::infinity();
  double below = -std::numeric_limits<double>::infinity();
  double above = std::numeric_limits<double>::infinity();
  for (const auto& c : grid.cells) {
    if (!c.valid || std::isnan(c.deviation)) continue;
    if (c.deviation <= observed) below = std::max(below, c.deviation);
    if (c.deviation >= observed) above = std::min(above, c.deviation);
    const double err = std::abs(c.deviation - observed);
    const double tie = 1e-12 * std::max(1.0, best_err);
    if (!best || err < best_err - tie ||
        (std::abs(err - best_err) <= tie &&
         (c.theta_u > best->theta_u || (c.theta_u == best->theta_u && c.theta_l > best->theta_l)))) {
      best = &c;
      best_err = std::min(best_err, err);
    }
  }
  if (!best) throw std::runtime_error("match_trial: grid has no valid cells");
  ThresholdMatch m;
  m.lower_index = best->lower_index;
  m.upper_index = best->upper_index;
  m.theta_l = best->theta_l;
  m.theta_u = best->theta_u;
  m.grid_deviation = best->deviation;
  m.error = std::abs(best->deviation - observed);
  m.quantization_bound = std::isfinite(below) && std::isfinite(above) ? 0.5 * (above - below)
                                                                      : std::numeric_limits<double>::infinity();
  return m;
}

// ---------------------------------------------------------------------------
// Regression

struct TrialThreshold {
  std::string participant;
  double dp = 0.0;  // driver-perspective projected headway, m
  double dv = 0.0;  // driver-perspective relative velocity, m/s
  double theta_l = 0.0;
  double theta_u = 0.0;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearFit {
  std::array<double, 3> slopes{};  // dp, dv, dp*dv
  std::array<double, 3> standard_errors{};
  std::vector<double> intercepts;  // one per participant
  double residual_sd = 0.0;
};

struct ThresholdFit {
  std::vector<std::string> participants;  // sorted
  LinearFit upper;
  LinearFit lower;
  int observations = 0;

  IncentiveCoefficients lambda() const { return {upper.slopes, lower.slopes}; }
  DriverParams intercept(const std::string& participant) const {
    const auto it = std::find(participants.begin(), participants.end(), participant);
    if (it == participants.end()) throw std::out_of_range("unknown participant " + participant);
    const auto i = static_cast<std::size_t>(it - participants.begin());
    return {lower.intercepts[i], upper.intercepts[i]};
  }
};

/// Pooled slopes on (dp, dv, dp*dv) with one dummy intercept per participant,
/// by ordinary least squares. Standard errors from s^2 (X'X)^-1.
inline ThresholdFit fit_thresholds(const std::vector<TrialThreshold>& data) {
  ThresholdFit fit;
  for (const auto& d : data) fit.participants.push_back(d.participant);
  std::sort(fit.participants.begin(), fit.participants.end());
  fit.participants.erase(std::unique(fit.participants.begin(), fit.participants.end()), fit.participants.end());
  std::vector<std::pair<double, double>> conditions;
  for (const auto& d : data) conditions.emplace_back(d.dp, d.dv);
  std::sort(conditions.begin(), conditions.end());
  conditions.erase(std::unique(conditions.begin(), conditions.end()), conditions.end());
  if (fit.participants.size() < 2) throw std::invalid_argument("fit_thresholds: need at least 2 participants");
  if (conditions.size() < 2) throw RankDeficientError("fit_thresholds: need at least 2 distinct conditions");

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto p = static_cast<Eigen::Index>(fit.participants.size());
  const Eigen::Index cols = p + 3;
  if (n <= cols) throw RankDeficientError("fit_thresholds: not enough observations");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, cols);
  Eigen::VectorXd yu(n), yl(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& d = data[static_cast<std::size_t>(r)];
    const auto it = std::lower_bound(fit.participants.begin(), fit.participants.end(), d.participant);
    x(r, it - fit.participants.begin()) = 1.0;
    x(r, p) = d.dp;
    x(r, p + 1) = d.dv;
    x(r, p + 2) = d.dp * d.dv;
    yu(r) = d.theta_u;
    yl(r) = d.theta_l;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < cols) {
    throw RankDeficientError("fit_thresholds: design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                             " of " + std::to_string(cols) + ")");
  }
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  auto solve = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - x * beta;
    const double s2 = resid.squaredNorm() / static_cast<double>(n - cols);
    LinearFit f;
    for (Eigen::Index i = 0; i < p; ++i) f.intercepts.push_back(beta(i));
    for (int k = 0; k < 3; ++k) {
      f.slopes[static_cast<std::size_t>(k)] = beta(p + k);
      f.standard_errors[static_cast<std::size_t>(k)] = std::sqrt(s2 * xtx_inv(p + k, p + k));
    }
    f.residual_sd = std::sqrt(s2);
    return f;
  };
  fit.upper = solve(yu);
  fit.lower = solve(yl);
  fit.observations = static_cast<int>(n);
  return fit;
}

// ---------------------------------------------------------------------------
// End-to-end

inline std::string participant_id(int pair, Side side) {
  return "p" + std::to_string(pair) + "_" + std::string(to_string(side));
}

struct MatchedTrial {
  std::string participant;
  int pair = 0;
  Side side = Side::kLeft;
  Condition own_condition;  // from this driver's perspective
  int repetition = 0;
  double observed_deviation = 0.0;
  ThresholdMatch match;
};

struct CalibrationResult {
  std::vector<MatchedTrial> trials;
  ThresholdFit fit;
  std::vector<PairParams> pair_params;  // pairs with both drivers present
  int skipped = 0;                      // trials without a deviation at the probe time
};

/// Grids keyed by driver-perspective condition, CEI driver on the left.
using GridSet = std::map<Condition, GridResponse>;

/// Conditions (driver perspective) needed to calibrate `logs`.
inline std::vector<Condition> conditions_needed(const std::vector<TrialLog>& logs) {
  std::vector<Condition> out;
  for (const auto& log : logs) {
    out.push_back(log.condition);
    out.push_back(log.condition.mirrored());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Match both drivers of every log, then fit. A right driver in condition c
/// is matched on the grid for c mirrored.
inline CalibrationResult calibrate(const std::vector<TrialLog>& logs, const GridSet& grids, const Track& track) {
  CalibrationResult result;
  std::vector<TrialThreshold> data;
  for (const auto& log : logs) {
    for (Side side : {Side::kLeft, Side::kRight}) {
      const Condition own = side == Side::kLeft ? log.condition : log.condition.mirrored();
      const auto it = grids.find(own);
      if (it == grids.end()) throw std::runtime_error("no grid for condition " + own.label());
      const auto dev = deviation_after_exit(log, side, track, it->second.spec.probe_time);
      if (!dev) {
        ++result.skipped;
        continue;
      }
      MatchedTrial t{participant_id(log.pair, side), log.pair, side, own, log.repetition, *dev,
                     match_trial(*dev, it->second)};
      data.push_back({t.participant, own.projected_headway(), own.relative_velocity(), t.match.theta_l,
                      t.match.theta_u});
      result.trials.push_back(std::move(t));
    }
  }
  result.fit = fit_thresholds(data);
  std::map<int, PairParams> pairs;
  std::map<int, int> sides_seen;
  for (const auto& name : result.fit.participants) {
    const auto us = name.find('_');
    const int pair = std::stoi(name.substr(1, us - 1));
    const bool left = name.substr(us + 1) == "left";
    auto& pp = pairs[pair];
    pp.pair = pair;
    (left ? pp.left : pp.right) = result.fit.intercept(name);
    sides_seen[pair] |= left ? 1 : 2;
  }
  for (const auto& [pair, pp] : pairs) {
    if (sides_seen[pair] == 3) result.pair_params.push_back(pp);
  }
  return result;
}

inline void write_matches_csv(std::ostream& os, const std::vector<MatchedTrial>& trials) {
  write_csv_header(os, "calibration_matches",
                   "participant,pair,side,condition,repetition,observed_deviation,theta_l,theta_u,"
                   "grid_deviation,error,quantization_bound");
  for (const auto& t : trials) {
    os << t.participant << ',' << t.pair << ',' << to_string(t.side) << ',' << t.own_condition.label() << ','
       << t.repetition << ',' << format_double(t.observed_deviation) << ',' << format_double(t.match.theta_l)
       << ',' << format_double(t.match.theta_u) << ',' << format_double(t.match.grid_deviation) << ','
       << format_double(t.match.error) << ',' << format_double(t.match.quantization_bound) << '\n';
  }
}

}  // namespace cei
