#pragma once

// Trial metrics (velocity deviations, gap and order at the merge point,
// conflict resolution time) and their per-pair / per-condition aggregates.
// Everything here is a pure function of a TrialLog, so model and ingested
// human logs go through identical code.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "cei/engine.hpp"
#include "cei/log_io.hpp"
#include "cei/scenario.hpp"

namespace cei {

inline constexpr int kCsvSchemaVersion = 1;

enum class GapDefinition { kClearance, kFrontToFront };

struct AnalysisOptions {
  GapDefinition gap = GapDefinition::kClearance;
};

/// Index of the first step at which both fronts are past the tunnel.
inline std::optional<std::size_t> tunnel_exit_index(const TrialLog& log, const Track& track) {
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    if (s.left.front_position >= track.tunnel_length && s.right.front_position >= track.tunnel_length) return k;
  }
  return std::nullopt;
}

/// Interpolated instant at which `side`'s front first reaches `position`,
/// with the step index that brackets it from above.
struct Crossing {
  double time = 0.0;
  std::size_t step = 0;
  double fraction = 0.0;  // position of the instant inside [step-1, step]
};

inline std::optional<Crossing> first_crossing(const TrialLog& log, Side side, double position) {
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const double p = log.steps[k].vehicle(side).front_position;
    if (p < position) continue;
    if (k == 0) return Crossing{log.steps[0].t, 0, 1.0};
    const double p0 = log.steps[k - 1].vehicle(side).front_position;
    const double frac = p > p0 ? (position - p0) / (p - p0) : 1.0;
    const double t0 = log.steps[k - 1].t;
    return Crossing{t0 + frac * (log.steps[k].t - t0), k, frac};
  }
  return std::nullopt;
}

/// The first merge-point crossing of either vehicle. Gap and order are both
/// read from this one instant.
struct MergeCrossing {
  double time = 0.0;
  Side leader = Side::kLeft;
  double leader_front = 0.0;
  double follower_front = 0.0;
};

inline std::optional<MergeCrossing> merge_crossing(const TrialLog& log, const Track& track) {
  const double merge = track.merge_point();
  const auto left = first_crossing(log, Side::kLeft, merge);
  const auto right = first_crossing(log, Side::kRight, merge);
  if (!left && !right) return std::nullopt;
  // Exact ties go to the left vehicle; the gap is then -L and the trial has collided anyway.
  const Side leader = !right || (left && left->time <= right->time) ? Side::kLeft : Side::kRight;
  const Crossing& c = leader == Side::kLeft ? *left : *right;
  auto front_at = [&](Side side) {
    const double p1 = log.steps[c.step].vehicle(side).front_position;
    if (c.step == 0) return p1;
    const double p0 = log.steps[c.step - 1].vehicle(side).front_position;
    return p0 + c.fraction * (p1 - p0);
  };
  return MergeCrossing{c.time, leader, front_at(leader), front_at(opposite(leader))};
}

inline std::optional<double> gap_at_merge(const TrialLog& log, const Track& track,
                                          GapDefinition definition = GapDefinition::kClearance) {
  const auto c = merge_crossing(log, track);
  if (!c) return std::nullopt;
  const double front_to_front = c->leader_front - c->follower_front;
  return definition == GapDefinition::kClearance ? front_to_front - track.vehicle_length : front_to_front;
}

inline std::optional<Side> merge_order(const TrialLog& log, const Track& track) {
  const auto c = merge_crossing(log, track);
  if (!c) return std::nullopt;
  return c->leader;
}

struct DeviationMetrics {
  double max_dev = 0.0;
  double min_dev = 0.0;
  double max_abs_dev = 0.0;
};

/// Deviations from the driver's initial velocity, from tunnel exit onward.
inline DeviationMetrics velocity_deviation_metrics(const TrialLog& log, Side side, const Track& track) {
  DeviationMetrics out;
  const auto exit = tunnel_exit_index(log, track);
  if (!exit) return out;
  const double v0 = log.steps.front().vehicle(side).velocity;
  out.max_dev = -std::numeric_limits<double>::infinity();
  out.min_dev = std::numeric_limits<double>::infinity();
  for (std::size_t k = *exit; k < log.steps.size(); ++k) {
    const double d = log.steps[k].vehicle(side).velocity - v0;
    out.max_dev = std::max(out.max_dev, d);
    out.min_dev = std::min(out.min_dev, d);
  }
  out.max_abs_dev = std::max(std::abs(out.max_dev), std::abs(out.min_dev));
  return out;
}

/// Signed velocity deviation `offset` seconds after tunnel exit (linear interpolation).
inline std::optional<double> deviation_after_exit(const TrialLog& log, Side side, const Track& track,
                                                  double offset) {
  const auto exit = tunnel_exit_index(log, track);
  if (!exit) return std::nullopt;
  const double v0 = log.steps.front().vehicle(side).velocity;
  const double target = log.steps[*exit].t + offset;
  for (std::size_t k = *exit; k < log.steps.size(); ++k) {
    const double t = log.steps[k].t;
    if (std::abs(t - target) <= 1e-9) return log.steps[k].vehicle(side).velocity - v0;
    if (t > target) {
      if (k == *exit) return std::nullopt;
      const auto& a = log.steps[k - 1];
      const double w = (target - a.t) / (t - a.t);
      const double v = a.vehicle(side).velocity + w * (log.steps[k].vehicle(side).velocity - a.vehicle(side).velocity);
      return v - v0;
    }
  }
  return std::nullopt;
}

/// Time after tunnel exit of the last change in the merge order predicted by
/// constant-velocity extrapolation, looking only at steps before the first
/// crossing. 0 when the predicted order never changes.
inline std::optional<double> conflict_resolution_time(const TrialLog& log, const Track& track) {
  const auto exit = tunnel_exit_index(log, track);
  if (!exit) return std::nullopt;
  const double merge = track.merge_point();
  auto arrival = [&](const VehicleState& v) {
    return v.velocity > 0.0 ? (merge - v.front_position) / v.velocity : std::numeric_limits<double>::infinity();
  };
  std::optional<Side> order;
  double last_change = log.steps[*exit].t;
  for (std::size_t k = *exit; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    if (s.left.front_position >= merge || s.right.front_position >= merge) break;
    const double tl = arrival(s.left);
    const double tr = arrival(s.right);
    if (tl == tr) continue;
    const Side now = tl < tr ? Side::kLeft : Side::kRight;
    if (order && *order != now) last_change = s.t;
    order = now;
  }
  return last_change - log.steps[*exit].t;
}

struct TrialMetrics {
  std::string source;
  int pair = 0;
  Condition condition;
  int repetition = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kCompleted;
  DeviationMetrics left;
  DeviationMetrics right;
  std::optional<double> gap;
  std::optional<Side> order;
  std::optional<double> crt;

  bool collided() const { return outcome == Outcome::kCollision; }
  const DeviationMetrics& deviation(Side s) const { return s == Side::kLeft ? left : right; }
};

inline TrialMetrics compute_metrics(const TrialLog& log, const Track& track, const AnalysisOptions& options = {}) {
  TrialMetrics m;
  m.source = log.source;
  m.pair = log.pair;
  m.condition = log.condition;
  m.repetition = log.repetition;
  m.seed = log.seed;
  m.outcome = log.outcome;
  m.left = velocity_deviation_metrics(log, Side::kLeft, track);
  m.right = velocity_deviation_metrics(log, Side::kRight, track);
  m.gap = gap_at_merge(log, track, options.gap);
  m.order = merge_order(log, track);
  m.crt = conflict_resolution_time(log, track);
  return m;
}

// ---------------------------------------------------------------------------
// Statistics helpers

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Linear-interpolation quantile (the common "type 7" definition).
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct ProportionInterval {
  double low = 0.0;
  double high = 1.0;
};

inline ProportionInterval wilson_interval(int successes, int n, double z = 1.959963984540054) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

// ---------------------------------------------------------------------------
// Aggregates. Collision trials count towards n_trials and n_collisions only.

struct AggregateRow {
  std::string source;
  int pair = 0;
  Condition condition;
  int n_trials = 0;
  int n_collisions = 0;
  int n_included = 0;
  std::array<double, 2> mean_max_abs_dev{};  // indexed by side (left, right)
  std::array<double, 2> mean_max_dev{};
  std::array<double, 2> mean_min_dev{};
  int n_gap = 0;
  double mean_gap = std::numeric_limits<double>::quiet_NaN();
  int n_order = 0;
  int n_left_first = 0;
  double p_left_first = std::numeric_limits<double>::quiet_NaN();
  int n_crt = 0;
  double mean_crt = std::numeric_limits<double>::quiet_NaN();
};

inline std::size_t side_index(Side s) { return s == Side::kLeft ? 0 : 1; }

inline std::vector<AggregateRow> aggregate(const std::vector<TrialMetrics>& trials) {
  using Key = std::tuple<std::string, int, Condition>;
  std::map<Key, std::vector<const TrialMetrics*>> groups;
  for (const auto& m : trials) groups[{m.source, m.pair, m.condition}].push_back(&m);

  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row;
    std::tie(row.source, row.pair, row.condition) = key;
    std::array<std::vector<double>, 2> abs_dev, max_dev, min_dev;
    std::vector<double> gaps, crts;
    for (const TrialMetrics* m : members) {
      ++row.n_trials;
      if (m->collided()) {
        ++row.n_collisions;
        continue;
      }
      ++row.n_included;
      for (Side s : {Side::kLeft, Side::kRight}) {
        abs_dev[side_index(s)].push_back(m->deviation(s).max_abs_dev);
        max_dev[side_index(s)].push_back(m->deviation(s).max_dev);
        min_dev[side_index(s)].push_back(m->deviation(s).min_dev);
      }
      if (m->gap) gaps.push_back(*m->gap);
      if (m->crt) crts.push_back(*m->crt);
      if (m->order) {
        ++row.n_order;
        if (*m->order == Side::kLeft) ++row.n_left_first;
      }
    }
    for (std::size_t i = 0; i < 2; ++i) {
      row.mean_max_abs_dev[i] = mean_of(abs_dev[i]);
      row.mean_max_dev[i] = mean_of(max_dev[i]);
      row.mean_min_dev[i] = mean_of(min_dev[i]);
    }
    row.n_gap = static_cast<int>(gaps.size());
    row.mean_gap = mean_of(gaps);
    row.n_crt = static_cast<int>(crts.size());
    row.mean_crt = mean_of(crts);
    if (row.n_order > 0) row.p_left_first = static_cast<double>(row.n_left_first) / row.n_order;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV output. Every file starts with "# cei-csv <name> v<version>".

inline void write_csv_header(std::ostream& os, std::string_view name, std::string_view columns) {
  os << "# cei-csv " << name << " v" << kCsvSchemaVersion << '\n' << columns << '\n';
}

inline std::string csv_number(double x) { return std::isnan(x) ? std::string() : format_double(x); }

inline void write_trial_metrics_csv(std::ostream& os, const std::vector<TrialMetrics>& trials) {
  write_csv_header(os, "trial_metrics", "source,pair,condition,repetition,seed,outcome,side,metric,value");
  for (const auto& m : trials) {
    const std::string prefix = m.source + "," + std::to_string(m.pair) + "," + m.condition.label() + "," +
                               std::to_string(m.repetition) + "," + std::to_string(m.seed) + "," +
                               std::string(to_string(m.outcome)) + ",";
    for (Side s : {Side::kLeft, Side::kRight}) {
      const auto& d = m.deviation(s);
      const std::string side(to_string(s));
      os << prefix << side << ",max_abs_dev," << format_double(d.max_abs_dev) << '\n';
      os << prefix << side << ",max_dev," << format_double(d.max_dev) << '\n';
      os << prefix << side << ",min_dev," << format_double(d.min_dev) << '\n';
    }
    if (m.gap) os << prefix << "joint,gap," << format_double(*m.gap) << '\n';
    if (m.order) os << prefix << "joint,left_first," << (*m.order == Side::kLeft ? 1 : 0) << '\n';
    if (m.crt) os << prefix << "joint,crt," << format_double(*m.crt) << '\n';
    os << prefix << "joint,collided," << (m.collided() ? 1 : 0) << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  write_csv_header(os, "aggregate",
                   "source,pair,condition,n_trials,n_collisions,n_included,"
                   "left_mean_max_abs_dev,right_mean_max_abs_dev,mean_gap,p_left_first,mean_crt");
  for (const auto& r : rows) {
    os << r.source << ',' << r.pair << ',' << r.condition.label() << ',' << r.n_trials << ',' << r.n_collisions
       << ',' << r.n_included << ',' << csv_number(r.mean_max_abs_dev[0]) << ','
       << csv_number(r.mean_max_abs_dev[1]) << ',' << csv_number(r.mean_gap) << ','
       << csv_number(r.p_left_first) << ',' << csv_number(r.mean_crt) << '\n';
  }
}

/// Per driver and condition: mean absolute maximum deviation.
inline void write_fig3b_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  write_csv_header(os, "fig3b_abs_deviation", "source,pair,condition,side,n,mean_max_abs_dev");
  for (const auto& r : rows) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      os << r.source << ',' << r.pair << ',' << r.condition.label() << ',' << to_string(s) << ','
         << r.n_included << ',' << csv_number(r.mean_max_abs_dev[side_index(s)]) << '\n';
    }
  }
}

/// Driver-condition means grouped by the driver's own headway and relative velocity.
struct KinematicSummary {
  std::string source;
  double headway = 0.0;
  double relative_velocity = 0.0;
  int n = 0;
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

inline std::vector<KinematicSummary> abs_deviation_by_kinematics(const std::vector<AggregateRow>& rows) {
  std::map<std::tuple<std::string, int, int>, std::vector<double>> groups;
  for (const auto& r : rows) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      const double v = r.mean_max_abs_dev[side_index(s)];
      if (std::isnan(v)) continue;
      const Condition own = s == Side::kLeft ? r.condition : r.condition.mirrored();
      groups[{r.source, own.headway_m, own.velocity_x10}].push_back(v);
    }
  }
  std::vector<KinematicSummary> out;
  for (const auto& [key, values] : groups) {
    const auto& [source, h, v] = key;
    out.push_back({source, static_cast<double>(h), v / 10.0, static_cast<int>(values.size()), mean_of(values),
                   quantile(values, 0.25), quantile(values, 0.75)});
  }
  return out;
}

inline void write_fig3c_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  write_csv_header(os, "fig3c_abs_deviation_by_kinematics", "source,headway,relative_velocity,n,mean,q25,q75");
  for (const auto& k : abs_deviation_by_kinematics(rows)) {
    os << k.source << ',' << format_double(k.headway) << ',' << format_double(k.relative_velocity) << ',' << k.n
       << ',' << csv_number(k.mean) << ',' << csv_number(k.q25) << ',' << csv_number(k.q75) << '\n';
  }
}

inline void write_fig4a_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  write_csv_header(os, "fig4a_gap", "source,pair,condition,n,mean_gap");
  for (const auto& r : rows) {
    os << r.source << ',' << r.pair << ',' << r.condition.label() << ',' << r.n_gap << ','
       << csv_number(r.mean_gap) << '\n';
  }
}

struct ConditionSummary {
  std::string source;
  Condition condition;
  int n = 0;
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Trial-level gaps per condition (all pairs pooled), collisions excluded.
inline std::vector<ConditionSummary> gap_by_condition(const std::vector<TrialMetrics>& trials) {
  std::map<std::pair<std::string, Condition>, std::vector<double>> groups;
  for (const auto& m : trials) {
    if (!m.collided() && m.gap) groups[{m.source, m.condition}].push_back(*m.gap);
  }
  std::vector<ConditionSummary> out;
  for (const auto& [key, gaps] : groups) {
    out.push_back({key.first, key.second, static_cast<int>(gaps.size()), mean_of(gaps), quantile(gaps, 0.25),
                   quantile(gaps, 0.75)});
  }
  return out;
}

inline void write_fig4b_csv(std::ostream& os, const std::vector<TrialMetrics>& trials) {
  write_csv_header(os, "fig4b_gap_by_condition", "source,condition,headway,relative_velocity,n,mean,q25,q75");
  for (const auto& g : gap_by_condition(trials)) {
    os << g.source << ',' << g.condition.label() << ',' << format_double(g.condition.projected_headway()) << ','
       << format_double(g.condition.relative_velocity()) << ',' << g.n << ',' << csv_number(g.mean) << ','
       << csv_number(g.q25) << ',' << csv_number(g.q75) << '\n';
  }
}

inline void write_fig5a_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  write_csv_header(os, "fig5a_decisions", "source,pair,condition,side,n,mean_max_dev,mean_min_dev");
  for (const auto& r : rows) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      os << r.source << ',' << r.pair << ',' << r.condition.label() << ',' << to_string(s) << ','
         << r.n_included << ',' << csv_number(r.mean_max_dev[side_index(s)]) << ','
         << csv_number(r.mean_min_dev[side_index(s)]) << '\n';
    }
  }
}

inline void write_fig5b_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  write_csv_header(os, "fig5b_who_first", "source,pair,condition,n,n_left_first,p_left_first");
  for (const auto& r : rows) {
    os << r.source << ',' << r.pair << ',' << r.condition.label() << ',' << r.n_order << ',' << r.n_left_first
       << ',' << csv_number(r.p_left_first) << '\n';
  }
}

struct OrderSummary {
  std::string source;
  Condition condition;
  int n = 0;
  int n_left_first = 0;
  double p_left_first = 0.0;
  ProportionInterval ci;
};

inline std::vector<OrderSummary> order_by_condition(const std::vector<TrialMetrics>& trials) {
  std::map<std::pair<std::string, Condition>, std::pair<int, int>> counts;
  for (const auto& m : trials) {
    if (m.collided() || !m.order) continue;
    auto& c = counts[{m.source, m.condition}];
    ++c.first;
    if (*m.order == Side::kLeft) ++c.second;
  }
  std::vector<OrderSummary> out;
  for (const auto& [key, c] : counts) {
    out.push_back({key.first, key.second, c.first, c.second, static_cast<double>(c.second) / c.first,
                   wilson_interval(c.second, c.first)});
  }
  return out;
}

inline void write_fig5b_condition_csv(std::ostream& os, const std::vector<TrialMetrics>& trials) {
  write_csv_header(os, "fig5b_who_first_by_condition",
                   "source,condition,headway,relative_velocity,n,n_left_first,p_left_first,ci_low,ci_high");
  for (const auto& o : order_by_condition(trials)) {
    os << o.source << ',' << o.condition.label() << ',' << format_double(o.condition.projected_headway()) << ','
       << format_double(o.condition.relative_velocity()) << ',' << o.n << ',' << o.n_left_first << ','
       << format_double(o.p_left_first) << ',' << format_double(o.ci.low) << ',' << format_double(o.ci.high)
       << '\n';
  }
}

inline void write_crt_csv(std::ostream& os, const std::vector<TrialMetrics>& trials) {
  std::map<std::pair<std::string, Condition>, std::vector<double>> groups;
  for (const auto& m : trials) {
    if (!m.collided() && m.crt) groups[{m.source, m.condition}].push_back(*m.crt);
  }
  write_csv_header(os, "crt_by_condition", "source,condition,n,mean_crt,q25,q75");
  for (const auto& [key, v] : groups) {
    os << key.first << ',' << key.second.label() << ',' << v.size() << ',' << csv_number(mean_of(v)) << ','
       << csv_number(quantile(v, 0.25)) << ',' << csv_number(quantile(v, 0.75)) << '\n';
  }
}

/// Human against model means, matched on (pair, condition). `human_source`
/// and `model_source` select the two row sets.
struct PairedRow {
  int pair = 0;
  Condition condition;
  std::string side;  // left, right or joint
  std::string metric;
  double human = 0.0;
  double model = 0.0;
};

inline std::vector<PairedRow> paired_comparison(const std::vector<AggregateRow>& rows,
                                                const std::string& human_source,
                                                const std::string& model_source = "model") {
  std::map<std::pair<int, Condition>, const AggregateRow*> human, model;
  for (const auto& r : rows) {
    if (r.source == human_source) human[{r.pair, r.condition}] = &r;
    else if (r.source == model_source) model[{r.pair, r.condition}] = &r;
  }
  std::vector<PairedRow> out;
  for (const auto& [key, h] : human) {
    const auto it = model.find(key);
    if (it == model.end()) continue;
    const AggregateRow* m = it->second;
    for (Side s : {Side::kLeft, Side::kRight}) {
      const auto i = side_index(s);
      const std::string side(to_string(s));
      out.push_back({key.first, key.second, side, "max_abs_dev", h->mean_max_abs_dev[i], m->mean_max_abs_dev[i]});
      out.push_back({key.first, key.second, side, "max_dev", h->mean_max_dev[i], m->mean_max_dev[i]});
      out.push_back({key.first, key.second, side, "min_dev", h->mean_min_dev[i], m->mean_min_dev[i]});
    }
    out.push_back({key.first, key.second, "joint", "gap", h->mean_gap, m->mean_gap});
    out.push_back({key.first, key.second, "joint", "p_left_first", h->p_left_first, m->p_left_first});
  }
  return out;
}

inline void write_paired_csv(std::ostream& os, const std::vector<PairedRow>& rows) {
  write_csv_header(os, "paired_comparison", "pair,condition,side,metric,human,model");
  for (const auto& r : rows) {
    os << r.pair << ',' << r.condition.label() << ',' << r.side << ',' << r.metric << ',' << csv_number(r.human)
       << ',' << csv_number(r.model) << '\n';
  }
}

}  // namespace cei
