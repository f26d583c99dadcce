#pragma once

// Reading external (human) trial recordings into TrialLogs, and exporting
// model logs in the same plain layout. Column names and units come from an
// IngestSchema; nothing about the external files is hard-coded.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cei/engine.hpp"
#include "cei/log_io.hpp"
#include "cei/scenario.hpp"

namespace cei {

struct IngestColumns {
  std::string time = "t";
  std::string left_position = "left_position";
  std::string left_velocity = "left_velocity";
  std::string right_position = "right_position";
  std::string right_velocity = "right_velocity";
  std::string pair = "pair";
  std::string condition = "condition";
  std::string repetition = "repetition";  // optional; files are numbered in name order otherwise
};

struct IngestSchema {
  std::string source = "human";
  char delimiter = ',';
  std::string extension = ".csv";
  IngestColumns columns;
  double time_scale = 1.0;        // multiply to get seconds
  double position_scale = 1.0;    // multiply to get meters
  double velocity_scale = 1.0;    // multiply to get m/s
  double position_offset = 0.0;   // added after scaling
  double time_tolerance = 1e-6;   // allowed relative spread of the sampling interval
  double unit_tolerance = 0.2;    // allowed median relative mismatch between d(position)/dt and velocity
};

enum class RejectReason { kMissingColumn, kNonUniformTime, kUnitMismatch, kParseError, kEmpty, kBadMetadata };

constexpr std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kMissingColumn: return "missing_column";
    case RejectReason::kNonUniformTime: return "non_uniform_time";
    case RejectReason::kUnitMismatch: return "unit_mismatch";
    case RejectReason::kParseError: return "parse_error";
    case RejectReason::kEmpty: return "empty";
    default: return "bad_metadata";
  }
}

class IngestError : public std::runtime_error {
 public:
  IngestError(RejectReason reason, const std::string& detail)
      : std::runtime_error(std::string(to_string(reason)) + ": " + detail), reason_(reason), detail_(detail) {}
  RejectReason reason() const { return reason_; }
  const std::string& detail() const { return detail_; }

 private:
  RejectReason reason_;
  std::string detail_;
};

struct IngestRejection {
  std::filesystem::path path;
  RejectReason reason;
  std::string detail;
};

struct IngestResult {
  std::vector<TrialLog> logs;
  std::vector<IngestRejection> rejected;
};

namespace detail {

inline std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace detail

/// One recording -> one TrialLog. The repetition is -1 when the file has no
/// repetition column. Throws IngestError.
inline TrialLog ingest_trial(std::istream& is, const IngestSchema& schema, const Track& track) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    for (auto f : split_view(view, schema.delimiter)) header.emplace_back(detail::unquote(f));
    break;
  }
  if (header.empty()) throw IngestError(RejectReason::kEmpty, "no header row");

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto require = [&](const std::string& name) {
    const auto i = find(name);
    if (!i) throw IngestError(RejectReason::kMissingColumn, name);
    return *i;
  };
  const auto& c = schema.columns;
  const std::size_t i_t = require(c.time);
  const std::size_t i_lp = require(c.left_position);
  const std::size_t i_lv = require(c.left_velocity);
  const std::size_t i_rp = require(c.right_position);
  const std::size_t i_rv = require(c.right_velocity);
  const std::size_t i_pair = require(c.pair);
  const std::size_t i_cond = require(c.condition);
  const auto i_rep = c.repetition.empty() ? std::nullopt : find(c.repetition);

  TrialLog log;
  log.source = schema.source;
  log.repetition = -1;
  std::optional<std::string> pair_text, cond_text, rep_text;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split_view(view, schema.delimiter);
    if (fields.size() != header.size()) {
      throw IngestError(RejectReason::kParseError, "row " + std::to_string(line_no) + ": wrong field count");
    }
    auto metadata = [&](std::optional<std::string>& seen, std::size_t i, const std::string& name) {
      const std::string value(detail::unquote(fields[i]));
      if (!seen) seen = value;
      else if (*seen != value) throw IngestError(RejectReason::kBadMetadata, name + " changes within the file");
    };
    metadata(pair_text, i_pair, c.pair);
    metadata(cond_text, i_cond, c.condition);
    if (i_rep) metadata(rep_text, *i_rep, c.repetition);
    try {
      auto num = [&](std::size_t i) { return parse_double(detail::unquote(fields[i])); };
      StepRecord s;
      s.t = num(i_t) * schema.time_scale;
      s.left.front_position = num(i_lp) * schema.position_scale + schema.position_offset;
      s.left.velocity = num(i_lv) * schema.velocity_scale;
      s.right.front_position = num(i_rp) * schema.position_scale + schema.position_offset;
      s.right.velocity = num(i_rv) * schema.velocity_scale;
      log.steps.push_back(s);
    } catch (const std::invalid_argument& e) {
      throw IngestError(RejectReason::kParseError, "row " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (log.steps.size() < 2) throw IngestError(RejectReason::kEmpty, "fewer than two samples");

  try {
    log.pair = std::stoi(*pair_text);
    log.condition = parse_condition(*cond_text);
    if (rep_text) log.repetition = std::stoi(*rep_text);
  } catch (const std::exception& e) {
    throw IngestError(RejectReason::kBadMetadata, e.what());
  }

  std::vector<double> intervals;
  for (std::size_t k = 1; k < log.steps.size(); ++k) intervals.push_back(log.steps[k].t - log.steps[k - 1].t);
  const double dt = detail::median(intervals);
  for (double h : intervals) {
    if (!(h > 0.0) || std::abs(h - dt) > schema.time_tolerance * dt + 1e-12) {
      throw IngestError(RejectReason::kNonUniformTime, "sampling interval " + format_double(h) +
                                                           " differs from median " + format_double(dt));
    }
  }
  log.dt = dt;

  // Finite-difference velocity against the reported one, where the vehicle moves.
  std::vector<double> mismatch;
  for (Side side : {Side::kLeft, Side::kRight}) {
    for (std::size_t k = 1; k < log.steps.size(); ++k) {
      const auto& a = log.steps[k - 1].vehicle(side);
      const auto& b = log.steps[k].vehicle(side);
      const double reported = 0.5 * (a.velocity + b.velocity);
      if (std::abs(reported) < 0.5) continue;
      const double fd = (b.front_position - a.front_position) / (log.steps[k].t - log.steps[k - 1].t);
      mismatch.push_back(std::abs(fd - reported) / std::abs(reported));
    }
  }
  if (!mismatch.empty() && detail::median(mismatch) > schema.unit_tolerance) {
    throw IngestError(RejectReason::kUnitMismatch,
                      "median relative velocity mismatch " + format_double(detail::median(mismatch)));
  }

  for (std::size_t k = 1; k < log.steps.size(); ++k) {
    for (Side side : {Side::kLeft, Side::kRight}) {
      auto& v = side == Side::kLeft ? log.steps[k].left : log.steps[k].right;
      v.net_acceleration = (v.velocity - log.steps[k - 1].vehicle(side).velocity) / dt;
    }
  }

  const double finish = track.total_length() + track.vehicle_length;
  log.outcome = Outcome::kStopped;
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    if (detect_collision(s.left, s.right, track)) {
      log.outcome = Outcome::kCollision;
      log.collision_time = s.t;
      log.steps.resize(k + 1);
      break;
    }
    if (s.left.front_position >= finish && s.right.front_position >= finish) {
      log.outcome = Outcome::kCompleted;
      log.steps.resize(k + 1);
      break;
    }
  }
  return log;
}

inline TrialLog ingest_trial_file(const std::filesystem::path& path, const IngestSchema& schema,
                                  const Track& track) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError(RejectReason::kEmpty, "cannot open " + path.string());
  return ingest_trial(is, schema, track);
}

/// Every file with the schema's extension directly inside `dir`, in name
/// order. Bad files are rejected individually with a reason code.
inline IngestResult ingest_human_dataset(const std::filesystem::path& dir, const IngestSchema& schema,
                                         const Track& track) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == schema.extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestResult result;
  std::map<std::pair<int, Condition>, int> counter;
  for (const auto& f : files) {
    try {
      TrialLog log = ingest_trial_file(f, schema, track);
      int& next = counter[{log.pair, log.condition}];
      if (log.repetition < 0) log.repetition = next;
      ++next;
      result.logs.push_back(std::move(log));
    } catch (const IngestError& e) {
      result.rejected.push_back({f, e.reason(), e.detail()});
    }
  }
  return result;
}

/// Plain per-step CSV in the default ingest layout (positions in m,
/// velocities in m/s, time in s).
inline void write_export_csv(std::ostream& os, const TrialLog& log) {
  os << "# cei-export v1 source=" << log.source << '\n';
  os << "t,left_position,left_velocity,right_position,right_velocity,pair,condition,repetition\n";
  const std::string tail =
      "," + std::to_string(log.pair) + "," + log.condition.label() + "," + std::to_string(log.repetition) + "\n";
  for (const auto& s : log.steps) {
    os << format_double(s.t) << ',' << format_double(s.left.front_position) << ','
       << format_double(s.left.velocity) << ',' << format_double(s.right.front_position) << ','
       << format_double(s.right.velocity) << tail;
  }
}

}  // namespace cei
