#pragma once

// Trial log files: a few "# key=value" header lines followed by one CSV
// record per simulation step. Doubles use the shortest representation that
// round-trips exactly, so files are diffable and re-reading is lossless.
// The layout is documented in docs/formats.md.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cei/engine.hpp"

namespace cei {

inline constexpr std::string_view kTrialLogMagic = "# cei-trial-log 1";

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view text) {
  if (text == "nan" || text == "NaN" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split_view(std::string_view line, char delim = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Column order of the per-step records.
inline const std::vector<std::string>& trial_log_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"t"};
    for (std::string side : {"left", "right"}) {
      for (std::string f : {"position", "velocity", "net_acceleration", "commanded_acceleration"}) {
        c.push_back(side + "_" + f);
      }
    }
    for (std::string side : {"left", "right"}) {
      for (std::string f :
           {"risk", "rho_l", "rho_u", "perceived_velocity", "executed_acceleration", "event"}) {
        c.push_back(side + "_" + f);
      }
    }
    return c;
  }();
  return columns;
}

inline void write_trial_log(std::ostream& os, const TrialLog& log) {
  os << kTrialLogMagic << '\n';
  os << "# source=" << log.source << '\n';
  os << "# pair=" << log.pair << '\n';
  os << "# condition=" << log.condition.label() << '\n';
  os << "# repetition=" << log.repetition << '\n';
  os << "# seed=" << log.seed << '\n';
  os << "# mode=" << to_string(log.mode) << '\n';
  os << "# dt=" << format_double(log.dt) << '\n';
  os << "# outcome=" << to_string(log.outcome) << '\n';
  os << "# collision_time="
     << (log.collision_time ? format_double(*log.collision_time) : std::string("none")) << '\n';
  const auto& cols = trial_log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  auto vehicle = [&](const VehicleState& v) {
    os << ',' << format_double(v.front_position) << ',' << format_double(v.velocity) << ','
       << format_double(v.net_acceleration) << ',' << format_double(v.commanded_acceleration);
  };
  auto agent = [&](const AgentRecord& a) {
    os << ',' << format_double(a.risk) << ',' << format_double(a.rho_l) << ',' << format_double(a.rho_u) << ','
       << format_double(a.perceived_velocity) << ',' << format_double(a.executed_acceleration) << ','
       << (a.event.empty() ? "-" : a.event);
  };
  for (const auto& s : log.steps) {
    os << format_double(s.t);
    vehicle(s.left);
    vehicle(s.right);
    agent(s.left_agent);
    agent(s.right_agent);
    os << '\n';
  }
}

class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline TrialLog read_trial_log(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kTrialLogMagic) {
    throw LogFormatError("not a cei trial log (bad magic line)");
  }
  TrialLog log;
  bool header_seen = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      const auto eq = view.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = trim(view.substr(1, eq - 1));
      const auto value = trim(view.substr(eq + 1));
      try {
        if (key == "source") log.source = std::string(value);
        else if (key == "pair") log.pair = std::stoi(std::string(value));
        else if (key == "condition") log.condition = parse_condition(value);
        else if (key == "repetition") log.repetition = std::stoi(std::string(value));
        else if (key == "seed") log.seed = std::stoull(std::string(value));
        else if (key == "mode") log.mode = parse_mode(value);
        else if (key == "dt") log.dt = parse_double(value);
        else if (key == "outcome") log.outcome = parse_outcome(value);
        else if (key == "collision_time" && value != "none") log.collision_time = parse_double(value);
      } catch (const std::exception& e) {
        throw LogFormatError("line " + std::to_string(line_no) + ": bad header '" + std::string(key) +
                             "': " + e.what());
      }
      continue;
    }
    const auto fields = split_view(view);
    if (!header_seen) {
      const auto& cols = trial_log_columns();
      if (fields.size() != cols.size()) throw LogFormatError("unexpected column header");
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (fields[i] != cols[i]) throw LogFormatError("unexpected column '" + std::string(fields[i]) + "'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != trial_log_columns().size()) {
      throw LogFormatError("line " + std::to_string(line_no) + ": wrong field count");
    }
    try {
      StepRecord s;
      std::size_t i = 0;
      s.t = parse_double(fields[i++]);
      for (VehicleState* v : {&s.left, &s.right}) {
        v->front_position = parse_double(fields[i++]);
        v->velocity = parse_double(fields[i++]);
        v->net_acceleration = parse_double(fields[i++]);
        v->commanded_acceleration = parse_double(fields[i++]);
      }
      for (AgentRecord* a : {&s.left_agent, &s.right_agent}) {
        a->risk = parse_double(fields[i++]);
        a->rho_l = parse_double(fields[i++]);
        a->rho_u = parse_double(fields[i++]);
        a->perceived_velocity = parse_double(fields[i++]);
        a->executed_acceleration = parse_double(fields[i++]);
        const auto ev = fields[i++];
        a->event = ev == "-" ? std::string() : std::string(ev);
      }
      log.steps.push_back(std::move(s));
    } catch (const std::invalid_argument& e) {
      throw LogFormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw LogFormatError("missing column header");
  if (log.steps.empty()) throw LogFormatError("no step records");
  return log;
}

inline std::string trial_file_name(const TrialLog& log) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "trial_p%02d_%s_r%02d.csv", log.pair, log.condition.label().c_str(),
                log.repetition);
  return buf;
}

inline void save_trial_log(const std::filesystem::path& path, const TrialLog& log) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_trial_log(os, log);
}

inline TrialLog load_trial_log(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return read_trial_log(is);
}

}  // namespace cei
