#pragma once

// Track geometry, experimental conditions, point-mass dynamics and the
// collision predicate shared by the simulator and risk perception.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cei {

/// Lengths in meters along each vehicle's own track coordinate.
struct Track {
  double tunnel_length = 50.0;
  double approach_length = 50.0;
  double follow_length = 50.0;
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;  // informational only

  double merge_point() const { return tunnel_length + approach_length; }
  double total_length() const { return merge_point() + follow_length; }

  void validate() const {
    if (!(tunnel_length > 0.0) || !(approach_length > 0.0) || !(follow_length > 0.0) ||
        !(vehicle_length > 0.0) || !(vehicle_width > 0.0)) {
      throw std::invalid_argument("track: all lengths must be > 0");
    }
  }
};

struct VehicleState {
  double front_position = 0.0;
  double velocity = 0.0;
  double net_acceleration = 0.0;        // last realized
  double commanded_acceleration = 0.0;  // last pedal input

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

enum class Side { kLeft, kRight };

constexpr Side opposite(Side side) { return side == Side::kLeft ? Side::kRight : Side::kLeft; }

constexpr std::string_view to_string(Side side) { return side == Side::kLeft ? "left" : "right"; }

inline constexpr double kBaseVelocity = 10.0;

/// A kinematic condition. Positive values are an advantage for the left driver.
/// The label is "<headway>_<relative velocity x10>", e.g. "4_-8".
struct Condition {
  int headway_m = 0;
  int velocity_x10 = 0;

  double projected_headway() const { return static_cast<double>(headway_m); }
  double relative_velocity() const { return static_cast<double>(velocity_x10) / 10.0; }

  std::string label() const { return std::to_string(headway_m) + "_" + std::to_string(velocity_x10); }

  double left_velocity() const { return kBaseVelocity + relative_velocity() / 2.0; }
  double right_velocity() const { return kBaseVelocity - relative_velocity() / 2.0; }

  /// The same condition seen from the right driver.
  Condition mirrored() const { return Condition{-headway_m, -velocity_x10}; }

  /// Headway and relative velocity from one driver's perspective.
  double headway_for(Side side) const {
    return side == Side::kLeft ? projected_headway() : -projected_headway();
  }
  double relative_velocity_for(Side side) const {
    return side == Side::kLeft ? relative_velocity() : -relative_velocity();
  }

  friend auto operator<=>(const Condition&, const Condition&) = default;
};

class UnknownConditionError : public std::invalid_argument {
 public:
  explicit UnknownConditionError(const std::string& label)
      : std::invalid_argument("unknown condition label '" + label + "'"), label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

inline bool is_valid_condition(const Condition& c) {
  const bool headway_ok = c.headway_m >= -4 && c.headway_m <= 4 && c.headway_m % 2 == 0;
  const bool velocity_ok = c.velocity_x10 == -8 || c.velocity_x10 == 0 || c.velocity_x10 == 8;
  return headway_ok && velocity_ok;
}

inline Condition parse_condition(std::string_view label) {
  if (label.empty()) throw UnknownConditionError(std::string(label));
  const auto underscore = label.find('_', label.front() == '-' ? 1 : 0);
  if (underscore == std::string_view::npos) {
    throw UnknownConditionError(std::string(label));
  }
  auto parse_int = [&](std::string_view text, int& out) {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && !text.empty();
  };
  Condition c;
  if (!parse_int(label.substr(0, underscore), c.headway_m) ||
      !parse_int(label.substr(underscore + 1), c.velocity_x10) || !is_valid_condition(c)) {
    throw UnknownConditionError(std::string(label));
  }
  return c;
}

/// The eleven conditions of the experiment.
inline std::vector<Condition> default_conditions() {
  return {{-4, 8}, {-4, 0}, {-2, 8}, {-2, 0}, {0, 8}, {0, 0},
          {0, -8}, {2, 0},  {2, -8}, {4, 0},  {4, -8}};
}

/// All fifteen headway x velocity combinations.
inline std::vector<Condition> all_conditions() {
  std::vector<Condition> out;
  for (int h = -4; h <= 4; h += 2) {
    for (int v : {-8, 0, 8}) out.push_back({h, v});
  }
  return out;
}

/// Deceleration due to rolling and air resistance.
constexpr double resistance(double velocity) { return 0.5 + 0.005 * velocity * velocity; }

/// Semi-implicit Euler step. Inside the tunnel velocity is held exactly
/// constant; outside, resistance opposes motion and velocity is clamped at 0.
inline VehicleState step_dynamics(const VehicleState& state, double commanded_accel, double dt,
                                  bool in_tunnel, bool with_resistance = true) {
  VehicleState next = state;
  if (in_tunnel) {
    next.net_acceleration = 0.0;
    next.commanded_acceleration = 0.0;
    next.front_position = state.front_position + state.velocity * dt;
    return next;
  }
  const double resist = with_resistance ? resistance(state.velocity) : 0.0;
  const double accel = commanded_accel - resist;
  double velocity = state.velocity + accel * dt;
  if (velocity < 0.0) velocity = 0.0;
  next.velocity = velocity;
  next.net_acceleration = velocity == state.velocity + accel * dt ? accel : (velocity - state.velocity) / dt;
  next.commanded_acceleration = commanded_accel;
  next.front_position = state.front_position + velocity * dt;
  return next;
}

/// Initial states such that, at constant initial velocities, the advantaged
/// front reaches the merge point with the other front `projected_headway`
/// behind it. The rearmost front starts at exactly 0.
inline std::pair<VehicleState, VehicleState> initial_states(const Condition& condition, const Track& track) {
  const double merge = track.merge_point();
  const double h = condition.projected_headway();
  const double v_left = condition.left_velocity();
  const double v_right = condition.right_velocity();
  const double left_at_ref = h >= 0.0 ? merge : merge + h;
  const double right_at_ref = h <= 0.0 ? merge : merge - h;
  const double left_time = left_at_ref / v_left;
  const double right_time = right_at_ref / v_right;

  VehicleState left{0.0, v_left, 0.0, 0.0};
  VehicleState right{0.0, v_right, 0.0, 0.0};
  if (left_time <= right_time) {
    right.front_position = right_at_ref - v_right * left_time;
  }
  if (right_time <= left_time) {
    left.front_position = left_at_ref - v_left * right_time;
  }
  return {left, right};
}

/// Open interval of positions.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const { return x > lower && x < upper; }
  double width() const { return upper - lower; }
};

/// Positions of the other vehicle's front that collide with the ego front.
/// Bodies overlap when |fronts| differ by less than a vehicle length and the
/// leading front is past the merge point (before it the roads are separate).
inline std::optional<Interval> collision_bounds(double ego_front, const Track& track) {
  const double merge = track.merge_point();
  const double length = track.vehicle_length;
  if (ego_front > merge) return Interval{ego_front - length, ego_front + length};
  if (ego_front + length > merge) return Interval{merge, ego_front + length};
  return std::nullopt;
}

inline bool detect_collision(const VehicleState& left, const VehicleState& right, const Track& track) {
  const auto bounds = collision_bounds(left.front_position, track);
  return bounds && bounds->contains(right.front_position);
}

}  // namespace cei
