#pragma once

// Selection of a constant commanded acceleration that minimizes the
// comfort/speed cost subject to a perceived-risk ceiling.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cei/belief.hpp"
#include "cei/risk.hpp"
#include "cei/scenario.hpp"

namespace cei {

struct PlannerSettings {
  double horizon = 6.0;
  double dt = 0.05;
  double belief_frequency = 4.0;
  double a_max = 4.0;
  bool with_resistance = true;
  int grid_points = 81;
  double tolerance = 1e-7;

  int steps() const { return static_cast<int>(std::lround(horizon / dt)); }
  int steps_per_point() const { return static_cast<int>(std::lround(1.0 / (belief_frequency * dt))); }
  int point_count() const { return static_cast<int>(std::floor(horizon * belief_frequency + 1e-9)); }
};

enum class PlanConstraint { kNone, kBelowLowerFraction, kBelowUpperFraction };
enum class Fallback { kNone, kFullBrake, kFullAccel };

constexpr std::string_view to_string(PlanConstraint c) {
  switch (c) {
    case PlanConstraint::kBelowLowerFraction: return "below_0.8rho_l";
    case PlanConstraint::kBelowUpperFraction: return "below_0.6rho_u";
    default: return "none";
  }
}

constexpr std::string_view to_string(Fallback f) {
  switch (f) {
    case Fallback::kFullBrake: return "full_brake";
    case Fallback::kFullAccel: return "full_accel";
    default: return "none";
  }
}

struct Waypoint {
  double t = 0.0;
  double front_position = 0.0;
  double velocity = 0.0;
};

struct Plan {
  double commanded_acceleration = 0.0;
  double executed_acceleration = 0.0;
  std::vector<Waypoint> waypoints;  // at belief-point times
  double created_at = 0.0;
  PlanConstraint constraint = PlanConstraint::kNone;
  Fallback fallback = Fallback::kNone;
  double risk_ceiling = 1.0;
  double risk_at_creation = 0.0;

  std::vector<double> front_positions() const {
    std::vector<double> out;
    out.reserve(waypoints.size());
    for (const auto& w : waypoints) out.push_back(w.front_position);
    return out;
  }
};

namespace detail {

/// Integrates a constant command over the horizon, returning the cost and
/// writing the front position at every belief-point time into `fronts`.
inline double rollout(double accel, const VehicleState& state, double desired_velocity,
                      const PlannerSettings& settings, std::span<double> fronts,
                      std::vector<Waypoint>* waypoints = nullptr, double t0 = 0.0) {
  const int n = settings.steps();
  const int per_point = settings.steps_per_point();
  const int points = static_cast<int>(fronts.size());
  VehicleState s = state;
  double cost = 0.0;
  for (int step = 1; step <= n; ++step) {
    s = step_dynamics(s, accel, settings.dt, false, settings.with_resistance);
    const double dv = s.velocity - desired_velocity;
    cost += dv * dv + accel * accel;
    if (step % per_point == 0) {
      const int k = step / per_point - 1;
      if (k < points) {
        fronts[static_cast<std::size_t>(k)] = s.front_position;
        if (waypoints) {
          waypoints->push_back(
              {t0 + static_cast<double>(k + 1) / settings.belief_frequency, s.front_position, s.velocity});
        }
      }
    }
  }
  return cost;
}

}  // namespace detail

/// Sum over simulation steps of (v - v_d)^2 + a^2. No collision term.
inline double plan_cost(double accel, const VehicleState& state, double desired_velocity,
                        const PlannerSettings& settings) {
  std::vector<double> fronts(static_cast<std::size_t>(settings.point_count()));
  return detail::rollout(accel, state, desired_velocity, settings, fronts);
}

/// Builds a plan holding `accel` from `state`; waypoints use the same integrator as the simulation.
inline Plan make_plan(double accel, const VehicleState& state, const PlannerSettings& settings, double t0) {
  Plan plan;
  plan.commanded_acceleration = accel;
  plan.executed_acceleration = accel;
  plan.created_at = t0;
  std::vector<double> fronts(static_cast<std::size_t>(settings.point_count()));
  plan.waypoints.reserve(fronts.size());
  detail::rollout(accel, state, 0.0, settings, fronts, &plan.waypoints, t0);
  return plan;
}

/// Planned fronts of holding `accel` from `state`, at the belief-point offsets.
inline std::vector<double> planned_fronts(double accel, const VehicleState& state,
                                          const PlannerSettings& settings) {
  std::vector<double> fronts(static_cast<std::size_t>(settings.point_count()));
  detail::rollout(accel, state, 0.0, settings, fronts);
  return fronts;
}

/// Minimizes plan_cost subject to perceived risk <= ceiling. Coarse grid for
/// the feasible set, bisection for its boundaries, golden section inside each
/// feasible interval. Returns nullopt when nothing in [-a_max, a_max] is feasible.
inline std::optional<Plan> optimize_plan(const VehicleState& state, const Belief& belief, double risk_ceiling,
                                         double desired_velocity, const PlannerSettings& settings,
                                         const Track& track) {
  const double a_max = settings.a_max;
  const int n = std::max(settings.grid_points, 3);
  std::vector<double> fronts(static_cast<std::size_t>(settings.point_count()));

  auto cost_of = [&](double a) { return detail::rollout(a, state, desired_velocity, settings, fronts); };
  auto risk_of = [&](double a) {
    detail::rollout(a, state, desired_velocity, settings, fronts);
    return max_risk(fronts, belief, track);
  };
  auto feasible = [&](double risk) { return risk <= risk_ceiling; };

  std::vector<double> grid(static_cast<std::size_t>(n));
  std::vector<double> grid_cost(grid.size());
  std::vector<char> grid_ok(grid.size());
  for (int i = 0; i < n; ++i) {
    const double a = i == n - 1 ? a_max : -a_max + 2.0 * a_max * static_cast<double>(i) / (n - 1);
    grid[i] = a;
    grid_cost[i] = detail::rollout(a, state, desired_velocity, settings, fronts);
    grid_ok[i] = feasible(max_risk(fronts, belief, track));
  }

  // Feasibility boundary between an infeasible and a feasible point; returns the feasible side.
  auto boundary = [&](double bad, double good) {
    while (std::abs(good - bad) > settings.tolerance * 1e-2) {
      const double mid = 0.5 * (good + bad);
      if (feasible(risk_of(mid))) good = mid; else bad = mid;
    }
    return good;
  };

  auto golden = [&](double lo, double hi) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = cost_of(x1);
    double f2 = cost_of(x2);
    while (hi - lo > settings.tolerance) {
      if (f1 <= f2) {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - kInvPhi * (hi - lo);
        f1 = cost_of(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + kInvPhi * (hi - lo);
        f2 = cost_of(x2);
      }
    }
    return 0.5 * (lo + hi);
  };

  std::optional<double> best_a;
  double best_cost = 0.0;
  auto offer = [&](double a, double cost) {
    const double eps = 1e-12 * (1.0 + std::abs(best_cost));
    if (!best_a || cost < best_cost - eps || (std::abs(cost - best_cost) <= eps && std::abs(a) < std::abs(*best_a))) {
      best_a = a;
      best_cost = cost;
    }
  };

  for (int i = 0; i < n;) {
    if (!grid_ok[i]) { ++i; continue; }
    int j = i;
    while (j + 1 < n && grid_ok[j + 1]) ++j;
    const double lo = i == 0 ? grid[0] : boundary(grid[i - 1], grid[i]);
    const double hi = j == n - 1 ? grid[n - 1] : boundary(grid[j + 1], grid[j]);
    int best_grid = i;
    for (int k = i; k <= j; ++k) {
      if (grid_cost[k] < grid_cost[best_grid]) best_grid = k;
    }
    offer(grid[best_grid], grid_cost[best_grid]);
    for (double a : {lo, hi, golden(lo, hi)}) {
      if (feasible(risk_of(a))) offer(a, cost_of(a));
    }
    i = j + 1;
  }

  if (!best_a) return std::nullopt;
  Plan plan = make_plan(*best_a, state, settings, belief.source_time);
  plan.risk_ceiling = risk_ceiling;
  plan.risk_at_creation = max_risk(plan.front_positions(), belief, track);
  return plan;
}

/// Full braking when behind (ties brake), full acceleration when ahead.
inline Plan fallback_plan(const VehicleState& state, double other_front, const PlannerSettings& settings,
                          double t0) {
  const bool ahead = state.front_position > other_front;
  Plan plan = make_plan(ahead ? settings.a_max : -settings.a_max, state, settings, t0);
  plan.fallback = ahead ? Fallback::kFullAccel : Fallback::kFullBrake;
  return plan;
}

enum class ExecutionNoiseModel { kAdditive, kMultiplicative };

/// Adds the frozen execution noise draw and clips to the pedal range.
inline double apply_execution_noise(double commanded, double noise_draw, double a_max,
                                    ExecutionNoiseModel model = ExecutionNoiseModel::kAdditive) {
  const double executed =
      model == ExecutionNoiseModel::kAdditive ? commanded + noise_draw : commanded * (1.0 + noise_draw);
  return std::clamp(executed, -a_max, a_max);
}

}  // namespace cei
