#pragma once

// Model constants, per-driver base thresholds and the shipped fitted values.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cei/belief.hpp"
#include "cei/planner.hpp"
#include "cei/risk.hpp"
#include "cei/scenario.hpp"

namespace cei {

struct ModelConstants {
  double horizon = 6.0;          // T, s
  double dt = 0.05;              // s
  double memory_span = 4.0;      // T_m, s
  double belief_frequency = 4.0; // f_b, Hz
  double sigma_n = 1.0 / 40.0;   // execution noise std, m/s^2
  double beta = 0.6;             // perception noise level
  double tau = 1.6;              // saturation time, s
  double phi = 3.0;              // wide-component variance scale
  double alpha = 0.5;            // perception update rate (per step)
  double comfortable_accel = 1.0;  // a_c, m/s^2
  double a_max = 4.0;            // pedal range, m/s^2
  double upper_replan_fraction = 0.8;  // ceiling = 0.8 rho_l after an upper-threshold trigger
  double lower_replan_fraction = 0.6;  // ceiling = 0.6 rho_u once the conflict is resolved
  double timeout = 60.0;         // s

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw std::invalid_argument(std::string("model.") + name + " must be > 0");
    };
    positive(horizon, "horizon");
    positive(dt, "dt");
    positive(memory_span, "memory_span");
    positive(belief_frequency, "belief_frequency");
    positive(tau, "tau");
    positive(phi, "phi");
    positive(comfortable_accel, "comfortable_accel");
    positive(a_max, "a_max");
    positive(timeout, "timeout");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("model.alpha must be in (0, 1]");
    if (beta < 0.0 || sigma_n < 0.0) throw std::invalid_argument("model noise levels must be >= 0");
    const double per_point = 1.0 / (belief_frequency * dt);
    if (std::abs(per_point - std::round(per_point)) > 1e-9) {
      throw std::invalid_argument("model.belief_frequency: 1/(f_b*dt) must be an integer");
    }
  }
};

/// Which relative kinematics feed the incentive functions at runtime.
enum class IncentiveDelta { kInstantaneous, kProjected };

struct ModelConfig {
  ModelConstants constants;
  IncentiveCoefficients incentive;
  IncentiveDelta incentive_delta = IncentiveDelta::kInstantaneous;
  ExecutionNoiseModel execution_noise = ExecutionNoiseModel::kAdditive;
  VarianceGrowth variance_growth = VarianceGrowth::kAsPrinted;
  Track track;

  PlannerSettings planner() const {
    PlannerSettings s;
    s.horizon = constants.horizon;
    s.dt = constants.dt;
    s.belief_frequency = constants.belief_frequency;
    s.a_max = constants.a_max;
    return s;
  }

  BeliefSettings belief() const {
    return {constants.horizon, constants.belief_frequency, constants.comfortable_accel, constants.phi,
            variance_growth};
  }
};

struct DriverParams {
  double theta_l = 0.1;
  double theta_u = 0.5;

  friend bool operator==(const DriverParams&, const DriverParams&) = default;
};

struct PairParams {
  int pair = 0;
  DriverParams left;
  DriverParams right;
};

/// Fitted per-driver base thresholds for the nine experiment pairs.
inline std::vector<PairParams> fitted_pair_params() {
  return {
      {1, {0.165, 0.495}, {0.260, 0.562}}, {2, {0.245, 0.635}, {0.058, 0.493}},
      {3, {0.058, 0.488}, {0.245, 0.631}}, {4, {0.183, 0.537}, {0.201, 0.524}},
      {5, {0.113, 0.498}, {0.269, 0.585}}, {6, {0.246, 0.550}, {0.161, 0.546}},
      {7, {0.320, 0.736}, {0.201, 0.522}}, {8, {0.165, 0.525}, {0.246, 0.586}},
      {9, {0.178, 0.519}, {0.227, 0.543}},
  };
}

}  // namespace cei
