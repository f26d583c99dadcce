#pragma once

// Perceived risk of a planned trajectory against a belief, and the two
// incentive-adjusted risk thresholds.

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cei/belief.hpp"
#include "cei/scenario.hpp"

namespace cei {

/// Coefficients on (dp, dv, dp*dv) for each threshold.
struct IncentiveCoefficients {
  std::array<double, 3> upper{0.003, 0.018, -0.006};
  std::array<double, 3> lower{0.004, 0.016, -0.003};

  static IncentiveCoefficients disabled() { return {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}; }
};

struct RiskThresholds {
  double theta_l = 0.1;
  double theta_u = 0.5;
  IncentiveCoefficients lambda;
};

struct ThresholdPair {
  double rho_l = 0.0;
  double rho_u = 0.0;
};

inline constexpr double kThresholdMargin = 0.001;

/// Linear incentive adjustment; dp and dv are from the ego perspective.
/// Clamped so that 0.001 <= rho_l <= rho_u - 0.001 <= 0.999.
inline ThresholdPair evaluate_thresholds_unclamped(const RiskThresholds& params, double dp, double dv) {
  const auto& u = params.lambda.upper;
  const auto& l = params.lambda.lower;
  return {params.theta_l + l[0] * dp + l[1] * dv + l[2] * dp * dv,
          params.theta_u + u[0] * dp + u[1] * dv + u[2] * dp * dv};
}

inline ThresholdPair evaluate_thresholds(const RiskThresholds& params, double dp, double dv) {
  auto rho = evaluate_thresholds_unclamped(params, dp, dv);
  rho.rho_u = std::clamp(rho.rho_u, 2.0 * kThresholdMargin, 1.0 - kThresholdMargin);
  rho.rho_l = std::clamp(rho.rho_l, kThresholdMargin, rho.rho_u - kThresholdMargin);
  return rho;
}

struct RiskAssessment {
  double risk = 0.0;
  std::vector<double> per_point;
  std::optional<std::size_t> triggering_point_index;
};

/// Per-point collision probability between the ego's planned front positions
/// (one per belief point, same times) and the belief; scalar risk is the max.
inline RiskAssessment perceived_risk(std::span<const double> ego_fronts, const Belief& belief,
                                     const Track& track) {
  if (ego_fronts.size() != belief.points.size()) {
    throw std::invalid_argument("perceived_risk: plan and belief sampled at different times");
  }
  RiskAssessment out;
  out.per_point.resize(belief.points.size(), 0.0);
  for (std::size_t k = 0; k < belief.points.size(); ++k) {
    if (const auto bounds = collision_bounds(ego_fronts[k], track)) {
      out.per_point[k] = mixture_mass(belief.points[k], bounds->lower, bounds->upper);
    }
    if (out.per_point[k] > out.risk) {
      out.risk = out.per_point[k];
      out.triggering_point_index = k;
    }
  }
  return out;
}

/// Scalar risk only; allocation-free path used inside the optimizer.
inline double max_risk(std::span<const double> ego_fronts, const Belief& belief, const Track& track) {
  double risk = 0.0;
  const std::size_t n = std::min(ego_fronts.size(), belief.points.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (const auto bounds = collision_bounds(ego_fronts[k], track)) {
      risk = std::max(risk, mixture_mass(belief.points[k], bounds->lower, bounds->upper));
    }
  }
  return risk;
}

}  // namespace cei
