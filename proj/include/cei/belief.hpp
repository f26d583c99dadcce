#pragma once

// Probabilistic belief over the other vehicle's future front position: one
// two-component Gaussian (shared mean) per belief point over the horizon.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cei/perception.hpp"

namespace cei {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal mass on (a, b), computed on the tail side for precision.
inline double normal_mass(double a, double b) {
  if (!(b > a)) return 0.0;
  if (a >= 0.0) return normal_cdf(-a) - normal_cdf(-b);
  return normal_cdf(b) - normal_cdf(a);
}

struct AccelerationExpectation {
  double mean = 0.0;
  double stddev = 0.0;
};

class MissingObservationError : public std::logic_error {
 public:
  MissingObservationError() : std::logic_error("acceleration memory is empty") {}
};

/// Mean of the memory, with variance floored by the comfortable-acceleration term.
inline AccelerationExpectation expected_acceleration(const AccelerationMemory& memory,
                                                     double comfortable_accel) {
  if (memory.empty()) throw MissingObservationError();
  const double floor = comfortable_accel / 3.0;
  return {memory.mean(), std::sqrt(floor * floor + memory.variance())};
}

struct BeliefPoint {
  double t = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double phi = 3.0;
};

/// How belief variance grows with the look-ahead.
enum class VarianceGrowth {
  kAsPrinted,        // sigma^2 = 1/2 dt^2 sigma_a^2
  kSquaredKinematic  // sigma^2 = (1/2 dt^2)^2 sigma_a^2, sensitivity check only
};

inline BeliefPoint project_belief_point(double p0, double v0_perceived,
                                        const AccelerationExpectation& expectation, double t,
                                        double t0, double phi,
                                        VarianceGrowth growth = VarianceGrowth::kAsPrinted) {
  if (t < t0) throw std::invalid_argument("belief point before source time");
  const double dt = t - t0;
  const double half_sq = 0.5 * dt * dt;
  const double var_a = expectation.stddev * expectation.stddev;
  const double variance =
      growth == VarianceGrowth::kAsPrinted ? half_sq * var_a : half_sq * half_sq * var_a;
  return {t, half_sq * expectation.mean + v0_perceived * dt + p0, std::sqrt(variance), phi};
}

struct BeliefSettings {
  double horizon = 6.0;
  double frequency = 4.0;
  double comfortable_accel = 1.0;
  double phi = 3.0;
  VarianceGrowth growth = VarianceGrowth::kAsPrinted;

  int point_count() const { return static_cast<int>(std::floor(horizon * frequency + 1e-9)); }
};

struct Belief {
  double source_time = 0.0;
  std::vector<BeliefPoint> points;
};

inline Belief build_belief(const PerceivedOther& perceived, const BeliefSettings& settings, double t0) {
  const auto expectation = expected_acceleration(perceived.memory, settings.comfortable_accel);
  Belief belief;
  belief.source_time = t0;
  const int n = settings.point_count();
  belief.points.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double t = t0 + static_cast<double>(k) / settings.frequency;
    belief.points.push_back(project_belief_point(perceived.position, perceived.perceived_velocity,
                                                 expectation, t, t0, settings.phi, settings.growth));
  }
  return belief;
}

/// Probability that the other front lies in the open interval (a, b).
inline double mixture_mass(const BeliefPoint& point, double a, double b) {
  if (!(b > a)) return 0.0;
  if (!(point.sigma > 0.0)) return (point.mu > a && point.mu < b) ? 1.0 : 0.0;
  const double narrow = point.sigma;
  const double wide = point.sigma * std::sqrt(point.phi);
  const double mass = 0.5 * normal_mass((a - point.mu) / narrow, (b - point.mu) / narrow) +
                      0.5 * normal_mass((a - point.mu) / wide, (b - point.mu) / wide);
  return std::clamp(mass, 0.0, 1.0);
}

}  // namespace cei
