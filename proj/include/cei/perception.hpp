#pragma once

// What one driver observes of the other: exact position and acceleration,
// a noisy accumulated velocity estimate, and a rolling acceleration memory.

#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <vector>

namespace cei {

/// One step of the evidence-accumulation velocity estimate.
/// `noise_draw` is a Wiener increment, i.e. a sample of N(0, dt).
constexpr double update_perceived_velocity(double previous, double true_velocity, double alpha,
                                           double beta, double noise_draw) {
  return previous + (alpha * (true_velocity - previous) + beta * noise_draw);
}

template <class Rng>
double draw_wiener_increment(Rng& rng, double dt) {
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  return normal(rng);
}

/// Time-ordered buffer of observed accelerations covering the last `span` seconds.
class AccelerationMemory {
 public:
  explicit AccelerationMemory(double span = 4.0) : span_(span) {
    if (!(span > 0.0)) throw std::invalid_argument("acceleration memory span must be > 0");
  }

  void push(double acceleration, double t) {
    if (!samples_.empty() && !(t > samples_.back().t)) {
      throw std::invalid_argument("acceleration memory: timestamps must be strictly increasing");
    }
    samples_.push_back({t, acceleration});
    // 1e-9 absorbs accumulated rounding in k*dt timestamps.
    const double oldest = t - span_ - 1e-9;
    while (samples_.front().t < oldest) samples_.pop_front();
  }

  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  double span() const { return span_; }
  double oldest_time() const { return samples_.front().t; }
  double newest_time() const { return samples_.back().t; }

  double mean() const {
    double sum = 0.0;
    for (const auto& s : samples_) sum += s.value;
    return sum / static_cast<double>(samples_.size());
  }

  /// Population variance, two-pass.
  double variance() const {
    const double m = mean();
    double acc = 0.0;
    for (const auto& s : samples_) acc += (s.value - m) * (s.value - m);
    return acc / static_cast<double>(samples_.size());
  }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.value);
    return out;
  }

 private:
  struct Sample {
    double t;
    double value;
  };
  double span_;
  std::deque<Sample> samples_;
};

struct PerceivedOther {
  double position = 0.0;
  double perceived_velocity = 0.0;
  AccelerationMemory memory;
};

}  // namespace cei
