#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "cei/belief.hpp"

using namespace cei;

namespace {

double mixture_density(double x, const BeliefPoint& p) {
  auto pdf = [](double z, double s) { return std::exp(-0.5 * z * z / (s * s)) / (s * std::sqrt(2.0 * M_PI)); };
  return 0.5 * pdf(x - p.mu, p.sigma) + 0.5 * pdf(x - p.mu, p.sigma * std::sqrt(p.phi));
}

// Composite Simpson rule on [a, b].
double simpson(const BeliefPoint& p, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = mixture_density(a, p) + mixture_density(b, p);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * mixture_density(a + i * h, p);
  return s * h / 3.0;
}

AccelerationMemory memory_of(const std::vector<double>& values) {
  AccelerationMemory m(4.0);
  for (std::size_t i = 0; i < values.size(); ++i) m.push(values[i], 0.05 * static_cast<double>(i));
  return m;
}

}  // namespace

TEST(ExpectedAcceleration, VarianceFloorOnly) {
  const auto e = expected_acceleration(memory_of(std::vector<double>(20, 0.0)), 1.0);
  EXPECT_EQ(e.mean, 0.0);
  EXPECT_NEAR(e.stddev, 1.0 / 3.0, 1e-15);
}

TEST(ExpectedAcceleration, AlternatingSamples) {
  std::vector<double> v;
  for (int i = 0; i < 40; ++i) v.push_back(i % 2 ? 1.0 : -1.0);
  const auto e = expected_acceleration(memory_of(v), 1.0);
  // Brute-force two-pass population variance.
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= v.size();
  EXPECT_NEAR(e.mean, 0.0, 1e-15);
  EXPECT_NEAR(e.stddev * e.stddev, 1.0 / 9.0 + var, 1e-12);
  EXPECT_NEAR(e.stddev * e.stddev, 1.0 / 9.0 + 1.0, 1e-12);
}

TEST(ExpectedAcceleration, ConstantHalf) {
  const auto e = expected_acceleration(memory_of(std::vector<double>(10, 0.5)), 1.0);
  EXPECT_NEAR(e.mean, 0.5, 1e-15);
  EXPECT_NEAR(e.stddev, 1.0 / 3.0, 1e-12);
}

TEST(ExpectedAcceleration, EmptyMemoryThrows) {
  EXPECT_THROW(expected_acceleration(AccelerationMemory(4.0), 1.0), MissingObservationError);
}

TEST(ProjectBeliefPoint, Examples) {
  const AccelerationExpectation e{0.0, 1.0 / 3.0};
  const auto p0 = project_belief_point(7.0, 10.0, e, 3.0, 3.0, 3.0);
  EXPECT_EQ(p0.mu, 7.0);
  EXPECT_EQ(p0.sigma, 0.0);
  const auto p2 = project_belief_point(0.0, 10.0, e, 2.0, 0.0, 3.0);
  EXPECT_DOUBLE_EQ(p2.mu, 20.0);
  EXPECT_NEAR(p2.sigma * p2.sigma, 2.0 / 9.0, 1e-15);
  EXPECT_THROW(project_belief_point(0.0, 10.0, e, 1.0, 2.0, 3.0), std::invalid_argument);
}

TEST(BuildBelief, DefaultsGive24Points) {
  PerceivedOther other{50.0, 10.0, memory_of({0.0})};
  const auto b = build_belief(other, BeliefSettings{}, 2.0);
  ASSERT_EQ(b.points.size(), 24u);
  EXPECT_NEAR(b.points.back().t, 8.0, 1e-12);
  for (std::size_t k = 0; k < b.points.size(); ++k) {
    EXPECT_NEAR(b.points[k].mu, 50.0 + 2.5 * static_cast<double>(k + 1), 1e-12);
  }
  EXPECT_NEAR(b.points.back().mu, 110.0, 1e-12);
}

TEST(BuildBelief, StationaryOther) {
  PerceivedOther other{42.0, 0.0, memory_of({0.0, 0.0})};
  for (const auto& p : build_belief(other, BeliefSettings{}, 0.0).points) EXPECT_EQ(p.mu, 42.0);
}

TEST(MixtureMass, Normalization) {
  const BeliefPoint p{0.0, 3.0, 1.5, 3.0};
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(mixture_mass(p, -inf, inf), 1.0, 1e-15);
  EXPECT_NEAR(mixture_mass(p, 3.0, inf), 0.5, 1e-15);
}

TEST(MixtureMass, DegeneratePointIsIndicator) {
  const BeliefPoint p{0.0, 101.0, 0.0, 3.0};
  EXPECT_EQ(mixture_mass(p, 100.0, 102.5), 1.0);
  EXPECT_EQ(mixture_mass(p, 101.0, 102.5), 0.0);  // open interval
  EXPECT_EQ(mixture_mass(p, 102.0, 103.0), 0.0);
}

TEST(MixtureMass, ClosedFormExample) {
  const BeliefPoint p{0.0, 0.0, 1.0, 3.0};
  const double narrow = std::erf(1.0 / std::sqrt(2.0));
  const double wide = std::erf(1.0 / std::sqrt(6.0));
  EXPECT_NEAR(mixture_mass(p, -1.0, 1.0), 0.5 * narrow + 0.5 * wide, 1e-14);
  EXPECT_NEAR(mixture_mass(p, -1.0, 1.0), 0.55949, 1e-5);
}

// Oracle: Simpson quadrature of the mixture density, 1e-6 agreement.
TEST(MixtureMass, AgreesWithQuadrature) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mu(90.0, 120.0), sigma(0.05, 6.0), lo(85.0, 125.0), w(0.1, 12.0);
  for (int i = 0; i < 200; ++i) {
    const BeliefPoint p{0.0, mu(rng), sigma(rng), 3.0};
    const double a = lo(rng);
    const double b = a + w(rng);
    EXPECT_NEAR(mixture_mass(p, a, b), simpson(p, a, b), 1e-6) << p.mu << " " << p.sigma << " " << a << " " << b;
  }
}
