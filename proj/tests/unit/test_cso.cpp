#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "uavrelay/cso.hpp"

using namespace uavrelay::cso;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

Bounds box(std::size_t d, double half) {
  return {std::vector<double>(d, -half), std::vector<double>(d, half)};
}

}  // namespace

TEST(Cso, SolvesTheSphere) {
  CsoConfig c;
  c.max_cost_evaluations = 20000;
  const auto r = cso_minimize(sphere, box(10, 5.0), c, 3);
  EXPECT_LT(r.best_cost, 1e-2);
  EXPECT_DOUBLE_EQ(sphere(r.best), r.best_cost);
}

TEST(Cso, NeverExceedsTheEvaluationBudget) {
  CsoConfig c;
  c.swarm_size = 8;
  c.max_cost_evaluations = 101;
  std::size_t calls = 0;
  const auto r = cso_minimize([&](std::span<const double> x) { ++calls; return sphere(x); }, box(4, 1.0), c, 1);
  EXPECT_LE(calls, 101u);
  EXPECT_EQ(r.evaluations, calls);
}

TEST(Cso, IncumbentNeverWorsens) {
  CsoConfig c;
  c.max_cost_evaluations = 3000;
  const auto r = cso_minimize(sphere, box(6, 3.0), c, 9);
  for (std::size_t i = 1; i < r.incumbent_history.size(); ++i) {
    EXPECT_LE(r.incumbent_history[i], r.incumbent_history[i - 1]);
  }
}

TEST(Cso, StaysInsideTheBox) {
  CsoConfig c;
  c.max_cost_evaluations = 2000;
  // The unconstrained optimum sits outside; the answer must clamp to 1.
  auto shifted = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += (v - 3.0) * (v - 3.0);
    return s;
  };
  bool in_box = true;
  auto watch = [&](std::span<const double> x) {
    for (double v : x) in_box = in_box && v >= -1.0 && v <= 1.0;
    return shifted(x);
  };
  const auto r = cso_minimize(watch, box(3, 1.0), c, 4);
  EXPECT_TRUE(in_box);
  for (double v : r.best) EXPECT_NEAR(v, 1.0, 0.05);
}

TEST(Cso, SeedsAreUsedAndRunsAreDeterministic) {
  CsoConfig c;
  c.swarm_size = 4;
  c.max_cost_evaluations = 4;
  const std::vector<std::vector<double>> init{{0.0, 0.0}};
  const auto r = cso_minimize(sphere, box(2, 1.0), c, 5, init);
  EXPECT_EQ(r.best_cost, 0.0);

  c.max_cost_evaluations = 500;
  const auto a = cso_minimize(sphere, box(5, 2.0), c, 42);
  const auto b = cso_minimize(sphere, box(5, 2.0), c, 42);
  EXPECT_EQ(a.best, b.best);
}

TEST(Cso, RejectsBadConfig) {
  CsoConfig c;
  c.swarm_size = 7;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  Bounds b{{0.0}, {-1.0}};
  EXPECT_THROW(b.validate(), std::invalid_argument);
}
