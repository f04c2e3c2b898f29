#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "uavrelay/power.hpp"

using namespace uavrelay::power;

TEST(Power, HoverIsTheSumOfProfileAndInduced) {
  const PowerModelParams p;
  EXPECT_NEAR(mobility_power(0.0, p), hover_power(p), 1e-9);
  EXPECT_NEAR(hover_power(p), 1430.0, 1e-9);
}

TEST(Power, MinimizerAgreesWithGrid) {
  const PowerModelParams p;
  const double v = power_min_velocity(p, 55.0);
  const double grid = oracle::grid_min_power_speed(p, 55.0);
  EXPECT_NEAR(v, 22.0, 0.5);
  EXPECT_NEAR(v, grid, 55.0 / 9999.0 + 1e-3);
  EXPECT_LT(mobility_power(v, p), hover_power(p));
}

TEST(Power, MinimizerRespectsTheSpeedCap) {
  const PowerModelParams p;
  EXPECT_NEAR(power_min_velocity(p, 10.0), 10.0, 1e-3);
}

TEST(Power, ConvexAroundTheMinimum) {
  const PowerModelParams p;
  const double v = power_min_velocity(p, 55.0);
  EXPECT_LT(mobility_power(v, p), mobility_power(v - 5.0, p));
  EXPECT_LT(mobility_power(v, p), mobility_power(v + 5.0, p));
  EXPECT_GT(mobility_power(55.0, p), hover_power(p));
}

TEST(Power, RejectsBadInput) {
  const PowerModelParams p;
  EXPECT_THROW(mobility_power(-1.0, p), std::domain_error);
  EXPECT_THROW(mobility_power(std::nan(""), p), std::domain_error);
  PowerModelParams bad;
  bad.tip_speed_mps = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
