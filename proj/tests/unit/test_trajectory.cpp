#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "uavrelay/trajectory.hpp"

using namespace uavrelay;
using namespace uavrelay::traj;

namespace {

class ConstantRates final : public RateModel {
 public:
  ConstantRates(double gu, double ub) : gu_(gu), ub_(ub) {}
  double ground_to_uav(double) const override { return gu_; }
  double uav_to_base(double) const override { return ub_; }

 private:
  double gu_, ub_;
};

// Rates that fall off linearly with distance, so the hover tail has a
// position-dependent but constant rate.
class LinearRates final : public RateModel {
 public:
  double ground_to_uav(double r) const override { return 2e6 - 1e3 * r; }
  double uav_to_base(double r) const override { return 1e6 - 5e2 * r; }
};

}  // namespace

TEST(Geometry, PolarRoundTrip) {
  const Polar p{250.0, 2.0};
  const Polar q = to_polar(to_cartesian(p));
  EXPECT_NEAR(q.radius, 250.0, 1e-9);
  EXPECT_NEAR(q.angle, 2.0, 1e-12);
  EXPECT_NEAR(distance({100.0, 0.0}, {100.0, std::numbers::pi}), 200.0, 1e-9);
  EXPECT_NEAR(wrap_angle(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
}

TEST(TransferSchedule, HoverOnlyIsClosedForm) {
  const power::PowerModelParams pw;
  const ConstantRates rates(2e5, 1e5);
  const std::vector<Polar> wp{{300.0, 0.0}, {300.0, 0.0}};
  const std::vector<double> v{10.0};
  const auto s = transfer_schedule(wp, v, {500.0, 1.0}, rates, pw, 1e6, 1000.0);
  ASSERT_TRUE(s.feasible);
  EXPECT_NEAR(s.switch_time_s, 5.0, 1e-9);
  EXPECT_NEAR(s.duration_s, 15.0, 1e-9);
  EXPECT_NEAR(s.energy_j, power::hover_power(pw) * 15.0, 1e-6);
  EXPECT_NEAR(s.delivered_fraction, 1.0, 1e-12);
}

TEST(TransferSchedule, FlightThenHover) {
  const power::PowerModelParams pw;
  const ConstantRates rates(2e5, 1e5);
  const std::vector<Polar> wp{{0.0, 0.0}, {100.0, 0.0}};
  const std::vector<double> v{20.0};  // 5 s of flight inside a 15 s transfer
  const auto s = transfer_schedule(wp, v, {0.0, 0.0}, rates, pw, 1e6, 1000.0);
  ASSERT_TRUE(s.feasible);
  EXPECT_NEAR(s.path_time_s, 5.0, 1e-9);
  EXPECT_NEAR(s.duration_s, 15.0, 1e-9);
  EXPECT_NEAR(s.energy_j, power::mobility_power(20.0, pw) * 5.0 + power::hover_power(pw) * 10.0, 1e-6);
}

TEST(TransferSchedule, LongPathSetsTheDelay) {
  const power::PowerModelParams pw;
  const ConstantRates rates(2e6, 2e6);
  const std::vector<Polar> wp{{0.0, 0.0}, {500.0, 0.0}};
  const std::vector<double> v{10.0};
  const auto s = transfer_schedule(wp, v, {0.0, 0.0}, rates, pw, 1e6, 1000.0);
  ASSERT_TRUE(s.feasible);
  EXPECT_NEAR(s.switch_time_s, 0.5, 1e-9);
  EXPECT_NEAR(s.duration_s, 50.0, 1e-9);
  EXPECT_NEAR(s.energy_j, power::mobility_power(10.0, pw) * 50.0, 1e-6);
}

TEST(TransferSchedule, DistanceDependentHoverRates) {
  const power::PowerModelParams pw;
  const LinearRates rates;
  const Polar uav{400.0, 0.0};
  const Polar gn{400.0, std::numbers::pi / 2.0};
  const std::vector<Polar> wp{uav, uav};
  const std::vector<double> v{5.0};
  const auto s = transfer_schedule(wp, v, gn, rates, pw, 1e6, 1000.0);
  const double tp = 1e6 / rates.ground_to_uav(distance(uav, gn));
  const double tb = 1e6 / rates.uav_to_base(400.0);
  EXPECT_NEAR(s.switch_time_s, tp, 1e-9);
  EXPECT_NEAR(s.duration_s, tp + tb, 1e-9);
}

TEST(TransferSchedule, HorizonOverrunIsInfeasible) {
  const power::PowerModelParams pw;
  const ConstantRates rates(1e3, 1e3);
  const std::vector<Polar> wp{{0.0, 0.0}, {0.0, 0.0}};
  const std::vector<double> v{5.0};
  const auto s = transfer_schedule(wp, v, {0.0, 0.0}, rates, pw, 1e6, 1000.0);
  EXPECT_FALSE(s.feasible);
  EXPECT_LT(s.delivered_fraction, 1.0);
}

class DesignerTest : public ::testing::Test {
 protected:
  DesignerTest() : links_(channel::LinkBudget::Spec{}), rates_(links_) {
    env_.rates = &rates_;
    cfg_.swarm_size = 16;
    cfg_.max_cost_evaluations = 400;
    cfg_.waypoint_count = 3;
  }
  channel::LinkBudget links_;
  LinkBudgetRates rates_;
  RelayEnvironment env_;
  cso::CsoConfig cfg_;
};

TEST_F(DesignerTest, DecodePinsStartAndEndRadius) {
  const TrajectoryDesigner d(env_, cfg_);
  EXPECT_EQ(d.dimension(), 3 * 3 + 2u);
  const RelayTask task{{100.0, 0.3}, {800.0, 2.0}, 250.0};
  const auto b = d.bounds();
  std::vector<double> x(d.dimension());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * (b.lower[i] + b.upper[i]);
  const Trajectory t = d.decode(x, task);
  ASSERT_EQ(t.waypoints.size(), 3 + 2u);
  EXPECT_EQ(t.waypoints.front().radius, 100.0);
  EXPECT_EQ(t.waypoints.front().angle, 0.3);
  EXPECT_EQ(t.waypoints.back().radius, 250.0);
  EXPECT_EQ(t.segment_speeds.size(), 4u);
}

TEST_F(DesignerTest, DesignedTrajectoriesMeetTheConstraints) {
  const TrajectoryDesigner d(env_, cfg_);
  const RelayTask tasks[] = {{{0.0, 0.0}, {900.0, 1.0}, 0.0},
                             {{400.0, 0.0}, {700.0, -2.5}, 400.0},
                             {{100.0, 0.0}, {500.0, 3.0}, 1000.0}};
  std::uint64_t seed = 1;
  for (const auto& task : tasks) {
    const DesignResult r = d.design(task, 1e-4, seed++);
    ASSERT_TRUE(std::isfinite(r.cost));
    ASSERT_TRUE(r.feasible);
    EXPECT_EQ(r.trajectory.waypoints.back().radius, task.end_radius);
    for (double v : r.trajectory.segment_speeds) EXPECT_LE(v, env_.v_max);
    const auto s = transfer_schedule(r.trajectory.waypoints, r.trajectory.segment_speeds, task.gn, rates_,
                                     env_.power, env_.payload_bits, env_.horizon_s);
    EXPECT_GE(s.delivered_fraction, 1.0 - 1e-6);
    EXPECT_NEAR(s.duration_s, r.delay_s, 1e-9);
    EXPECT_NEAR(s.energy_j, r.energy_j, 1e-6);
    // The design never loses to hovering in place when the end radius allows it.
    EXPECT_GT(r.delay_s, 0.0);
  }
}

TEST_F(DesignerTest, RetimeKeepsGeometry) {
  const TrajectoryDesigner d(env_, cfg_);
  const RelayTask task{{300.0, 0.0}, {600.0, 0.5}, 300.0};
  const DesignResult r = d.design(task, 0.0, 3);
  const Trajectory t = retime(r.trajectory, task.gn, env_);
  EXPECT_NEAR(t.duration_s, r.delay_s, 1e-9);
  const Trajectory far = retime(r.trajectory, {1000.0, 3.0}, env_);
  EXPECT_EQ(far.waypoints.size(), r.trajectory.waypoints.size());
  std::ostringstream os;
  write_trajectory_csv(os, t, 1.0);
  EXPECT_EQ(os.str().rfind("t,radius,angle,speed,phase\n", 0), 0u);
}
