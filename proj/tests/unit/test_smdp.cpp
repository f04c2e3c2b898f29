#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "uavrelay/config.hpp"
#include "uavrelay/smdp.hpp"

using namespace uavrelay;
using namespace uavrelay::smdp;

namespace {

struct Rig {
  explicit Rig(const RunConfig& c) : cfg(c), links(link_spec(c)), solver(make_problem(c, links)) {}
  RunConfig cfg;
  channel::LinkBudget links;
  Solver solver;
};

}  // namespace

TEST(SmdpPrimitives, WaitStageCost) {
  const power::PowerModelParams pw;
  EXPECT_EQ(wait_stage_cost(100.0, 10.0, 0.1, 0.0, pw, 1200.0, 1.0, 55.0), 0.0);
  const double c = wait_stage_cost(0.0, 0.0, 0.0, 1e-3, pw, 1200.0, 2.0, 55.0);
  EXPECT_NEAR(c, 1e-3 * (1430.0 - 1200.0) * 2.0, 1e-12);
  EXPECT_THROW(wait_stage_cost(100.0, 50.0, 0.5, 1e-3, pw, 1200.0, 1.0, 55.0), std::domain_error);
}

TEST(SmdpPrimitives, AngularSpeedSeeksMinimumPower) {
  const power::PowerModelParams pw;
  EXPECT_EQ(optimal_angular_velocity(0.0, 0.0, 55.0, pw), 0.0);
  const double v_star = power::power_min_velocity(pw, 55.0);
  const double th = optimal_angular_velocity(500.0, 0.0, 55.0, pw, 2001);
  EXPECT_NEAR(500.0 * th, v_star, 55.0 / 2000.0 + 1e-9);
  // At full radial speed no tangential speed is left.
  EXPECT_EQ(optimal_angular_velocity(500.0, 55.0, 55.0, pw), 0.0);
  // Tangential speed can never push the total past the cap.
  const double t2 = optimal_angular_velocity(10.0, 50.0, 55.0, pw);
  EXPECT_LE(std::hypot(50.0, 10.0 * t2), 55.0 + 1e-9);
}

TEST(SmdpPrimitives, SchedulingDecision) {
  EXPECT_EQ(scheduling_decision(5.0, 3.0, true).xi, 1);
  EXPECT_EQ(scheduling_decision(3.0, 3.0, true).xi, 0);
  EXPECT_EQ(scheduling_decision(1.0, 3.0, false).xi, 1);
  EXPECT_DOUBLE_EQ(scheduling_decision(1.0, 3.0, false).cost, 3.0);
}

TEST(SmdpPrimitives, DirectCostIsPayloadOverRate) {
  const channel::LinkBudget lb(channel::LinkBudget::Spec{});
  EXPECT_NEAR(comm_cost_direct(600.0, lb, 1e6), 1e6 / lb.throughput_gb(600.0), 1e-12);
}

TEST(SmdpGrids, Layout) {
  Discretization d;
  d.n_radii = 5;
  d.n_radial_velocities = 5;
  d.n_angles = 6;
  d.n_end_radii = 3;
  const Grids g = Grids::build(d, 1000.0, 55.0);
  EXPECT_EQ(g.radii.back(), 1000.0);
  EXPECT_EQ(g.radial_velocities[2], 0.0);
  EXPECT_NEAR(std::accumulate(g.gn_bin_mass.begin(), g.gn_bin_mass.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(g.end_radius_indices, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(g.end_options(1), (std::vector<std::size_t>{0, 1, 2, 4}));
  EXPECT_EQ(g.nearest_radius(380.0), 2u);
  EXPECT_EQ(g.nearest_radius(-5.0), 0u);
  EXPECT_EQ(g.nearest_angle(-0.1), 0u);
  EXPECT_EQ(g.nearest_angle(2.0 * std::numbers::pi - 0.01), 0u);
  EXPECT_EQ(g.canonical_angle(5), 1u);
  EXPECT_EQ(g.canonical_angle(3), 3u);
  EXPECT_EQ(g.unique_angles(), 4u);
}

TEST(SmdpGrids, ValidationGuardsTheStepSize) {
  Discretization d;
  EXPECT_NO_THROW(d.validate(1.0 / 60.0));
  d.wait_step_s = 10.0;
  EXPECT_THROW(d.validate(1.0 / 60.0), std::invalid_argument);
  d = {};
  d.n_radii = 1;
  EXPECT_THROW(d.validate(1.0 / 60.0), std::invalid_argument);
}

TEST(SmdpTransitions, MassIsConserved) {
  Discretization d;
  d.n_radii = 5;
  d.n_angles = 4;
  d.n_end_radii = 3;
  const Grids g = Grids::build(d, 1000.0, 55.0);
  const double rate = 1.0 / 60.0;
  const auto t = wait_transition(g, {2}, 30.0, rate, 1.0);
  EXPECT_NEAR(t.stay_waiting, std::exp(-rate), 1e-15);
  double total = 0.0;
  for (const auto& [s, w] : t.wait) total += w;
  for (const auto& [s, w] : t.comm) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  double split = 0.0, mean = 0.0;
  for (const auto& [r, w] : t.next_radius) {
    split += w;
    mean += w * g.radii[r];
  }
  EXPECT_NEAR(split, 1.0, 1e-12);
  EXPECT_NEAR(mean, 530.0, 1e-9);  // the split keeps the expected radius
}

TEST(SmdpSolver, ValueIterationMatchesBruteForce) {
  Rig rig(fixture::brute_force_config());
  const double nus[] = {0.0, 2e-4, 1e-3, 4e-3, 1e-2};
  for (double nu : nus) rig.solver.design_bucket(nu);
  for (double nu : nus) {
    const Solution s = rig.solver.value_iteration(nu, nullptr, 1e-11, 1000000);
    ASSERT_TRUE(s.converged);
    const double ref = oracle::brute_force_gain(rig.solver, nu);
    EXPECT_NEAR(s.dual.g_value, ref, 1e-6 * std::max(1.0, std::abs(ref))) << "nu=" << nu;
  }
}

TEST(SmdpSolver, GainIsConcaveInNuOnAFixedLibrary) {
  Rig rig(fixture::toy_config());
  std::vector<double> nus;
  for (int k = 0; k < 10; ++k) nus.push_back(1e-3 * k);
  for (double nu : nus) rig.solver.design_bucket(nu);
  std::vector<double> g;
  for (double nu : nus) g.push_back(rig.solver.value_iteration(nu, nullptr, 1e-10).dual.g_value);
  for (std::size_t k = 1; k + 1 < g.size(); ++k) {
    EXPECT_GE(g[k] + 1e-6, 0.5 * (g[k - 1] + g[k + 1])) << "k=" << k;
  }
}

TEST(SmdpSolver, LagrangianDecomposes) {
  Rig rig(fixture::toy_config());
  rig.solver.design_bucket(2e-3);
  const Solution s = rig.solver.value_iteration(2e-3);
  const double p_avg = rig.cfg.cell.p_avg_w;
  const auto& d = s.dual;
  EXPECT_NEAR(d.g_value, d.avg_delay_per_stage + 2e-3 * (d.avg_energy_per_stage - p_avg * d.avg_time_per_stage),
              1e-9 * std::abs(d.g_value));
  EXPECT_NEAR(std::accumulate(s.wait_distribution.begin(), s.wait_distribution.end(), 0.0), 1.0, 1e-9);
  EXPECT_GE(s.relay_fraction, 0.0);
  EXPECT_LE(s.relay_fraction, 1.0 + 1e-12);
}

TEST(SmdpSolver, ChainSimulationAgreesWithExactEvaluation) {
  Rig rig(fixture::toy_config());
  rig.solver.design_bucket(0.0);
  const Solution s = rig.solver.value_iteration(0.0);
  const ChainStats st = simulate_policy_chain(rig.solver, s, 20000, 5);
  EXPECT_NEAR(st.mean_delay, s.dual.avg_delay_per_stage, 4.0 * st.delay_stderr + 0.02 * s.dual.avg_delay_per_stage);
  EXPECT_NEAR(st.mean_time, s.dual.avg_time_per_stage, 0.05 * s.dual.avg_time_per_stage);
}

TEST(SmdpSolver, DualAscentMeetsThePowerBudget) {
  RunConfig c = fixture::toy_config();
  c.cell.p_avg_w = 1050.0;  // tight enough to bind
  Rig rig(c);
  const DualResult r = rig.solver.dual_ascent(c.dual);
  const auto& d = r.solution.dual;
  EXPECT_TRUE(r.constraint_slack || d.nu < 1e-6 || r.residual_fraction <= c.dual.tolerance)
      << "nu=" << d.nu << " residual=" << r.residual_fraction;
  EXPECT_LE(d.avg_energy_per_stage, c.cell.p_avg_w * d.avg_time_per_stage * (1.0 + c.dual.tolerance));
}

TEST(SmdpSolver, ReturnedPolicyRespectsTheBudgetAcrossBudgets) {
  for (double p_avg : {1000.0, 1100.0, 1200.0, 1300.0, 1420.0}) {
    RunConfig c = fixture::toy_config();
    c.cell.p_avg_w = p_avg;
    c.cell.n_uavs = 3;
    Rig rig(c);
    const DualResult r = rig.solver.dual_ascent(c.dual);
    const auto& d = r.solution.dual;
    EXPECT_LE(d.avg_energy_per_stage, p_avg * d.avg_time_per_stage * (1.0 + c.dual.tolerance))
        << "p_avg=" << p_avg << " nu=" << d.nu;
    if (r.constraint_slack) EXPECT_EQ(d.nu, 0.0);
  }
}

TEST(SmdpSolver, InfeasibleBudgetIsReported) {
  RunConfig c = fixture::toy_config();
  c.cell.p_avg_w = 900.0;  // below the minimum flight power
  Rig rig(c);
  EXPECT_THROW(rig.solver.dual_ascent(c.dual), InfeasibleConstraint);
}

TEST(SmdpSolver, CandidateTrajectoriesMirrorWithTheAngle) {
  RunConfig c = fixture::toy_config();
  Rig rig(c);
  rig.solver.design_bucket(0.0);
  const auto r = rig.solver.comm_cost_relay({1, 4, 1}, 1, 0.0);
  ASSERT_GE(r.candidate, 0);
  const auto a = rig.solver.candidate_trajectory(r.candidate, {1, 4, 1});
  const auto b = rig.solver.candidate_trajectory(r.candidate, {1, 4, 3});
  ASSERT_EQ(a.waypoints.size(), b.waypoints.size());
  for (std::size_t w = 0; w < a.waypoints.size(); ++w) {
    EXPECT_NEAR(a.waypoints[w].radius, b.waypoints[w].radius, 1e-12);
    EXPECT_NEAR(traj::wrap_angle(a.waypoints[w].angle + b.waypoints[w].angle), 0.0, 1e-9);
  }
  EXPECT_NEAR(a.duration_s, b.duration_s, 1e-9);
}
