#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "uavrelay/channel.hpp"

using namespace uavrelay::channel;

TEST(Marcum, ZeroNoncentralityIsRayleighTail) {
  for (double b = 0.0; b <= 20.0; b += 0.05) {
    EXPECT_NEAR(marcum_q1(0.0, b), std::exp(-0.5 * b * b), 1e-12) << "b=" << b;
  }
}

TEST(Marcum, MatchesBoostNoncentralChiSquare) {
  const double as[] = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 15.0};
  const double bs[] = {0.0, 0.3, 1.0, 2.5, 5.0, 9.0, 16.0};
  for (double a : as) {
    for (double b : bs) {
      EXPECT_NEAR(marcum_q1(a, b), oracle::marcum_q1_boost(a, b), 1e-9) << a << "," << b;
    }
  }
}

TEST(Marcum, MonteCarloBand) {
  const std::pair<double, double> pairs[] = {{0.5, 1.0}, {1.0, 2.0}, {2.0, 2.0}, {3.0, 1.5}, {1.5, 3.5}};
  std::uint64_t seed = 7;
  for (auto [a, b] : pairs) {
    const auto mc = oracle::marcum_q1_monte_carlo(a, b, 200000, seed++);
    EXPECT_LE(std::abs(marcum_q1(a, b) - mc.estimate), 3.0 * mc.sigma + 1e-12) << a << "," << b;
  }
}

TEST(Marcum, Bounds) {
  EXPECT_DOUBLE_EQ(marcum_q1(3.0, 0.0), 1.0);
  EXPECT_LT(marcum_q1(1.0, 40.0), 1e-300 + 1e-12);
  EXPECT_THROW(marcum_q1(-1.0, 1.0), std::domain_error);
  EXPECT_THROW(marcum_q1(1.0, std::nan("")), std::domain_error);
}

TEST(Channel, OutageMatchesRicianOracle) {
  ChannelParams p;
  const LargeScaleState states[] = {{1e-4, 0.0}, {1e-4, 3.0}, {1e-6, 10.0}, {1e-2, 0.5}};
  for (const auto& ls : states) {
    for (double rate : {1e5, 1e6, 5e6, 2e7}) {
      const double snr = p.ref_snr_linear * ls.gain;
      const double u = p.snr_gap * (std::pow(2.0, rate / p.bandwidth_hz) - 1.0) / snr;
      EXPECT_NEAR(outage_probability(rate, ls, p), oracle::rician_outage(u, ls.k_factor), 1e-9);
    }
  }
  EXPECT_EQ(outage_probability(0.0, states[0], p), 0.0);
  EXPECT_THROW(outage_probability(-1.0, states[0], p), std::domain_error);
}

TEST(Channel, OptimalRateMatchesGridSearch) {
  ChannelParams p;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> log_gain(-8.0, 2.0), kdist(0.0, 20.0);
  for (int n = 0; n < 10; ++n) {
    const LargeScaleState ls{std::pow(10.0, log_gain(rng)), n % 4 == 0 ? 0.0 : kdist(rng)};
    const RateChoice rc = optimal_rate(ls, p);
    const double ref = oracle::grid_search_throughput(ls, p);
    EXPECT_NEAR(rc.throughput_bps, ref, 1e-6 * ref) << "gain=" << ls.gain << " K=" << ls.k_factor;
    EXPECT_NEAR(expected_throughput(rc.rate_bps, ls, p), rc.throughput_bps, 1e-9 * ref);
  }
}

TEST(Channel, DeadChannelCarriesNothing) {
  ChannelParams p;
  const RateChoice rc = optimal_rate({0.0, 0.0}, p);
  EXPECT_EQ(rc.rate_bps, 0.0);
  EXPECT_EQ(rc.throughput_bps, 0.0);
}

TEST(Channel, LosProbabilityIsMonotoneInElevation) {
  ChannelParams p;
  double prev = 0.0;
  for (double phi = 1.0; phi <= 90.0; phi += 1.0) {
    const double pl = los_probability(phi, p);
    EXPECT_GE(pl, prev);
    EXPECT_GE(pl, 0.0);
    EXPECT_LE(pl, 1.0);
    prev = pl;
  }
  EXPECT_THROW(los_probability(0.0, p), std::domain_error);
}

TEST(Channel, GeometryOfTheThreeLinks) {
  const Heights h;
  const auto gb = link_geometry(Link::GroundToBase, 0.0, h);
  EXPECT_DOUBLE_EQ(gb.distance_m, 80.0);
  EXPECT_NEAR(gb.elevation_deg, 90.0, 1e-12);
  const auto ub = link_geometry(Link::UavToBase, 120.0, h);
  EXPECT_NEAR(ub.distance_m, std::hypot(120.0, 120.0), 1e-12);
  EXPECT_NEAR(ub.elevation_deg, 45.0, 1e-9);
  EXPECT_THROW(link_geometry(Link::UavToBase, 10.0, Heights{200.0, 200.0}), std::invalid_argument);
}

TEST(Channel, TableInterpolatesAndClamps) {
  LinkBudget::Spec spec;
  spec.cell_radius_m = 200.0;
  spec.table_step_m = 10.0;
  const LinkBudget lb(spec);
  const auto& t = lb.table(Link::GroundToBase);
  ASSERT_GE(t.values().size(), 2u);
  const double mid = 0.5 * (t.values()[3] + t.values()[4]);
  EXPECT_NEAR(t(35.0), mid, 1e-9 * mid);
  EXPECT_DOUBLE_EQ(t(1e6), t.values().back());
  EXPECT_DOUBLE_EQ(t(-5.0), t.values().front());
  std::ostringstream os;
  t.write_csv(os);
  EXPECT_EQ(os.str().rfind("radius,throughput_bps\n", 0), 0u);
}

TEST(Channel, ThroughputFallsWithDistance) {
  LinkBudget::Spec spec;
  spec.table_step_m = 5.0;
  const LinkBudget lb(spec);
  for (double r = 0.0; r + 50.0 <= 1000.0; r += 50.0) {
    EXPECT_GT(lb.throughput_gb(r), lb.throughput_gb(r + 50.0));
    EXPECT_GT(lb.throughput_gu(r), lb.throughput_gu(r + 50.0));
  }
  // Relaying helps at the cell edge: the UAV link beats the ground-to-BS link.
  EXPECT_GT(lb.throughput_gu(0.0), lb.throughput_gb(1000.0));
}

TEST(Channel, ParamsValidate) {
  ChannelParams p;
  EXPECT_NO_THROW(p.validate());
  p.snr_gap = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.nlos_attenuation = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
