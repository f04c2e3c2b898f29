#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "uavrelay/pipeline.hpp"
#include "uavrelay/policy_io.hpp"

using namespace uavrelay;

namespace {

const policy::PolicyArtifact& solved() {
  static const policy::PolicyArtifact art = solve_policy(fixture::toy_config());
  return art;
}

}  // namespace

TEST(PolicyIo, RoundTripIsLossless) {
  const auto& a = solved();
  std::stringstream ss;
  policy::write_policy(ss, a);
  const auto b = policy::read_policy(ss);
  EXPECT_EQ(b.config_hash, a.config_hash);
  EXPECT_EQ(b.dual.nu, a.dual.nu);
  EXPECT_EQ(b.dual.g_value, a.dual.g_value);
  EXPECT_EQ(b.grids.radii, a.grids.radii);
  EXPECT_EQ(b.wait_distribution, a.wait_distribution);
  EXPECT_EQ(b.policy.wait_radial_velocity, a.policy.wait_radial_velocity);
  EXPECT_EQ(b.policy.comm_end_idx, a.policy.comm_end_idx);
  EXPECT_EQ(b.policy.comm_xi, a.policy.comm_xi);
  EXPECT_EQ(b.policy.comm_trajectory, a.policy.comm_trajectory);
  ASSERT_EQ(b.policy.trajectories.size(), a.policy.trajectories.size());
  for (std::size_t t = 0; t < a.policy.trajectories.size(); ++t) {
    EXPECT_EQ(b.policy.trajectories[t].segment_speeds, a.policy.trajectories[t].segment_speeds);
    EXPECT_EQ(b.policy.trajectories[t].duration_s, a.policy.trajectories[t].duration_s);
  }
  EXPECT_EQ(b.hover_radius(), a.hover_radius());
}

TEST(PolicyIo, EveryRelayStateReferencesATrajectory) {
  const auto& a = solved();
  for (std::size_t s = 0; s < a.policy.comm_xi.size(); ++s) {
    if (a.policy.comm_xi[s] == 1) {
      ASSERT_GE(a.policy.comm_trajectory[s], 0);
      EXPECT_LT(static_cast<std::size_t>(a.policy.comm_trajectory[s]), a.policy.trajectories.size());
    } else {
      EXPECT_EQ(a.policy.comm_trajectory[s], -1);
    }
  }
}

TEST(PolicyIo, RejectsDamagedFiles) {
  std::stringstream ss;
  policy::write_policy(ss, solved());
  const std::string text = ss.str();

  std::istringstream empty("");
  EXPECT_THROW(policy::read_policy(empty), std::runtime_error);

  // Drop the last record: the artifact is incomplete.
  const std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  std::istringstream t(truncated);
  EXPECT_THROW(policy::read_policy(t), std::runtime_error);

  std::string wrong = text;
  wrong.replace(wrong.find("uavrelay-policy"), 15, "something-else!");
  std::istringstream w(wrong);
  EXPECT_THROW(policy::read_policy(w), std::runtime_error);
}
