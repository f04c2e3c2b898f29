#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "uavrelay/swarm.hpp"

using namespace uavrelay;
using namespace uavrelay::swarm;

namespace {

ControlFrame bid(std::uint16_t id, double cost) {
  return {id, true, 1, {100.0, 0.5}, traj::Polar{700.0, -1.0}, cost};
}

}  // namespace

TEST(Frames, RoundTripBothLayouts) {
  const ControlFrame waiting{7, false, 99, {123.5, -0.25}, std::nullopt, std::nullopt};
  const auto wb = encode_frame(waiting);
  EXPECT_EQ(wb.size(), kWaitingFrameBytes);
  EXPECT_EQ(decode_frame(wb), waiting);

  const ControlFrame available = bid(3, 12.75);
  const auto ab = encode_frame(available);
  EXPECT_EQ(ab.size(), kAvailableFrameBytes);
  EXPECT_EQ(decode_frame(ab), available);

  // Little-endian sender id up front.
  EXPECT_EQ(ab[0], 3);
  EXPECT_EQ(ab[1], 0);
  EXPECT_EQ(ab[2], 0b11);
}

TEST(Frames, InfiniteCostSurvivesTheWire) {
  const ControlFrame f = bid(2, std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isinf(*decode_frame(encode_frame(f)).cost_of_service));
}

TEST(Frames, RejectsMalformedInput) {
  auto b = encode_frame(bid(1, 1.0));
  std::vector<std::uint8_t> short_frame(b.begin(), b.begin() + 30);
  EXPECT_THROW(decode_frame(short_frame), FrameError);
  auto bad_flags = b;
  bad_flags[2] = 0b01;  // available without GN data
  EXPECT_THROW(decode_frame(bad_flags), FrameError);
  bad_flags[2] = 0b111;
  EXPECT_THROW(decode_frame(bad_flags), FrameError);

  ControlFrame half = bid(1, 1.0);
  half.cost_of_service.reset();
  EXPECT_THROW(half.validate(), FrameError);
  EXPECT_THROW(encode_frame(half), FrameError);
}

TEST(Consensus, LowestCostThenLowestId) {
  const std::vector<ControlFrame> f{bid(4, 9.0), bid(2, 3.0), bid(5, 3.0), bid(0, 10.0)};
  EXPECT_EQ(resolve_conflict(f), 2);
  const std::vector<ControlFrame> tie{bid(1, 5.0), bid(0, 5.0)};
  EXPECT_EQ(resolve_conflict(tie), kBaseStationId);
}

TEST(Consensus, OrderDoesNotMatter) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> n_dist(1, 12), cost_dist(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ControlFrame> f;
    const int n = n_dist(rng);
    for (int k = 0; k < n; ++k) f.push_back(bid(static_cast<std::uint16_t>(k), cost_dist(rng)));
    const auto first = resolve_conflict(f);
    for (int o = 0; o < 5; ++o) {
      std::shuffle(f.begin(), f.end(), rng);
      EXPECT_EQ(resolve_conflict(f), first);
    }
  }
}

TEST(Consensus, RejectsUnusableInput) {
  EXPECT_THROW(resolve_conflict({}), std::invalid_argument);
  std::vector<ControlFrame> f{bid(1, std::nan(""))};
  EXPECT_THROW(resolve_conflict(f), std::invalid_argument);
  std::vector<ControlFrame> w{{1, false, 0, {}, std::nullopt, std::nullopt}};
  EXPECT_THROW(resolve_conflict(w), std::invalid_argument);
}

TEST(Spread, MovesAwayFromTheNearestPeer) {
  const AgentStatus self{1, AgentKind::Uav, AgentPhase::Waiting, {300.0, 0.0}, 0.0};
  const AgentStatus ahead{2, AgentKind::Uav, AgentPhase::Waiting, {300.0, 0.2}, 0.0};
  const AgentStatus behind{2, AgentKind::Uav, AgentPhase::Waiting, {300.0, -0.2}, 0.0};
  EXPECT_EQ(spread_direction(self, std::span(&ahead, 1), 0.05), -1);
  EXPECT_EQ(spread_direction(self, std::span(&behind, 1), 0.05), +1);
  EXPECT_EQ(spread_direction(self, {}, 0.05), +1);
  // Opposite peer: both directions are equally good, so +1.
  const AgentStatus opposite{2, AgentKind::Uav, AgentPhase::Waiting, {300.0, std::numbers::pi}, 0.0};
  EXPECT_EQ(spread_direction(self, std::span(&opposite, 1), 0.05), +1);
}

TEST(Spread, ControllerHoldsAfterAFlip) {
  SpreadController c(3);
  const AgentStatus self{1, AgentKind::Uav, AgentPhase::Waiting, {300.0, 0.0}, 0.0};
  const AgentStatus ahead{2, AgentKind::Uav, AgentPhase::Waiting, {300.0, 0.2}, 0.0};
  const AgentStatus behind{2, AgentKind::Uav, AgentPhase::Waiting, {300.0, -0.2}, 0.0};
  EXPECT_EQ(c.step(self, std::span(&ahead, 1), 0.05), -1);
  // The flip to +1 counts as the first of three held steps.
  EXPECT_EQ(c.step(self, std::span(&behind, 1), 0.05), +1);
  EXPECT_EQ(c.step(self, std::span(&ahead, 1), 0.05), +1);
  EXPECT_EQ(c.step(self, std::span(&ahead, 1), 0.05), +1);
  EXPECT_EQ(c.step(self, std::span(&ahead, 1), 0.05), -1);
  EXPECT_EQ(c.current_sign(), -1);
}

TEST(Swarm, EffectiveArrivalRate) {
  EXPECT_DOUBLE_EQ(effective_arrival_rate(3, 0.3), 0.1);
  EXPECT_THROW(effective_arrival_rate(0, 0.3), std::invalid_argument);
}
