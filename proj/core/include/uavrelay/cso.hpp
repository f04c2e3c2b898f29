#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace uavrelay::cso {

/// Box bounds for the search vector.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const noexcept { return lower.size(); }
  void validate() const;
};

struct CsoConfig {
  std::size_t swarm_size = 64;
  std::size_t max_cost_evaluations = 10000;
  double social_factor = 0.1;
  // Trajectory design knobs; unused by the bare optimizer.
  std::size_t waypoint_count = 8;
  double penalty_weight_payload = 1e6;
  double penalty_weight_speed = 1e6;

  void validate() const;
};

struct CsoResult {
  std::vector<double> best;
  double best_cost = 0.0;
  std::size_t evaluations = 0;
  /// Incumbent cost after the initial swarm and after every pairing round.
  std::vector<double> incumbent_history;
};

using CostFunction = std::function<double(std::span<const double>)>;

/// Competitive swarm optimization (pairwise competition, losers learn).
///
/// Each round pairs the particles at random. Winners pass through untouched;
/// each loser gets
///   v <- r1 v + r2 (x_winner - x) + social r3 (x_mean - x),  x <- clamp(x + v)
/// with fresh uniform r1, r2, r3 per coordinate, and is re-evaluated.
/// `initial` particles (clamped to the box) seed the swarm ahead of uniform
/// random ones. The cost function is called at most max_cost_evaluations times.
CsoResult cso_minimize(const CostFunction& cost, const Bounds& bounds, const CsoConfig& config,
                       std::uint64_t seed, std::span<const std::vector<double>> initial = {});

}  // namespace uavrelay::cso
