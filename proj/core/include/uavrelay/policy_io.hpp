#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uavrelay/smdp.hpp"

namespace uavrelay::policy {

inline constexpr const char* kFormat = "uavrelay-policy";
inline constexpr int kVersion = 1;

/// A solved single-relay policy, self-contained for simulation.
struct PolicyArtifact {
  std::string config_hash;
  double p_avg_w = 0.0;
  double payload_bits = 0.0;
  double arrival_rate = 0.0;  // per UAV, as solved
  double wait_step_s = 1.0;
  double cell_radius_m = 0.0;
  double v_max_mps = 0.0;
  smdp::DualState dual;
  double relay_fraction = 0.0;
  double residual = 0.0;
  bool converged = false;
  smdp::Grids grids;
  std::vector<double> wait_distribution;
  smdp::OuterPolicy policy;

  /// Grid radius carrying the most stationary waiting mass.
  double hover_radius() const;
  std::size_t comm_index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return policy.comm_index(i, j, k, grids.radii.size(), grids.angles.size());
  }
};

PolicyArtifact make_artifact(const smdp::Solver& solver, const smdp::Solution& solution,
                             const std::string& config_hash);

/// JSON lines: one header object, then "wait", "comm" and "trajectory" records.
void write_policy(std::ostream& out, const PolicyArtifact& artifact);
PolicyArtifact read_policy(std::istream& in);

void save_policy(const std::filesystem::path& path, const PolicyArtifact& artifact);
PolicyArtifact load_policy(const std::filesystem::path& path);

}  // namespace uavrelay::policy
