#pragma once

#include "uavrelay/config.hpp"
#include "uavrelay/policy_io.hpp"

namespace uavrelay {

struct SolveReport {
  smdp::DualState dual;
  double residual_fraction = 0.0;
  bool constraint_slack = false;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t designed_buckets = 0;
  double wall_time_s = 0.0;
};

/// Dual ascent plus value iteration for the configured cell.
policy::PolicyArtifact solve_policy(const RunConfig& config, SolveReport* report = nullptr);

}  // namespace uavrelay
