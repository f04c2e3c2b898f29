#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavrelay/cell.hpp"
#include "uavrelay/channel.hpp"
#include "uavrelay/cso.hpp"
#include "uavrelay/power.hpp"
#include "uavrelay/smdp.hpp"

namespace uavrelay {

struct TrajectorySettings {
  double horizon_s = 1000.0;
  double min_speed_mps = 2.0;
};

struct SimSettings {
  std::size_t requests = 10000;
  /// Static relay radius; negative means the solved policy's hover radius.
  double static_radius_m = -1.0;
  std::size_t spread_hold_steps = 5;
  double control_latency_s = 0.0;
  bool trace = false;
};

struct SeedSettings {
  std::uint64_t solve = 1;
  std::vector<std::uint64_t> simulate{1};
};

/// Everything a run needs; one JSON file with a section per module.
struct RunConfig {
  channel::ChannelParams gb;
  channel::ChannelParams gu;
  channel::ChannelParams ub;
  power::PowerModelParams power;
  CellConfig cell;
  smdp::Discretization disc;
  cso::CsoConfig cso;
  TrajectorySettings trajectory;
  smdp::DualSettings dual;
  SimSettings sim;
  SeedSettings seeds;
  std::string output_dir = "out";
  std::size_t jobs = 1;

  /// Cross-field checks; throws std::invalid_argument.
  void validate() const;
  /// Per-UAV arrival rate the single-relay policy is solved for.
  double policy_arrival_rate() const;
};

/// Parses and validates; unknown keys are errors.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const RunConfig& config);

/// FNV-1a 64 of the canonical dump of every setting that shapes the policy,
/// as 16 hex digits.
std::string config_hash(const RunConfig& config);

channel::LinkBudget::Spec link_spec(const RunConfig& config);
/// `links` must outlive the returned problem.
smdp::Problem make_problem(const RunConfig& config, const channel::LinkBudget& links);

}  // namespace uavrelay
