#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uavrelay/cell.hpp"
#include "uavrelay/channel.hpp"
#include "uavrelay/config.hpp"
#include "uavrelay/policy_io.hpp"
#include "uavrelay/power.hpp"

namespace uavrelay::sim {

enum class Mode { SmdpSwarm, StaticRelays, BsOnly };

const char* mode_name(Mode mode);
/// Accepts "smdp_swarm", "static_relays" (or "static") and "bs_only".
Mode parse_mode(const std::string& text);

inline constexpr int kBaseStation = 0;

struct RequestRecord {
  std::size_t id = 0;
  double arrival_time_s = 0.0;
  double gn_radius_m = 0.0;
  double gn_angle_rad = 0.0;
  int assigned_server = kBaseStation;  // 0 is the BS, k >= 1 is UAV k
  double service_start_s = 0.0;
  double service_end_s = 0.0;
  double energy_j = 0.0;  // UAV energy spent on this request
  std::size_t idle_uavs = 0;  // UAVs that bid for this request
};

/// Poisson arrivals at the cell rate up to `horizon_s`, GN uniform in the disc.
std::vector<RequestRecord> generate_requests(const CellConfig& cell, double horizon_s,
                                             std::uint64_t seed);
/// The first `count` requests of the same stream.
std::vector<RequestRecord> generate_request_count(const CellConfig& cell, std::size_t count,
                                                  std::uint64_t seed);

struct SimEnvironment {
  const channel::LinkBudget* links = nullptr;
  power::PowerModelParams power;
  CellConfig cell;
  /// Required for smdp_swarm with UAVs; optional for static relays (hover
  /// radius and nu).
  const policy::PolicyArtifact* policy = nullptr;
  /// When non-empty, must equal the policy's config hash.
  std::string expected_hash;
  TrajectorySettings trajectory;
};

struct SimOptions {
  Mode mode = Mode::SmdpSwarm;
  std::size_t requests = 500;
  std::uint64_t seed = 1;
  double static_radius_m = -1.0;
  std::size_t spread_hold_steps = 5;
  double control_latency_s = 0.0;
  /// JSON-lines trace of every control frame and assignment.
  std::ostream* trace = nullptr;
};

struct ServerStats {
  std::size_t served = 0;
  double mean_latency_s = 0.0;
};

struct EpisodeMetrics {
  double avg_service_latency_s = 0.0;
  double latency_stderr_s = 0.0;
  double per_uav_avg_power_w = 0.0;
  std::size_t request_count = 0;
  double relay_fraction = 0.0;
  double elapsed_s = 0.0;
  double total_uav_energy_j = 0.0;
  double request_energy_j = 0.0;
  double waiting_energy_j = 0.0;
  std::vector<ServerStats> per_server;  // index 0 is the BS
  /// Latency histogram with 10 s bins; the last bin collects the tail.
  std::vector<std::size_t> latency_histogram;
  std::vector<RequestRecord> records;
  /// Timestamps of processed events, nondecreasing.
  std::vector<double> event_times;
};

EpisodeMetrics run_episode(const SimEnvironment& env, const SimOptions& options);

struct SweepRow {
  std::string mode;
  std::size_t n_uavs = 0;
  double p_avg_w = 0.0;
  double payload_bits = 0.0;
  std::uint64_t seed = 0;
  double avg_latency_s = 0.0;
  double per_uav_power_w = 0.0;
  double relay_fraction = 0.0;
};

struct SweepCell {
  double p_avg_w = 0.0;
  double payload_bits = 0.0;
  double nu = 0.0;
  std::size_t seeds = 0;
  double latency_mean = 0.0;
  double latency_stderr = 0.0;
  double power_mean = 0.0;
  double power_stderr = 0.0;
  std::string error;  // non-empty when this cell failed
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepCell> cells;
  bool any_failed() const;
};

/// For every (P_avg, L): solve, then simulate each seed. Failing cells are
/// recorded and the sweep continues.
SweepResult sweep(const RunConfig& base, const std::vector<double>& p_avg_grid,
                  const std::vector<double>& payload_grid, const std::vector<std::uint64_t>& seeds,
                  Mode mode, std::size_t requests);

/// "mode,n_uavs,p_avg,L,seed,avg_latency_s,per_uav_power_w,relay_fraction"
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const SweepRow& row);
void write_sweep_summary(std::ostream& out, const std::vector<SweepCell>& cells);

}  // namespace uavrelay::sim
