#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "uavrelay/trajectory.hpp"

namespace uavrelay::swarm {

inline constexpr std::uint16_t kBaseStationId = 0;

class FrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Collaboration message on the command-and-control mesh.
///
/// Wire layout, little-endian:
///   sender u16 | flags u8 | seq u32 | gps radius f64 | gps angle f64
///   [| gn radius f64 | gn angle f64 | cost f64]
/// flags bit0 = available (0 waiting, 1 available for the request),
/// bit1 = GN position present. Both bits are set together or not at all.
struct ControlFrame {
  std::uint16_t sender_id = 0;
  bool available = false;
  std::uint32_t sequence_no = 0;
  traj::Polar gps;
  std::optional<traj::Polar> gn_position;
  std::optional<double> cost_of_service;

  /// Throws FrameError when the optional fields disagree with the state flag.
  void validate() const;
  bool operator==(const ControlFrame& other) const;
};

inline constexpr std::size_t kWaitingFrameBytes = 23;
inline constexpr std::size_t kAvailableFrameBytes = 47;

std::vector<std::uint8_t> encode_frame(const ControlFrame& frame);
/// Rejects wrong lengths, unknown flag bits and flag/length disagreement.
ControlFrame decode_frame(std::span<const std::uint8_t> bytes);

enum class AgentKind { BaseStation, Uav };
enum class AgentPhase { Waiting, Serving, Available };

struct AgentStatus {
  std::uint16_t agent_id = 0;
  AgentKind kind = AgentKind::Uav;
  AgentPhase phase = AgentPhase::Waiting;
  traj::Polar position;
  double busy_until_s = 0.0;
};

/// Angular direction (+1 counter-clockwise, -1 clockwise) for the next waiting
/// step of `angular_step` radians. Picks the sign whose one-step lookahead
/// gives the larger minimum x-y distance to the other waiting UAVs. Ties and
/// the no-peer case give +1.
int spread_direction(const AgentStatus& self, std::span<const AgentStatus> peers,
                     double angular_step);

/// spread_direction with limit-cycle damping: after the chosen sign flips,
/// the new sign is held for `hold_steps` steps before being re-evaluated.
class SpreadController {
 public:
  explicit SpreadController(std::size_t hold_steps = 5) : hold_steps_(hold_steps) {}

  int step(const AgentStatus& self, std::span<const AgentStatus> peers, double angular_step);
  int current_sign() const noexcept { return sign_; }

 private:
  std::size_t hold_steps_;
  std::size_t held_ = 0;
  int sign_ = 0;
};

/// Winner of a request: lowest cost of service, then lowest sender id (the
/// BS is id 0). Frames must be available frames carrying a cost; the result
/// does not depend on the frame order.
std::uint16_t resolve_conflict(std::span<const ControlFrame> frames);

/// Lambda / N_U.
double effective_arrival_rate(std::size_t n_uavs, double lambda_total);

}  // namespace uavrelay::swarm
