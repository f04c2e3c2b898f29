#include "uavrelay/swarm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace uavrelay::swarm {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> in, std::size_t& pos) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

double min_distance(const traj::Polar& self, std::span<const AgentStatus> peers,
                    const AgentStatus& me) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : peers) {
    if (p.kind != AgentKind::Uav || p.phase != AgentPhase::Waiting || p.agent_id == me.agent_id) {
      continue;
    }
    best = std::min(best, traj::distance(self, p.position));
  }
  return best;
}

}  // namespace

void ControlFrame::validate() const {
  if (available != gn_position.has_value() || available != cost_of_service.has_value()) {
    throw FrameError("control frame: GN position and cost must be present exactly when available");
  }
}

bool ControlFrame::operator==(const ControlFrame& o) const {
  auto same = [](const traj::Polar& a, const traj::Polar& b) {
    return a.radius == b.radius && a.angle == b.angle;
  };
  if (sender_id != o.sender_id || available != o.available || sequence_no != o.sequence_no ||
      !same(gps, o.gps) || gn_position.has_value() != o.gn_position.has_value() ||
      cost_of_service != o.cost_of_service) {
    return false;
  }
  return !gn_position || same(*gn_position, *o.gn_position);
}

std::vector<std::uint8_t> encode_frame(const ControlFrame& frame) {
  frame.validate();
  std::vector<std::uint8_t> out;
  out.reserve(frame.available ? kAvailableFrameBytes : kWaitingFrameBytes);
  put<std::uint16_t>(out, frame.sender_id);
  put<std::uint8_t>(out, frame.available ? 0x3 : 0x0);
  put<std::uint32_t>(out, frame.sequence_no);
  put<double>(out, frame.gps.radius);
  put<double>(out, frame.gps.angle);
  if (frame.available) {
    put<double>(out, frame.gn_position->radius);
    put<double>(out, frame.gn_position->angle);
    put<double>(out, *frame.cost_of_service);
  }
  return out;
}

ControlFrame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWaitingFrameBytes) throw FrameError("control frame: truncated header");
  const std::uint8_t flags = bytes[2];
  if ((flags & ~0x3u) != 0) throw FrameError("control frame: unknown flag bits");
  const bool available = (flags & 0x1) != 0;
  const bool gn_present = (flags & 0x2) != 0;
  if (available != gn_present) throw FrameError("control frame: state flag and GN flag disagree");
  const std::size_t expected = available ? kAvailableFrameBytes : kWaitingFrameBytes;
  if (bytes.size() != expected) throw FrameError("control frame: length does not match flags");

  std::size_t pos = 0;
  ControlFrame f;
  f.sender_id = get<std::uint16_t>(bytes, pos);
  pos += 1;
  f.available = available;
  f.sequence_no = get<std::uint32_t>(bytes, pos);
  f.gps.radius = get<double>(bytes, pos);
  f.gps.angle = get<double>(bytes, pos);
  if (available) {
    traj::Polar gn;
    gn.radius = get<double>(bytes, pos);
    gn.angle = get<double>(bytes, pos);
    f.gn_position = gn;
    f.cost_of_service = get<double>(bytes, pos);
  }
  return f;
}

int spread_direction(const AgentStatus& self, std::span<const AgentStatus> peers,
                     double angular_step) {
  const double step = std::abs(angular_step);
  const traj::Polar plus{self.position.radius, self.position.angle + step};
  const traj::Polar minus{self.position.radius, self.position.angle - step};
  const double d_plus = min_distance(plus, peers, self);
  const double d_minus = min_distance(minus, peers, self);
  if (!std::isfinite(d_plus)) return +1;
  const double scale = std::max({1.0, d_plus, d_minus});
  if (d_minus > d_plus + 1e-9 * scale) return -1;
  return +1;
}

int SpreadController::step(const AgentStatus& self, std::span<const AgentStatus> peers,
                           double angular_step) {
  if (held_ > 0) {
    --held_;
    return sign_;
  }
  const int s = spread_direction(self, peers, angular_step);
  if (sign_ != 0 && s != sign_) held_ = hold_steps_ > 0 ? hold_steps_ - 1 : 0;
  sign_ = s;
  return sign_;
}

std::uint16_t resolve_conflict(std::span<const ControlFrame> frames) {
  if (frames.empty()) throw std::invalid_argument("resolve_conflict: empty frame set");
  const ControlFrame* best = nullptr;
  for (const auto& f : frames) {
    if (!f.available || !f.cost_of_service) {
      throw std::invalid_argument("resolve_conflict: frame without a cost of service");
    }
    const double c = *f.cost_of_service;
    if (std::isnan(c)) throw std::invalid_argument("resolve_conflict: NaN cost of service");
    if (best == nullptr || c < *best->cost_of_service ||
        (c == *best->cost_of_service && f.sender_id < best->sender_id)) {
      best = &f;
    }
  }
  return best->sender_id;
}

double effective_arrival_rate(std::size_t n_uavs, double lambda_total) {
  if (n_uavs < 1) throw std::invalid_argument("effective_arrival_rate: need at least one UAV");
  return lambda_total / static_cast<double>(n_uavs);
}

}  // namespace uavrelay::swarm
