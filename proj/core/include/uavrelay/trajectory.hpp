#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "uavrelay/channel.hpp"
#include "uavrelay/cso.hpp"
#include "uavrelay/power.hpp"

namespace uavrelay::traj {

/// Position in cell polar coordinates (BS at the origin), x-y projection.
struct Polar {
  double radius = 0.0;
  double angle = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 to_cartesian(const Polar& p) noexcept {
  return {p.radius * std::cos(p.angle), p.radius * std::sin(p.angle)};
}
Polar to_polar(const Vec2& v) noexcept;
double distance(const Polar& a, const Polar& b) noexcept;
/// Wraps an angle into (-pi, pi].
double wrap_angle(double a) noexcept;

/// Waypoints joined by straight constant-speed segments. After the last
/// waypoint the UAV hovers until the payload is delivered.
struct Trajectory {
  std::vector<Polar> waypoints;
  std::vector<double> segment_speeds;  // one per segment
  double duration_s = 0.0;             // total delay, end of the UB phase
  double switch_time_s = 0.0;          // end of the GU phase
  double energy_j = 0.0;
};

/// Throughput seen by the relay as a function of horizontal distance.
class RateModel {
 public:
  virtual ~RateModel() = default;
  virtual double ground_to_uav(double r_gu) const = 0;
  virtual double uav_to_base(double r_ub) const = 0;
};

class LinkBudgetRates final : public RateModel {
 public:
  explicit LinkBudgetRates(const channel::LinkBudget& links) : links_(&links) {}
  double ground_to_uav(double r_gu) const override { return links_->throughput_gu(r_gu); }
  double uav_to_base(double r_ub) const override { return links_->throughput_ub(r_ub); }

 private:
  const channel::LinkBudget* links_;
};

struct TransferSchedule {
  double switch_time_s = 0.0;  // t_p
  double duration_s = 0.0;     // Delta = max(delivery time, path time)
  double path_time_s = 0.0;
  double energy_j = 0.0;
  double delivered_fraction = 1.0;  // (GU bits + UB bits) / 2L by the horizon
  bool feasible = true;
};

/// Integrates the GU rate along the path until L bits reach the UAV (t_p),
/// then the UB rate until L bits reach the BS. Trapezoid rule with steps of at
/// most `max_step_s`; the hover tail after the last waypoint is constant-rate
/// and handled in closed form. Infeasible when delivery or the path itself
/// overruns `horizon_s`.
TransferSchedule transfer_schedule(std::span<const Polar> waypoints, std::span<const double> speeds,
                                   const Polar& gn, const RateModel& rates,
                                   const power::PowerModelParams& power, double payload_bits,
                                   double horizon_s, double max_step_s = 0.1);

/// Relay request geometry: the UAV starts at uav_start and must finish on the
/// circle of radius end_radius; the end angle is free.
struct RelayTask {
  Polar uav_start;
  Polar gn;
  double end_radius = 0.0;
};

struct RelayEnvironment {
  const RateModel* rates = nullptr;
  power::PowerModelParams power;
  double payload_bits = 1e6;
  double v_max = 55.0;
  double p_avg = 1200.0;
  double cell_radius = 1000.0;
  double horizon_s = 1000.0;
  double min_speed = 2.0;
};

struct DesignResult {
  Trajectory trajectory;
  std::vector<double> vector;
  double cost = 0.0;  // +inf when no penalty-free trajectory was found
  double delay_s = 0.0;
  double energy_j = 0.0;
  bool feasible = false;
  std::size_t evaluations = 0;
};

/// Decision vector: M interior waypoint radii, M interior waypoint angles,
/// the end angle, then M+1 segment speeds.
class TrajectoryDesigner {
 public:
  TrajectoryDesigner(const RelayEnvironment& env, const cso::CsoConfig& config);

  std::size_t waypoint_count() const noexcept { return m_; }
  std::size_t dimension() const noexcept { return 3 * m_ + 2; }
  cso::Bounds bounds() const;

  /// Geometry only; timing fields are left at zero.
  Trajectory decode(std::span<const double> x, const RelayTask& task) const;

  struct Evaluation {
    TransferSchedule schedule;
    double lagrangian = 0.0;
    double penalty = 0.0;
    double cost = 0.0;
  };
  Evaluation evaluate(std::span<const double> x, const RelayTask& task, double nu) const;

  /// (1 - nu P_avg) Delta + nu E + payload and speed penalties.
  double trajectory_cost(std::span<const double> x, const RelayTask& task, double nu) const {
    return evaluate(x, task, nu).cost;
  }

  /// Fly-to-GN-then-to-end (at V_max and at the power-minimizing speed),
  /// hover-then-radial-projection, and fly-to-GN-then-radial.
  std::vector<std::vector<double>> heuristic_seeds(const RelayTask& task) const;

  DesignResult design(const RelayTask& task, double nu, std::uint64_t seed,
                      std::span<const std::vector<double>> extra_seeds = {}) const;

  /// Builds the full trajectory (timings included) for a decision vector.
  Trajectory realize(std::span<const double> x, const RelayTask& task) const;

  const RelayEnvironment& environment() const noexcept { return env_; }
  const cso::CsoConfig& config() const noexcept { return config_; }

 private:
  RelayEnvironment env_;
  cso::CsoConfig config_;
  std::size_t m_;
  double cruise_speed_;
};

/// Re-times an existing trajectory against a (possibly different) GN
/// position, keeping its geometry and speeds.
Trajectory retime(const Trajectory& geometry, const Polar& gn, const RelayEnvironment& env);

/// CSV rows "t,radius,angle,speed,phase" sampled every `dt_s` seconds.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, double dt_s = 0.5);

}  // namespace uavrelay::traj
