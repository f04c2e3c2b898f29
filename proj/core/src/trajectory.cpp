#include "uavrelay/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace uavrelay::traj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec2 lerp(const Vec2& a, const Vec2& b, double f) {
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class Phase { GroundToUav, UavToBase, Done };

// Walks the payload integrals along the path. Stops at the end of the path,
// at delivery, or at `stop_time`, whichever is first.
struct Integrator {
  const RateModel& rates;
  Vec2 gn;
  double payload;

  Phase phase = Phase::GroundToUav;
  double gu_bits = 0.0;
  double ub_bits = 0.0;
  double switch_time = kInf;
  double deliver_time = kInf;

  double rate_at(const Vec2& p) const {
    return phase == Phase::GroundToUav ? rates.ground_to_uav(dist(p, gn))
                                       : rates.uav_to_base(norm(p));
  }
  double& bits() { return phase == Phase::GroundToUav ? gu_bits : ub_bits; }

  void finish_phase(double t) {
    if (phase == Phase::GroundToUav) {
      gu_bits = payload;
      switch_time = t;
      phase = Phase::UavToBase;
    } else {
      ub_bits = payload;
      deliver_time = t;
      phase = Phase::Done;
    }
  }

  // Integrates over [t, t + h] while moving from pa to pb.
  void step(double t, double h, const Vec2& pa, const Vec2& pb) {
    double t0 = t;
    double f0 = 0.0;  // fraction of the step already consumed
    while (phase != Phase::Done && f0 < 1.0) {
      const Vec2 a = lerp(pa, pb, f0);
      const double ra = rate_at(a);
      const double rb = rate_at(pb);
      const double span = (1.0 - f0) * h;
      const double inc = 0.5 * (ra + rb) * span;
      const double need = payload - bits();
      if (inc < need) {
        bits() += inc;
        return;
      }
      // Rate is linear across the step under the trapezoid rule; solve the
      // quadratic for the crossing time.
      const double slope = (rb - ra) / span;
      double tau;
      if (std::abs(slope) * span < 1e-12 * std::max(ra, 1.0)) {
        tau = need / ra;
      } else {
        const double disc = ra * ra + 2.0 * slope * need;
        tau = (-ra + std::sqrt(std::max(disc, 0.0))) / slope;
      }
      tau = std::clamp(tau, 0.0, span);
      const double t_cross = t0 + tau;
      finish_phase(t_cross);
      f0 += tau / h;
      t0 = t_cross;
      if (tau <= 0.0 && need > 0.0) break;
    }
  }

  // Constant-rate hover at p from time t until delivery or `stop_time`.
  void hover(double t, const Vec2& p, double stop_time) {
    while (phase != Phase::Done && t < stop_time) {
      const double r = rate_at(p);
      const double need = payload - bits();
      if (!(r > 0.0)) return;
      const double dt = need / r;
      if (t + dt > stop_time) {
        bits() += r * (stop_time - t);
        return;
      }
      t += dt;
      finish_phase(t);
    }
  }
};

}  // namespace

Polar to_polar(const Vec2& v) noexcept {
  const double r = std::hypot(v.x, v.y);
  return {r, r > 0.0 ? std::atan2(v.y, v.x) : 0.0};
}

double distance(const Polar& a, const Polar& b) noexcept {
  return dist(to_cartesian(a), to_cartesian(b));
}

double wrap_angle(double a) noexcept {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

TransferSchedule transfer_schedule(std::span<const Polar> waypoints, std::span<const double> speeds,
                                   const Polar& gn, const RateModel& rates,
                                   const power::PowerModelParams& power, double payload_bits,
                                   double horizon_s, double max_step_s) {
  if (waypoints.empty()) throw std::invalid_argument("transfer_schedule: no waypoints");
  if (speeds.size() + 1 != waypoints.size()) {
    throw std::invalid_argument("transfer_schedule: need one speed per segment");
  }
  if (!(max_step_s > 0.0)) throw std::invalid_argument("transfer_schedule: step must be positive");

  std::vector<Vec2> pts(waypoints.size());
  std::transform(waypoints.begin(), waypoints.end(), pts.begin(),
                 [](const Polar& p) { return to_cartesian(p); });

  // Segment durations; a zero-length segment takes no time at any speed.
  std::vector<double> seg_time(speeds.size(), 0.0);
  double path_time = 0.0;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    const double len = dist(pts[i], pts[i + 1]);
    if (len == 0.0) continue;
    seg_time[i] = speeds[i] > 0.0 ? len / speeds[i] : kInf;
    path_time += seg_time[i];
  }

  const double hover_w = power::hover_power(power);
  auto energy_until = [&](double t_end) {
    double e = 0.0;
    double t = 0.0;
    for (std::size_t i = 0; i < speeds.size() && t < t_end; ++i) {
      if (seg_time[i] == 0.0) continue;
      const double dt = std::min(seg_time[i], t_end - t);
      e += power::mobility_power(speeds[i], power) * dt;
      t += seg_time[i];
    }
    if (t_end > path_time) e += hover_w * (t_end - path_time);
    return e;
  };

  TransferSchedule out;
  out.path_time_s = path_time;
  if (payload_bits <= 0.0) {
    out.switch_time_s = 0.0;
    out.duration_s = path_time;
    out.feasible = path_time <= horizon_s;
    out.delivered_fraction = 1.0;
    out.energy_j = out.feasible ? energy_until(path_time) : energy_until(horizon_s);
    if (!out.feasible) out.duration_s = horizon_s;
    return out;
  }

  const Vec2 g = to_cartesian(gn);
  Integrator it{rates, g, payload_bits};
  double t = 0.0;
  for (std::size_t i = 0; i < speeds.size() && t < horizon_s; ++i) {
    if (seg_time[i] == 0.0) continue;
    if (it.phase == Phase::Done) {
      t += seg_time[i];
      continue;
    }
    const double seg_end = std::min(seg_time[i], horizon_s - t);
    const std::size_t n = static_cast<std::size_t>(std::max(1.0, std::ceil(seg_end / max_step_s)));
    const double h = seg_end / static_cast<double>(n);
    const double frac_end = seg_end / seg_time[i];
    for (std::size_t k = 0; k < n && it.phase != Phase::Done; ++k) {
      const Vec2 pa = lerp(pts[i], pts[i + 1], frac_end * static_cast<double>(k) / n);
      const Vec2 pb = lerp(pts[i], pts[i + 1], frac_end * static_cast<double>(k + 1) / n);
      it.step(t + h * static_cast<double>(k), h, pa, pb);
    }
    t += seg_time[i];
  }
  if (it.phase != Phase::Done && path_time < horizon_s) {
    it.hover(path_time, pts.back(), horizon_s);
  }

  const double delivered = it.deliver_time;
  out.feasible = std::isfinite(delivered) && delivered <= horizon_s && path_time <= horizon_s;
  if (out.feasible) {
    out.switch_time_s = it.switch_time;
    out.duration_s = std::max(delivered, path_time);
    out.delivered_fraction = 1.0;
    out.energy_j = energy_until(out.duration_s);
  } else {
    out.switch_time_s = std::min(it.switch_time, horizon_s);
    out.duration_s = horizon_s;
    out.delivered_fraction =
        std::min(1.0, (it.gu_bits + it.ub_bits) / (2.0 * payload_bits));
    if (path_time > horizon_s && it.phase == Phase::Done) out.delivered_fraction = 1.0;
    out.energy_j = energy_until(horizon_s);
  }
  return out;
}

TrajectoryDesigner::TrajectoryDesigner(const RelayEnvironment& env, const cso::CsoConfig& config)
    : env_(env), config_(config), m_(config.waypoint_count) {
  config_.validate();
  env_.power.validate();
  if (env_.rates == nullptr) throw std::invalid_argument("TrajectoryDesigner: rate model missing");
  if (!(env_.v_max > 0.0) || !(env_.cell_radius > 0.0) || !(env_.horizon_s > 0.0)) {
    throw std::invalid_argument("TrajectoryDesigner: v_max, cell radius and horizon must be positive");
  }
  if (!(env_.min_speed > 0.0 && env_.min_speed <= env_.v_max)) {
    throw std::invalid_argument("TrajectoryDesigner: min_speed must lie in (0, v_max]");
  }
  cruise_speed_ = std::clamp(power::power_min_velocity(env_.power, env_.v_max), env_.min_speed,
                             env_.v_max);
}

cso::Bounds TrajectoryDesigner::bounds() const {
  cso::Bounds b;
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < m_; ++i) {
    b.lower.push_back(0.0);
    b.upper.push_back(env_.cell_radius);
  }
  for (std::size_t i = 0; i <= m_; ++i) {
    b.lower.push_back(-pi);
    b.upper.push_back(pi);
  }
  for (std::size_t i = 0; i <= m_; ++i) {
    b.lower.push_back(env_.min_speed);
    b.upper.push_back(env_.v_max);
  }
  return b;
}

Trajectory TrajectoryDesigner::decode(std::span<const double> x, const RelayTask& task) const {
  if (x.size() != dimension()) throw std::invalid_argument("decode: wrong decision vector size");
  Trajectory tr;
  tr.waypoints.reserve(m_ + 2);
  tr.waypoints.push_back(task.uav_start);
  for (std::size_t i = 0; i < m_; ++i) tr.waypoints.push_back({x[i], x[m_ + i]});
  tr.waypoints.push_back({task.end_radius, x[2 * m_]});
  tr.segment_speeds.assign(x.begin() + static_cast<std::ptrdiff_t>(2 * m_ + 1), x.end());
  return tr;
}

TrajectoryDesigner::Evaluation TrajectoryDesigner::evaluate(std::span<const double> x,
                                                            const RelayTask& task,
                                                            double nu) const {
  const Trajectory tr = decode(x, task);
  Evaluation ev;
  double speed_excess = 0.0;
  for (double s : tr.segment_speeds) {
    const double over = std::max(0.0, s - env_.v_max);
    speed_excess += over * over;
  }
  ev.schedule = transfer_schedule(tr.waypoints, tr.segment_speeds, task.gn, *env_.rates, env_.power,
                                  env_.payload_bits, env_.horizon_s);
  ev.lagrangian = (1.0 - nu * env_.p_avg) * ev.schedule.duration_s + nu * ev.schedule.energy_j;
  ev.penalty = config_.penalty_weight_payload * (1.0 - ev.schedule.delivered_fraction) +
               config_.penalty_weight_speed * speed_excess;
  if (!ev.schedule.feasible && ev.penalty == 0.0) {
    // Overran the horizon with the payload delivered (an absurdly slow path).
    ev.penalty = config_.penalty_weight_payload;
  }
  ev.cost = ev.lagrangian + ev.penalty;
  return ev;
}

std::vector<std::vector<double>> TrajectoryDesigner::heuristic_seeds(const RelayTask& task) const {
  const Vec2 s = to_cartesian(task.uav_start);
  const Vec2 g = to_cartesian(task.gn);
  const double gn_angle = task.gn.radius > 0.0 ? wrap_angle(task.gn.angle) : 0.0;
  const Vec2 end_gn = to_cartesian({task.end_radius, gn_angle});

  auto pack = [&](const std::vector<Vec2>& interior, double end_angle, double speed) {
    std::vector<double> x(dimension());
    for (std::size_t i = 0; i < m_; ++i) {
      const Polar p = to_polar(interior[i]);
      x[i] = std::min(p.radius, env_.cell_radius);
      x[m_ + i] = p.angle;
    }
    x[2 * m_] = wrap_angle(end_angle);
    for (std::size_t i = 0; i <= m_; ++i) x[2 * m_ + 1 + i] = speed;
    return x;
  };

  // Interior points along start -> gn, then gn -> end; gn is always one of them.
  auto via_gn = [&](const Vec2& end) {
    const std::size_t k1 = (m_ + 1) / 2;
    const std::size_t k2 = m_ - k1;
    std::vector<Vec2> pts;
    for (std::size_t j = 1; j <= k1; ++j) {
      pts.push_back(lerp(s, g, static_cast<double>(j) / static_cast<double>(k1)));
    }
    for (std::size_t j = 1; j <= k2; ++j) {
      pts.push_back(lerp(g, end, static_cast<double>(j) / static_cast<double>(k2 + 1)));
    }
    return pts;
  };

  std::vector<std::vector<double>> seeds;
  seeds.push_back(pack(via_gn(end_gn), gn_angle, env_.v_max));
  seeds.push_back(pack(via_gn(end_gn), gn_angle, cruise_speed_));
  seeds.push_back(pack(std::vector<Vec2>(m_, s), task.uav_start.angle, env_.v_max));
  seeds.push_back(pack(via_gn(to_cartesian({task.end_radius, task.uav_start.angle})),
                       task.uav_start.angle, env_.v_max));
  return seeds;
}

Trajectory TrajectoryDesigner::realize(std::span<const double> x, const RelayTask& task) const {
  Trajectory tr = decode(x, task);
  const TransferSchedule sch = transfer_schedule(tr.waypoints, tr.segment_speeds, task.gn,
                                                 *env_.rates, env_.power, env_.payload_bits,
                                                 env_.horizon_s);
  tr.duration_s = sch.duration_s;
  tr.switch_time_s = sch.switch_time_s;
  tr.energy_j = sch.energy_j;
  return tr;
}

DesignResult TrajectoryDesigner::design(const RelayTask& task, double nu, std::uint64_t seed,
                                        std::span<const std::vector<double>> extra_seeds) const {
  std::vector<std::vector<double>> initial = heuristic_seeds(task);
  for (const auto& e : extra_seeds) {
    if (initial.size() >= config_.swarm_size) break;
    initial.push_back(e);
  }
  const cso::CostFunction fn = [&](std::span<const double> x) {
    return trajectory_cost(x, task, nu);
  };
  const cso::CsoResult res = cso_minimize(fn, bounds(), config_, seed, initial);

  DesignResult out;
  out.vector = res.best;
  out.evaluations = res.evaluations;
  const Evaluation ev = evaluate(res.best, task, nu);
  out.trajectory = decode(res.best, task);
  out.trajectory.duration_s = ev.schedule.duration_s;
  out.trajectory.switch_time_s = ev.schedule.switch_time_s;
  out.trajectory.energy_j = ev.schedule.energy_j;
  out.delay_s = ev.schedule.duration_s;
  out.energy_j = ev.schedule.energy_j;
  out.feasible = ev.penalty == 0.0 && ev.schedule.feasible;
  out.cost = out.feasible ? ev.lagrangian : kInf;
  return out;
}

Trajectory retime(const Trajectory& geometry, const Polar& gn, const RelayEnvironment& env) {
  if (env.rates == nullptr) throw std::invalid_argument("retime: rate model missing");
  Trajectory tr = geometry;
  const TransferSchedule sch = transfer_schedule(tr.waypoints, tr.segment_speeds, gn, *env.rates,
                                                 env.power, env.payload_bits, env.horizon_s);
  tr.duration_s = sch.feasible ? sch.duration_s : kInf;
  tr.switch_time_s = sch.switch_time_s;
  tr.energy_j = sch.energy_j;
  return tr;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, double dt_s) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("write_trajectory_csv: dt must be positive");
  out << "t,radius,angle,speed,phase\n";
  const auto& wp = trajectory.waypoints;
  if (wp.empty()) return;
  std::vector<double> seg_start{0.0};
  for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
    const double len = distance(wp[i], wp[i + 1]);
    const double s = trajectory.segment_speeds.at(i);
    seg_start.push_back(seg_start.back() + (len > 0.0 ? len / s : 0.0));
  }
  const double end = std::max(trajectory.duration_s, seg_start.back());
  const auto n = static_cast<std::size_t>(std::ceil(end / dt_s));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = std::min(end, static_cast<double>(k) * dt_s);
    Vec2 p = to_cartesian(wp.back());
    double speed = 0.0;
    for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
      if (t < seg_start[i + 1]) {
        const double f = (t - seg_start[i]) / (seg_start[i + 1] - seg_start[i]);
        p = lerp(to_cartesian(wp[i]), to_cartesian(wp[i + 1]), f);
        speed = trajectory.segment_speeds[i];
        break;
      }
    }
    const Polar q = to_polar(p);
    out << t << ',' << q.radius << ',' << q.angle << ',' << speed << ','
        << (t < trajectory.switch_time_s ? "GU" : "UB") << '\n';
  }
}

}  // namespace uavrelay::traj
