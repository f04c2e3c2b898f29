#include "uavrelay/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "uavrelay/parallel.hpp"
#include "uavrelay/pipeline.hpp"
#include "uavrelay/swarm.hpp"
#include "uavrelay/trajectory.hpp"

namespace uavrelay::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHistogramBin = 10.0;
constexpr std::size_t kHistogramBins = 100;

// Same-time events: completions free servers before waiting ticks, and both
// happen before a request is assigned.
enum class EventType { Completion = 0, Tick = 1, Arrival = 2 };

struct Event {
  double t;
  EventType type;
  std::uint64_t seq;
  std::size_t who;  // UAV index or request index
  std::uint64_t generation;

  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (type != o.type) return type > o.type;
    return seq > o.seq;
  }
};

struct Uav {
  std::uint16_t id = 0;
  traj::Polar pos;
  bool serving = false;
  double busy_until = 0.0;
  traj::Polar service_end_pos;
  // Current waiting motion, started at step_start.
  double step_start = 0.0;
  double v_r = 0.0;
  double omega = 0.0;
  double power_w = 0.0;
  std::uint64_t generation = 0;
  swarm::SpreadController spread{5};
  double energy = 0.0;
};

traj::Polar advance(const traj::Polar& p, double v_r, double omega, double dt, double a) {
  return {std::clamp(p.radius + v_r * dt, 0.0, a), traj::wrap_angle(p.angle + omega * dt)};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

template <class Stop>
std::vector<RequestRecord> generate(const CellConfig& cell, std::uint64_t seed, Stop stop) {
  cell.validate();
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(cell.arrival_rate());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RequestRecord> out;
  double t = 0.0;
  for (;;) {
    t += gap(rng);
    RequestRecord r;
    r.id = out.size();
    r.arrival_time_s = t;
    r.gn_radius_m = cell.cell_radius_m * std::sqrt(unit(rng));
    r.gn_angle_rad = 2.0 * std::numbers::pi * unit(rng);
    if (stop(r, out.size())) break;
    out.push_back(r);
  }
  return out;
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::SmdpSwarm: return "smdp_swarm";
    case Mode::StaticRelays: return "static_relays";
    case Mode::BsOnly: return "bs_only";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  if (text == "smdp_swarm" || text == "smdp") return Mode::SmdpSwarm;
  if (text == "static_relays" || text == "static") return Mode::StaticRelays;
  if (text == "bs_only" || text == "bs") return Mode::BsOnly;
  throw std::invalid_argument("unknown simulation mode '" + text + "'");
}

std::vector<RequestRecord> generate_requests(const CellConfig& cell, double horizon_s,
                                             std::uint64_t seed) {
  if (!(horizon_s > 0.0)) throw std::invalid_argument("generate_requests: horizon must be positive");
  return generate(cell, seed,
                  [&](const RequestRecord& r, std::size_t) { return r.arrival_time_s > horizon_s; });
}

std::vector<RequestRecord> generate_request_count(const CellConfig& cell, std::size_t count,
                                                  std::uint64_t seed) {
  return generate(cell, seed, [&](const RequestRecord&, std::size_t n) { return n >= count; });
}

EpisodeMetrics run_episode(const SimEnvironment& env, const SimOptions& opt) {
  if (env.links == nullptr) throw std::invalid_argument("run_episode: link budget missing");
  const CellConfig& cell = env.cell;
  cell.validate();
  const std::size_t n_uavs = opt.mode == Mode::BsOnly ? 0 : cell.n_uavs;
  const bool smdp_mode = opt.mode == Mode::SmdpSwarm && n_uavs > 0;
  const bool static_mode = opt.mode == Mode::StaticRelays && n_uavs > 0;
  const policy::PolicyArtifact* pol = env.policy;
  if (smdp_mode && pol == nullptr) throw std::invalid_argument("run_episode: smdp_swarm needs a policy");
  if (pol != nullptr && !env.expected_hash.empty() && pol->config_hash != env.expected_hash) {
    throw std::runtime_error("run_episode: policy was solved for a different configuration (hash " +
                             pol->config_hash + ", expected " + env.expected_hash + ")");
  }
  if (smdp_mode && (std::abs(pol->cell_radius_m - cell.cell_radius_m) > 1e-9 ||
                    std::abs(pol->payload_bits - cell.payload_bits) > 1e-9)) {
    throw std::runtime_error("run_episode: policy geometry or payload does not match the cell");
  }

  const double a = cell.cell_radius_m;
  const double L = cell.payload_bits;
  const double p_hover = power::hover_power(env.power);
  const double nu = pol != nullptr ? pol->dual.nu : 0.0;
  const double p_avg = pol != nullptr ? pol->p_avg_w : cell.p_avg_w;
  const double wait_step = smdp_mode ? pol->wait_step_s : 1.0;

  traj::LinkBudgetRates rates(*env.links);
  traj::RelayEnvironment renv;
  renv.rates = &rates;
  renv.power = env.power;
  renv.payload_bits = L;
  renv.v_max = cell.v_max_mps;
  renv.p_avg = p_avg;
  renv.cell_radius = a;
  renv.horizon_s = env.trajectory.horizon_s;
  renv.min_speed = env.trajectory.min_speed_mps;

  double static_radius = 0.0;
  if (static_mode) {
    if (opt.static_radius_m >= 0.0) {
      static_radius = std::min(opt.static_radius_m, a);
    } else if (pol != nullptr) {
      static_radius = pol->hover_radius();
    } else {
      throw std::invalid_argument("run_episode: static relays need a radius or a policy");
    }
  }

  std::vector<Uav> uavs(n_uavs);
  for (std::size_t u = 0; u < n_uavs; ++u) {
    uavs[u].id = static_cast<std::uint16_t>(u + 1);
    const double angle = traj::wrap_angle(2.0 * std::numbers::pi * static_cast<double>(u) /
                                          static_cast<double>(n_uavs));
    uavs[u].pos = {smdp_mode ? pol->hover_radius() : static_radius, angle};
    uavs[u].spread = swarm::SpreadController(opt.spread_hold_steps);
    uavs[u].power_w = static_mode ? p_hover : 0.0;
  }

  EpisodeMetrics m;
  m.records = generate_request_count(cell, opt.requests, opt.seed);
  std::vector<double> channel_free(cell.bs_channels, 0.0);

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t seq = 0;
  auto push = [&](double t, EventType type, std::size_t who, std::uint64_t gen = 0) {
    queue.push({t, type, seq++, who, gen});
  };
  for (std::size_t r = 0; r < m.records.size(); ++r) {
    push(m.records[r].arrival_time_s + opt.control_latency_s, EventType::Arrival, r);
  }
  if (smdp_mode) {
    for (std::size_t u = 0; u < n_uavs; ++u) push(0.0, EventType::Tick, u, 0);
  }

  auto position_at = [&](const Uav& u, double t) {
    if (u.serving) return u.pos;
    return advance(u.pos, u.v_r, u.omega, t - u.step_start, a);
  };
  auto settle = [&](Uav& u, double t) {
    if (u.serving || t <= u.step_start) return;
    const double dt = t - u.step_start;
    u.pos = advance(u.pos, u.v_r, u.omega, dt, a);
    u.energy += u.power_w * dt;
    m.waiting_energy_j += u.power_w * dt;
    u.step_start = t;
  };

  std::size_t assigned = 0;
  double t_end = kInf;
  std::uint32_t frame_seq = 0;
  while (!queue.empty()) {
    const Event ev = queue.top();
    if (assigned == m.records.size() && ev.t > t_end) break;
    queue.pop();
    m.event_times.push_back(ev.t);

    if (ev.type == EventType::Completion) {
      Uav& u = uavs[ev.who];
      if (ev.generation != u.generation) continue;
      u.serving = false;
      u.pos = u.service_end_pos;
      u.step_start = ev.t;
      u.v_r = 0.0;
      u.omega = 0.0;
      u.power_w = static_mode ? p_hover : 0.0;
      if (smdp_mode) push(ev.t, EventType::Tick, ev.who, u.generation);
      continue;
    }

    if (ev.type == EventType::Tick) {
      Uav& u = uavs[ev.who];
      if (ev.generation != u.generation || u.serving) continue;
      settle(u, ev.t);
      const std::size_t i = pol->grids.nearest_radius(u.pos.radius);
      const double v_r = pol->policy.wait_radial_velocity[i];
      double theta = pol->policy.wait_angular_speed[i];
      if (u.pos.radius > 0.0) {
        const double slack = std::sqrt(std::max(0.0, cell.v_max_mps * cell.v_max_mps - v_r * v_r));
        theta = std::min(theta, slack / u.pos.radius);
      } else {
        theta = 0.0;
      }
      std::vector<swarm::AgentStatus> peers;
      for (const Uav& o : uavs) {
        if (o.id == u.id || o.serving) continue;
        peers.push_back({o.id, swarm::AgentKind::Uav, swarm::AgentPhase::Waiting, position_at(o, ev.t), 0.0});
      }
      const swarm::AgentStatus self{u.id, swarm::AgentKind::Uav, swarm::AgentPhase::Waiting, u.pos, 0.0};
      const int sign = u.spread.step(self, peers, theta * wait_step);
      u.v_r = v_r;
      u.omega = sign * theta;
      u.power_w = power::mobility_power(
          std::min(cell.v_max_mps, std::hypot(v_r, u.pos.radius * theta)), env.power);
      u.step_start = ev.t;
      push(ev.t + wait_step, EventType::Tick, ev.who, u.generation);
      continue;
    }

    // Arrival: every idle node bids, the cheapest wins.
    RequestRecord& req = m.records[ev.who];
    const double t = ev.t;
    const traj::Polar gn{req.gn_radius_m, req.gn_angle_rad};
    for (Uav& u : uavs) settle(u, t);

    struct Bid {
      double delay;
      double energy;
      traj::Polar end;
    };
    std::vector<Bid> bids(n_uavs, {kInf, 0.0, {}});
    std::vector<swarm::ControlFrame> frames;
    const double bs_cost = L / env.links->throughput_gb(req.gn_radius_m);
    frames.push_back({swarm::kBaseStationId, true, frame_seq++, {0.0, 0.0}, gn, bs_cost});
    for (std::size_t k = 0; k < n_uavs; ++k) {
      Uav& u = uavs[k];
      if (u.serving) continue;
      double cost = kInf;
      if (smdp_mode) {
        const std::size_t i = pol->grids.nearest_radius(u.pos.radius);
        const std::size_t j = pol->grids.nearest_radius(gn.radius);
        const std::size_t kk = pol->grids.nearest_angle(gn.angle - u.pos.angle);
        const std::size_t idx = pol->comm_index(i, j, kk);
        if (pol->policy.comm_xi[idx] == 1) {
          // Rotate the stored plan onto the actual GN bearing and start it
          // from the actual UAV position.
          traj::Trajectory plan =
              pol->policy.trajectories.at(static_cast<std::size_t>(pol->policy.comm_trajectory[idx]));
          const double rot = gn.angle - pol->grids.angles[kk];
          for (auto& w : plan.waypoints) w.angle = traj::wrap_angle(w.angle + rot);
          plan.waypoints.front() = u.pos;
          const traj::Trajectory timed = traj::retime(plan, gn, renv);
          if (std::isfinite(timed.duration_s)) {
            bids[k] = {timed.duration_s, timed.energy_j, timed.waypoints.back()};
            cost = timed.duration_s + nu * (timed.energy_j - p_avg * timed.duration_s);
          }
        }
      } else {
        const double d = traj::distance(u.pos, gn);
        const double delay = L / env.links->throughput_gu(d) + L / env.links->throughput_ub(u.pos.radius);
        bids[k] = {delay, p_hover * delay, u.pos};
        cost = delay + nu * (p_hover * delay - p_avg * delay);
      }
      ++req.idle_uavs;
      frames.push_back({u.id, true, frame_seq++, u.pos, gn, cost});
    }
    // Frames cross the mesh in their wire format.
    std::vector<swarm::ControlFrame> received;
    for (const auto& f : frames) received.push_back(swarm::decode_frame(swarm::encode_frame(f)));
    const std::uint16_t winner = swarm::resolve_conflict(received);

    if (winner == swarm::kBaseStationId) {
      const auto c = static_cast<std::size_t>(
          std::min_element(channel_free.begin(), channel_free.end()) - channel_free.begin());
      req.assigned_server = kBaseStation;
      req.service_start_s = std::max(t, channel_free[c]);
      req.service_end_s = req.service_start_s + bs_cost;
      channel_free[c] = req.service_end_s;
    } else {
      Uav& u = uavs[winner - 1u];
      const Bid& b = bids[winner - 1u];
      req.assigned_server = winner;
      req.service_start_s = t;
      req.service_end_s = t + b.delay;
      req.energy_j = b.energy;
      u.energy += b.energy;
      m.request_energy_j += b.energy;
      u.serving = true;
      u.busy_until = req.service_end_s;
      u.service_end_pos = b.end;
      ++u.generation;
      push(req.service_end_s, EventType::Completion, winner - 1u, u.generation);
    }
    if (opt.trace != nullptr) {
      nlohmann::json fj = nlohmann::json::array();
      for (const auto& f : received) {
        fj.push_back({{"sender", f.sender_id},
                      {"seq", f.sequence_no},
                      {"available", f.available},
                      {"gps", {f.gps.radius, f.gps.angle}},
                      {"gn", {f.gn_position->radius, f.gn_position->angle}},
                      {"cost", std::isfinite(*f.cost_of_service) ? nlohmann::json(*f.cost_of_service)
                                                                 : nlohmann::json("inf")}});
      }
      *opt.trace << nlohmann::json{{"t", t}, {"request", req.id}, {"frames", fj}, {"winner", winner}}.dump()
                 << '\n';
    }
    if (++assigned == m.records.size()) {
      t_end = 0.0;
      for (const auto& r : m.records) t_end = std::max(t_end, r.service_end_s);
    }
  }
  if (m.records.empty()) t_end = 0.0;
  for (Uav& u : uavs) settle(u, t_end);

  m.elapsed_s = t_end;
  m.request_count = m.records.size();
  m.per_server.assign(n_uavs + 1, {});
  m.latency_histogram.assign(kHistogramBins, 0);
  std::vector<double> lat;
  lat.reserve(m.records.size());
  std::size_t relayed = 0;
  for (const auto& r : m.records) {
    const double l = r.service_end_s - r.arrival_time_s;
    lat.push_back(l);
    auto& s = m.per_server[static_cast<std::size_t>(r.assigned_server)];
    ++s.served;
    s.mean_latency_s += l;
    if (r.assigned_server != kBaseStation) ++relayed;
    m.latency_histogram[std::min(kHistogramBins - 1, static_cast<std::size_t>(l / kHistogramBin))]++;
  }
  for (auto& s : m.per_server) {
    if (s.served > 0) s.mean_latency_s /= static_cast<double>(s.served);
  }
  m.avg_service_latency_s = mean_of(lat);
  m.latency_stderr_s = stderr_of(lat);
  m.relay_fraction = m.records.empty() ? 0.0 : static_cast<double>(relayed) / static_cast<double>(m.records.size());
  for (const Uav& u : uavs) m.total_uav_energy_j += u.energy;
  m.per_uav_avg_power_w = n_uavs > 0 && t_end > 0.0
                              ? m.total_uav_energy_j / (static_cast<double>(n_uavs) * t_end)
                              : 0.0;
  return m;
}

bool SweepResult::any_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const SweepCell& c) { return !c.error.empty(); });
}

SweepResult sweep(const RunConfig& base, const std::vector<double>& p_avg_grid,
                  const std::vector<double>& payload_grid, const std::vector<std::uint64_t>& seeds,
                  Mode mode, std::size_t requests) {
  if (p_avg_grid.empty() || payload_grid.empty() || seeds.empty()) {
    throw std::invalid_argument("sweep: grids and seeds must be non-empty");
  }
  SweepResult out;
  for (double L : payload_grid) {
    for (double p : p_avg_grid) {
      RunConfig cfg = base;
      cfg.cell.p_avg_w = p;
      cfg.cell.payload_bits = L;
      SweepCell cell;
      cell.p_avg_w = p;
      cell.payload_bits = L;
      try {
        cfg.validate();
        const bool needs_policy =
            mode == Mode::SmdpSwarm || (mode == Mode::StaticRelays && cfg.sim.static_radius_m < 0.0);
        policy::PolicyArtifact art;
        if (needs_policy && cfg.cell.n_uavs > 0) {
          art = solve_policy(cfg);
          cell.nu = art.dual.nu;
        }
        const channel::LinkBudget links(link_spec(cfg));
        SimEnvironment env;
        env.links = &links;
        env.power = cfg.power;
        env.cell = cfg.cell;
        env.policy = needs_policy && cfg.cell.n_uavs > 0 ? &art : nullptr;
        env.trajectory = cfg.trajectory;
        std::vector<SweepRow> rows(seeds.size());
        parallel_for(seeds.size(), cfg.jobs, [&](std::size_t s) {
          SimOptions o;
          o.mode = mode;
          o.requests = requests;
          o.seed = seeds[s];
          o.static_radius_m = cfg.sim.static_radius_m;
          o.spread_hold_steps = cfg.sim.spread_hold_steps;
          o.control_latency_s = cfg.sim.control_latency_s;
          const EpisodeMetrics em = run_episode(env, o);
          rows[s] = {mode_name(mode), cfg.cell.n_uavs, p, L, seeds[s], em.avg_service_latency_s,
                     em.per_uav_avg_power_w, em.relay_fraction};
        });
        std::vector<double> lat, pw;
        for (const auto& r : rows) {
          lat.push_back(r.avg_latency_s);
          pw.push_back(r.per_uav_power_w);
          out.rows.push_back(r);
        }
        cell.seeds = rows.size();
        cell.latency_mean = mean_of(lat);
        cell.latency_stderr = stderr_of(lat);
        cell.power_mean = mean_of(pw);
        cell.power_stderr = stderr_of(pw);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      out.cells.push_back(cell);
    }
  }
  return out;
}

void write_metrics_header(std::ostream& out) {
  out << "mode,n_uavs,p_avg,L,seed,avg_latency_s,per_uav_power_w,relay_fraction\n";
}

void write_metrics_row(std::ostream& out, const SweepRow& r) {
  out << r.mode << ',' << r.n_uavs << ',' << r.p_avg_w << ',' << r.payload_bits << ',' << r.seed
      << ',' << r.avg_latency_s << ',' << r.per_uav_power_w << ',' << r.relay_fraction << '\n';
}

void write_sweep_summary(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "p_avg,L,nu,seeds,latency_mean_s,latency_stderr_s,power_mean_w,power_stderr_w,error\n";
  for (const auto& c : cells) {
    out << c.p_avg_w << ',' << c.payload_bits << ',' << c.nu << ',' << c.seeds << ','
        << c.latency_mean << ',' << c.latency_stderr << ',' << c.power_mean << ','
        << c.power_stderr << ',' << '"' << c.error << '"' << '\n';
  }
}

}  // namespace uavrelay::sim
