#include "uavrelay/config.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "uavrelay/pipeline.hpp"
#include "uavrelay/swarm.hpp"

namespace uavrelay {

using nlohmann::json;

namespace {

// Reads named fields from one JSON object and rejects any key it never asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw std::invalid_argument("config: section '" + name_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key) == 0) {
        throw std::invalid_argument("config: unknown key '" + key + "' in section '" + name_ + "'");
      }
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: bad value for '" + name_ + "." + key + "': " + e.what());
    }
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json channel_json(const channel::ChannelParams& p) {
  return {{"bandwidth_hz", p.bandwidth_hz},         {"snr_gap", p.snr_gap},
          {"ref_snr_linear", p.ref_snr_linear},     {"los_pathloss_exp", p.los_pathloss_exp},
          {"nlos_pathloss_exp", p.nlos_pathloss_exp}, {"nlos_attenuation", p.nlos_attenuation},
          {"los_prob_z1", p.los_prob_z1},           {"los_prob_z2", p.los_prob_z2},
          {"rician_k1", p.rician_k1},               {"rician_k2", p.rician_k2}};
}

void read_channel(const json& j, const std::string& name, channel::ChannelParams& p) {
  Section s(j, name);
  s.get("bandwidth_hz", p.bandwidth_hz);
  s.get("snr_gap", p.snr_gap);
  s.get("ref_snr_linear", p.ref_snr_linear);
  s.get("los_pathloss_exp", p.los_pathloss_exp);
  s.get("nlos_pathloss_exp", p.nlos_pathloss_exp);
  s.get("nlos_attenuation", p.nlos_attenuation);
  s.get("los_prob_z1", p.los_prob_z1);
  s.get("los_prob_z2", p.los_prob_z2);
  s.get("rician_k1", p.rician_k1);
  s.get("rician_k2", p.rician_k2);
}

json power_json(const power::PowerModelParams& p) {
  return {{"blade_profile_power_w", p.blade_profile_power_w},
          {"induced_power_w", p.induced_power_w},
          {"tip_speed_mps", p.tip_speed_mps},
          {"mean_rotor_induced_velocity_mps", p.mean_rotor_induced_velocity_mps},
          {"parasite_coeff", p.parasite_coeff}};
}

json disc_json(const smdp::Discretization& d) {
  return {{"n_radii", d.n_radii},         {"n_radial_velocities", d.n_radial_velocities},
          {"n_angles", d.n_angles},       {"n_end_radii", d.n_end_radii},
          {"wait_step_s", d.wait_step_s}, {"n_theta", d.n_theta}};
}

json cso_json(const cso::CsoConfig& c) {
  return {{"swarm_size", c.swarm_size},
          {"max_cost_evaluations", c.max_cost_evaluations},
          {"social_factor", c.social_factor},
          {"waypoint_count", c.waypoint_count},
          {"penalty_weight_payload", c.penalty_weight_payload},
          {"penalty_weight_speed", c.penalty_weight_speed}};
}

json trajectory_json(const TrajectorySettings& t) {
  return {{"horizon_s", t.horizon_s}, {"min_speed_mps", t.min_speed_mps}};
}

json dual_json(const smdp::DualSettings& d) {
  return {{"step0", d.step0},
          {"max_iterations", d.max_iterations},
          {"design_rounds", d.design_rounds},
          {"bisection_steps", d.bisection_steps},
          {"nu_max", d.nu_max},
          {"tolerance", d.tolerance},
          {"vi_tolerance", d.vi_tolerance},
          {"vi_max_sweeps", d.vi_max_sweeps}};
}

json full_json(const RunConfig& c) {
  return {
      {"channel", {{"gb", channel_json(c.gb)}, {"gu", channel_json(c.gu)}, {"ub", channel_json(c.ub)}}},
      {"power", power_json(c.power)},
      {"cell",
       {{"cell_radius_m", c.cell.cell_radius_m},
        {"bs_height_m", c.cell.bs_height_m},
        {"uav_height_m", c.cell.uav_height_m},
        {"v_max_mps", c.cell.v_max_mps},
        {"n_uavs", c.cell.n_uavs},
        {"payload_bits", c.cell.payload_bits},
        {"gn_count", c.cell.gn_count},
        {"per_gn_rate_per_s", c.cell.per_gn_rate_per_s},
        {"total_rate_per_s", c.cell.total_rate_per_s},
        {"bs_channels", c.cell.bs_channels},
        {"p_avg_w", c.cell.p_avg_w}}},
      {"discretization", disc_json(c.disc)},
      {"cso", cso_json(c.cso)},
      {"trajectory", trajectory_json(c.trajectory)},
      {"dual", dual_json(c.dual)},
      {"sim",
       {{"requests", c.sim.requests},
        {"static_radius_m", c.sim.static_radius_m},
        {"spread_hold_steps", c.sim.spread_hold_steps},
        {"control_latency_s", c.sim.control_latency_s},
        {"trace", c.sim.trace}}},
      {"seeds", {{"solve", c.seeds.solve}, {"simulate", c.seeds.simulate}}},
      {"output_dir", c.output_dir},
      {"jobs", c.jobs},
  };
}

}  // namespace

void RunConfig::validate() const {
  gb.validate();
  gu.validate();
  ub.validate();
  power.validate();
  cell.validate();
  cso.validate();
  disc.validate(policy_arrival_rate());
  if (!(trajectory.horizon_s > 0.0)) throw std::invalid_argument("config: trajectory horizon must be positive");
  if (!(trajectory.min_speed_mps > 0.0 && trajectory.min_speed_mps <= cell.v_max_mps)) {
    throw std::invalid_argument("config: trajectory min speed must lie in (0, v_max]");
  }
  if (!(dual.step0 > 0.0) || !(dual.nu_max > 0.0) || !(dual.tolerance > 0.0) ||
      !(dual.vi_tolerance > 0.0) || dual.vi_max_sweeps == 0) {
    throw std::invalid_argument("config: dual settings must be positive");
  }
  if (sim.requests == 0) throw std::invalid_argument("config: sim.requests must be positive");
  if (!(sim.control_latency_s >= 0.0)) throw std::invalid_argument("config: control latency must be >= 0");
  if (seeds.simulate.empty()) throw std::invalid_argument("config: need at least one simulation seed");
}

double RunConfig::policy_arrival_rate() const {
  return swarm::effective_arrival_rate(std::max<std::size_t>(1, cell.n_uavs), cell.arrival_rate());
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Section root(j, "root");
    if (root.has("channel")) {
      Section ch(root.sub("channel"), "channel");
      if (ch.has("gb")) read_channel(ch.sub("gb"), "channel.gb", c.gb);
      if (ch.has("gu")) read_channel(ch.sub("gu"), "channel.gu", c.gu);
      if (ch.has("ub")) read_channel(ch.sub("ub"), "channel.ub", c.ub);
    }
    if (root.has("power")) {
      Section s(root.sub("power"), "power");
      s.get("blade_profile_power_w", c.power.blade_profile_power_w);
      s.get("induced_power_w", c.power.induced_power_w);
      s.get("tip_speed_mps", c.power.tip_speed_mps);
      s.get("mean_rotor_induced_velocity_mps", c.power.mean_rotor_induced_velocity_mps);
      s.get("parasite_coeff", c.power.parasite_coeff);
    }
    if (root.has("cell")) {
      Section s(root.sub("cell"), "cell");
      s.get("cell_radius_m", c.cell.cell_radius_m);
      s.get("bs_height_m", c.cell.bs_height_m);
      s.get("uav_height_m", c.cell.uav_height_m);
      s.get("v_max_mps", c.cell.v_max_mps);
      s.get("n_uavs", c.cell.n_uavs);
      s.get("payload_bits", c.cell.payload_bits);
      s.get("gn_count", c.cell.gn_count);
      s.get("per_gn_rate_per_s", c.cell.per_gn_rate_per_s);
      s.get("total_rate_per_s", c.cell.total_rate_per_s);
      s.get("bs_channels", c.cell.bs_channels);
      s.get("p_avg_w", c.cell.p_avg_w);
    }
    if (root.has("discretization")) {
      Section s(root.sub("discretization"), "discretization");
      s.get("n_radii", c.disc.n_radii);
      s.get("n_radial_velocities", c.disc.n_radial_velocities);
      s.get("n_angles", c.disc.n_angles);
      s.get("n_end_radii", c.disc.n_end_radii);
      s.get("wait_step_s", c.disc.wait_step_s);
      s.get("n_theta", c.disc.n_theta);
    }
    if (root.has("cso")) {
      Section s(root.sub("cso"), "cso");
      s.get("swarm_size", c.cso.swarm_size);
      s.get("max_cost_evaluations", c.cso.max_cost_evaluations);
      s.get("social_factor", c.cso.social_factor);
      s.get("waypoint_count", c.cso.waypoint_count);
      s.get("penalty_weight_payload", c.cso.penalty_weight_payload);
      s.get("penalty_weight_speed", c.cso.penalty_weight_speed);
    }
    if (root.has("trajectory")) {
      Section s(root.sub("trajectory"), "trajectory");
      s.get("horizon_s", c.trajectory.horizon_s);
      s.get("min_speed_mps", c.trajectory.min_speed_mps);
    }
    if (root.has("dual")) {
      Section s(root.sub("dual"), "dual");
      s.get("step0", c.dual.step0);
      s.get("max_iterations", c.dual.max_iterations);
      s.get("design_rounds", c.dual.design_rounds);
      s.get("bisection_steps", c.dual.bisection_steps);
      s.get("nu_max", c.dual.nu_max);
      s.get("tolerance", c.dual.tolerance);
      s.get("vi_tolerance", c.dual.vi_tolerance);
      s.get("vi_max_sweeps", c.dual.vi_max_sweeps);
    }
    if (root.has("sim")) {
      Section s(root.sub("sim"), "sim");
      s.get("requests", c.sim.requests);
      s.get("static_radius_m", c.sim.static_radius_m);
      s.get("spread_hold_steps", c.sim.spread_hold_steps);
      s.get("control_latency_s", c.sim.control_latency_s);
      s.get("trace", c.sim.trace);
    }
    if (root.has("seeds")) {
      Section s(root.sub("seeds"), "seeds");
      s.get("solve", c.seeds.solve);
      s.get("simulate", c.seeds.simulate);
    }
    root.get("output_dir", c.output_dir);
    root.get("jobs", c.jobs);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const RunConfig& config) { return full_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& c) {
  json cell = full_json(c).at("cell");
  for (const char* k : {"n_uavs", "gn_count", "per_gn_rate_per_s", "total_rate_per_s", "bs_channels"}) {
    cell.erase(k);
  }
  cell["policy_arrival_rate"] = c.policy_arrival_rate();
  const json subset = {
      {"channel", {{"gb", channel_json(c.gb)}, {"gu", channel_json(c.gu)}, {"ub", channel_json(c.ub)}}},
      {"power", power_json(c.power)},
      {"cell", cell},
      {"discretization", disc_json(c.disc)},
      {"cso", cso_json(c.cso)},
      {"trajectory", trajectory_json(c.trajectory)},
      {"dual", dual_json(c.dual)},
      {"seed", c.seeds.solve},
  };
  const std::string text = subset.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

channel::LinkBudget::Spec link_spec(const RunConfig& c) {
  channel::LinkBudget::Spec s;
  s.gb = c.gb;
  s.gu = c.gu;
  s.ub = c.ub;
  s.heights.bs_m = c.cell.bs_height_m;
  s.heights.uav_m = c.cell.uav_height_m;
  s.cell_radius_m = c.cell.cell_radius_m;
  return s;
}

smdp::Problem make_problem(const RunConfig& c, const channel::LinkBudget& links) {
  smdp::Problem p;
  p.links = &links;
  p.power = c.power;
  p.cell = c.cell;
  p.arrival_rate = c.policy_arrival_rate();
  p.disc = c.disc;
  p.cso = c.cso;
  p.horizon_s = c.trajectory.horizon_s;
  p.min_speed_mps = c.trajectory.min_speed_mps;
  p.seed = c.seeds.solve;
  p.jobs = c.jobs;
  return p;
}

policy::PolicyArtifact solve_policy(const RunConfig& config, SolveReport* report) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const channel::LinkBudget links(link_spec(config));
  smdp::Solver solver(make_problem(config, links));
  const smdp::DualResult res = solver.dual_ascent(config.dual);
  policy::PolicyArtifact art = policy::make_artifact(solver, res.solution, config_hash(config));
  if (report != nullptr) {
    report->dual = res.best;
    report->residual_fraction = res.residual_fraction;
    report->constraint_slack = res.constraint_slack;
    report->converged = res.solution.converged;
    report->iterations = res.iterations;
    report->designed_buckets = res.designed_buckets;
    report->wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return art;
}

}  // namespace uavrelay
