#include "uavrelay/policy_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace uavrelay::policy {

using nlohmann::json;

double PolicyArtifact::hover_radius() const {
  if (wait_distribution.empty()) throw std::logic_error("PolicyArtifact: empty wait distribution");
  const auto it = std::max_element(wait_distribution.begin(), wait_distribution.end());
  return grids.radii.at(static_cast<std::size_t>(it - wait_distribution.begin()));
}

PolicyArtifact make_artifact(const smdp::Solver& solver, const smdp::Solution& solution,
                             const std::string& config_hash) {
  const smdp::Problem& pr = solver.problem();
  PolicyArtifact a;
  a.config_hash = config_hash;
  a.p_avg_w = pr.cell.p_avg_w;
  a.payload_bits = pr.cell.payload_bits;
  a.arrival_rate = pr.arrival_rate;
  a.wait_step_s = pr.disc.wait_step_s;
  a.cell_radius_m = pr.cell.cell_radius_m;
  a.v_max_mps = pr.cell.v_max_mps;
  a.dual = solution.dual;
  a.relay_fraction = solution.relay_fraction;
  a.residual = solution.residual;
  a.converged = solution.converged;
  a.grids = solver.grids();
  a.wait_distribution = solution.wait_distribution;
  a.policy = solution.policy;
  return a;
}

void write_policy(std::ostream& out, const PolicyArtifact& a) {
  const auto& g = a.grids;
  const auto& p = a.policy;
  json header = {
      {"format", kFormat},
      {"version", kVersion},
      {"config_hash", a.config_hash},
      {"p_avg_w", a.p_avg_w},
      {"payload_bits", a.payload_bits},
      {"arrival_rate", a.arrival_rate},
      {"wait_step_s", a.wait_step_s},
      {"cell_radius_m", a.cell_radius_m},
      {"v_max_mps", a.v_max_mps},
      {"nu", a.dual.nu},
      {"g", a.dual.g_value},
      {"avg_energy_per_stage", a.dual.avg_energy_per_stage},
      {"avg_time_per_stage", a.dual.avg_time_per_stage},
      {"avg_delay_per_stage", a.dual.avg_delay_per_stage},
      {"relay_fraction", a.relay_fraction},
      {"residual", a.residual},
      {"converged", a.converged},
      {"grids",
       {{"radii", g.radii},
        {"radial_velocities", g.radial_velocities},
        {"angles", g.angles},
        {"end_radius_indices", g.end_radius_indices},
        {"gn_bin_mass", g.gn_bin_mass}}},
      {"wait_distribution", a.wait_distribution},
  };
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < p.wait_velocity_idx.size(); ++i) {
    out << json{{"type", "wait"},
                {"r_u_idx", i},
                {"v_idx", p.wait_velocity_idx[i]},
                {"v_r", p.wait_radial_velocity[i]},
                {"theta_c", p.wait_angular_speed[i]}}
               .dump()
        << '\n';
  }
  const std::size_t n_r = g.radii.size();
  const std::size_t n_psi = g.angles.size();
  for (std::size_t i = 0; i < n_r; ++i) {
    for (std::size_t j = 0; j < n_r; ++j) {
      for (std::size_t k = 0; k < n_psi; ++k) {
        const std::size_t idx = a.comm_index(i, j, k);
        out << json{{"type", "comm"},
                    {"r_u_idx", i},
                    {"r_gn_idx", j},
                    {"psi_idx", k},
                    {"end_idx", p.comm_end_idx[idx]},
                    {"xi", p.comm_xi[idx]},
                    {"trajectory_id", p.comm_trajectory[idx]},
                    {"cost", p.comm_cost[idx]},
                    {"delay", p.comm_delay[idx]},
                    {"energy", p.comm_energy[idx]}}
                   .dump()
            << '\n';
      }
    }
  }
  for (std::size_t t = 0; t < p.trajectories.size(); ++t) {
    const auto& tr = p.trajectories[t];
    json wp = json::array();
    for (const auto& w : tr.waypoints) wp.push_back({w.radius, w.angle});
    out << json{{"type", "trajectory"},
                {"id", t},
                {"waypoints", wp},
                {"speeds", tr.segment_speeds},
                {"duration_s", tr.duration_s},
                {"switch_time_s", tr.switch_time_s},
                {"energy_j", tr.energy_j}}
               .dump()
        << '\n';
  }
}

PolicyArtifact read_policy(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("policy: empty artifact");
  const json h = json::parse(line);
  if (h.value("format", "") != kFormat) throw std::runtime_error("policy: not a uavrelay policy");
  if (h.at("version").get<int>() != kVersion) {
    throw std::runtime_error("policy: unsupported artifact version");
  }
  PolicyArtifact a;
  a.config_hash = h.at("config_hash").get<std::string>();
  a.p_avg_w = h.at("p_avg_w");
  a.payload_bits = h.at("payload_bits");
  a.arrival_rate = h.at("arrival_rate");
  a.wait_step_s = h.at("wait_step_s");
  a.cell_radius_m = h.at("cell_radius_m");
  a.v_max_mps = h.at("v_max_mps");
  a.dual.nu = h.at("nu");
  a.dual.g_value = h.at("g");
  a.dual.avg_energy_per_stage = h.at("avg_energy_per_stage");
  a.dual.avg_time_per_stage = h.at("avg_time_per_stage");
  a.dual.avg_delay_per_stage = h.at("avg_delay_per_stage");
  a.relay_fraction = h.at("relay_fraction");
  a.residual = h.at("residual");
  a.converged = h.at("converged");
  const json& g = h.at("grids");
  a.grids.radii = g.at("radii").get<std::vector<double>>();
  a.grids.radial_velocities = g.at("radial_velocities").get<std::vector<double>>();
  a.grids.angles = g.at("angles").get<std::vector<double>>();
  a.grids.end_radius_indices = g.at("end_radius_indices").get<std::vector<std::size_t>>();
  a.grids.gn_bin_mass = g.at("gn_bin_mass").get<std::vector<double>>();
  a.wait_distribution = h.at("wait_distribution").get<std::vector<double>>();

  const std::size_t n_r = a.grids.radii.size();
  const std::size_t n_psi = a.grids.angles.size();
  if (n_r < 2 || n_psi < 1) throw std::runtime_error("policy: malformed grids");
  auto& p = a.policy;
  p.wait_velocity_idx.assign(n_r, 0);
  p.wait_radial_velocity.assign(n_r, 0.0);
  p.wait_angular_speed.assign(n_r, 0.0);
  const std::size_t n_comm = n_r * n_r * n_psi;
  p.comm_end_idx.assign(n_comm, 0);
  p.comm_xi.assign(n_comm, 0);
  p.comm_trajectory.assign(n_comm, -1);
  p.comm_cost.assign(n_comm, 0.0);
  p.comm_delay.assign(n_comm, 0.0);
  p.comm_energy.assign(n_comm, 0.0);
  std::size_t waits = 0, comms = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json r = json::parse(line);
    const std::string type = r.at("type");
    if (type == "wait") {
      const std::size_t i = r.at("r_u_idx");
      if (i >= n_r) throw std::runtime_error("policy: wait record out of range");
      p.wait_velocity_idx[i] = r.at("v_idx");
      p.wait_radial_velocity[i] = r.at("v_r");
      p.wait_angular_speed[i] = r.at("theta_c");
      ++waits;
    } else if (type == "comm") {
      const std::size_t i = r.at("r_u_idx"), j = r.at("r_gn_idx"), k = r.at("psi_idx");
      if (i >= n_r || j >= n_r || k >= n_psi) throw std::runtime_error("policy: comm record out of range");
      const std::size_t idx = a.comm_index(i, j, k);
      p.comm_end_idx[idx] = r.at("end_idx");
      p.comm_xi[idx] = r.at("xi");
      p.comm_trajectory[idx] = r.at("trajectory_id");
      p.comm_cost[idx] = r.at("cost");
      p.comm_delay[idx] = r.at("delay");
      p.comm_energy[idx] = r.at("energy");
      ++comms;
    } else if (type == "trajectory") {
      const std::size_t id = r.at("id");
      if (id != p.trajectories.size()) throw std::runtime_error("policy: trajectory ids out of order");
      traj::Trajectory tr;
      for (const auto& w : r.at("waypoints")) tr.waypoints.push_back({w.at(0), w.at(1)});
      tr.segment_speeds = r.at("speeds").get<std::vector<double>>();
      tr.duration_s = r.at("duration_s");
      tr.switch_time_s = r.at("switch_time_s");
      tr.energy_j = r.at("energy_j");
      p.trajectories.push_back(std::move(tr));
    } else {
      throw std::runtime_error("policy: unknown record type '" + type + "'");
    }
  }
  if (waits != n_r || comms != n_comm) throw std::runtime_error("policy: artifact is incomplete");
  for (std::int64_t t : p.comm_trajectory) {
    if (t >= static_cast<std::int64_t>(p.trajectories.size())) {
      throw std::runtime_error("policy: dangling trajectory reference");
    }
  }
  return a;
}

void save_policy(const std::filesystem::path& path, const PolicyArtifact& artifact) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write policy file " + path.string());
  write_policy(out, artifact);
  if (!out) throw std::runtime_error("failed while writing policy file " + path.string());
}

PolicyArtifact load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open policy file " + path.string());
  return read_policy(in);
}

}  // namespace uavrelay::policy
