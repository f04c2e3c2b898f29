#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uavrelay/config.hpp"
#include "uavrelay/pipeline.hpp"
#include "uavrelay/policy_io.hpp"
#include "uavrelay/sim.hpp"

namespace uavrelay::cli {

namespace fs = std::filesystem;

namespace {

// A bad invocation or config: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<double> p_avg;
  std::optional<double> payload;
  std::optional<std::size_t> n_uavs;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("config", a.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("--out", a.out_dir, "Output directory (overrides $UAVRELAY_OUTPUT_DIR and the config)");
  cmd->add_option("--p-avg", a.p_avg, "Average UAV power budget in W");
  cmd->add_option("--payload", a.payload, "Payload size L in bits");
  cmd->add_option("--n-uavs", a.n_uavs, "Number of UAVs in the swarm");
  cmd->add_option("--jobs", a.jobs, "Worker threads (0 = all cores)");
}

RunConfig load(const CommonArgs& a) {
  if (!fs::exists(a.config_path)) throw UsageError("config file not found: " + a.config_path);
  RunConfig cfg;
  try {
    cfg = load_config(a.config_path);
    if (a.p_avg) cfg.cell.p_avg_w = *a.p_avg;
    if (a.payload) cfg.cell.payload_bits = *a.payload;
    if (a.n_uavs) cfg.cell.n_uavs = *a.n_uavs;
    if (a.jobs) cfg.jobs = *a.jobs;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

fs::path output_dir(const CommonArgs& a, const RunConfig& cfg) {
  fs::path dir = cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') dir = env;
  if (!a.out_dir.empty()) dir = a.out_dir;
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

int cmd_solve(const CommonArgs& a, std::ostream& out) {
  const RunConfig cfg = load(a);
  const fs::path dir = output_dir(a, cfg);
  SolveReport rep;
  const policy::PolicyArtifact art = solve_policy(cfg, &rep);
  const fs::path policy_path = dir / "policy.jsonl";
  policy::save_policy(policy_path, art);

  const nlohmann::json report = {{"config_hash", art.config_hash},
                                 {"nu", rep.dual.nu},
                                 {"g", rep.dual.g_value},
                                 {"avg_energy_per_stage_j", rep.dual.avg_energy_per_stage},
                                 {"avg_time_per_stage_s", rep.dual.avg_time_per_stage},
                                 {"avg_delay_s", art.dual.avg_delay_per_stage},
                                 {"hover_radius_m", art.hover_radius()},
                                 {"relay_fraction", art.relay_fraction},
                                 {"residual_fraction", rep.residual_fraction},
                                 {"constraint_slack", rep.constraint_slack},
                                 {"converged", rep.converged},
                                 {"iterations", rep.iterations},
                                 {"designed_buckets", rep.designed_buckets},
                                 {"wall_time_s", rep.wall_time_s}};
  open_out(dir / "solve_report.json") << report.dump(2) << '\n';
  out << "policy " << policy_path.string() << " hash " << art.config_hash << '\n'
      << "nu " << rep.dual.nu << "  g " << rep.dual.g_value << "  E " << rep.dual.avg_energy_per_stage
      << "  T " << rep.dual.avg_time_per_stage << "  wall " << rep.wall_time_s << " s\n"
      << "hover radius " << art.hover_radius() << " m  avg delay " << art.dual.avg_delay_per_stage
      << " s  relay fraction " << art.relay_fraction << '\n';
  if (!rep.converged) throw std::runtime_error("value iteration did not converge");
  return kExitOk;
}

struct SimArgs {
  std::string policy_path;
  std::string mode = "smdp_swarm";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> requests;
  std::optional<double> static_radius;
  bool trace = false;
};

int cmd_simulate(const CommonArgs& a, const SimArgs& s, std::ostream& out) {
  const RunConfig cfg = load(a);
  sim::Mode mode;
  try {
    mode = sim::parse_mode(s.mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = output_dir(a, cfg);

  sim::SimOptions o;
  o.mode = mode;
  o.seed = s.seed.value_or(cfg.seeds.simulate.front());
  o.requests = s.requests.value_or(cfg.sim.requests);
  o.static_radius_m = s.static_radius.value_or(cfg.sim.static_radius_m);
  o.spread_hold_steps = cfg.sim.spread_hold_steps;
  o.control_latency_s = cfg.sim.control_latency_s;

  const bool needs_policy = cfg.cell.n_uavs > 0 &&
                            (mode == sim::Mode::SmdpSwarm ||
                             (mode == sim::Mode::StaticRelays && o.static_radius_m < 0.0));
  std::optional<policy::PolicyArtifact> art;
  if (needs_policy || !s.policy_path.empty()) {
    const fs::path p = s.policy_path.empty() ? dir / "policy.jsonl" : fs::path(s.policy_path);
    if (!fs::exists(p)) throw UsageError("policy artifact not found: " + p.string() + " (run solve first)");
    art = policy::load_policy(p);
  }

  const channel::LinkBudget links(link_spec(cfg));
  sim::SimEnvironment env;
  env.links = &links;
  env.power = cfg.power;
  env.cell = cfg.cell;
  env.policy = art ? &*art : nullptr;
  env.expected_hash = config_hash(cfg);
  env.trajectory = cfg.trajectory;

  std::ofstream trace;
  if (s.trace || cfg.sim.trace) {
    trace = open_out(dir / "trace.jsonl");
    o.trace = &trace;
  }
  const sim::EpisodeMetrics m = sim::run_episode(env, o);

  const sim::SweepRow row{sim::mode_name(mode), mode == sim::Mode::BsOnly ? 0 : cfg.cell.n_uavs,
                          cfg.cell.p_avg_w, cfg.cell.payload_bits, o.seed, m.avg_service_latency_s,
                          m.per_uav_avg_power_w, m.relay_fraction};
  const fs::path csv = dir / ("metrics_" + row.mode + ".csv");
  auto f = open_out(csv);
  sim::write_metrics_header(f);
  sim::write_metrics_row(f, row);
  out << row.mode << ": " << m.request_count << " requests, latency " << m.avg_service_latency_s
      << " +- " << m.latency_stderr_s << " s, per-UAV power " << m.per_uav_avg_power_w
      << " W, relay fraction " << m.relay_fraction << '\n'
      << "metrics " << csv.string() << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::vector<double> p_avg_grid;
  std::vector<double> payload_grid;
  std::vector<std::uint64_t> seeds;
  std::string mode = "smdp_swarm";
  std::optional<std::size_t> requests;
};

int cmd_sweep(const CommonArgs& a, const SweepArgs& s, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load(a);
  sim::Mode mode;
  try {
    mode = sim::parse_mode(s.mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = output_dir(a, cfg);
  const std::vector<double> p_grid = s.p_avg_grid.empty() ? std::vector<double>{cfg.cell.p_avg_w} : s.p_avg_grid;
  const std::vector<double> l_grid =
      s.payload_grid.empty() ? std::vector<double>{cfg.cell.payload_bits} : s.payload_grid;
  const std::vector<std::uint64_t> seeds = s.seeds.empty() ? cfg.seeds.simulate : s.seeds;

  const sim::SweepResult res = sim::sweep(cfg, p_grid, l_grid, seeds, mode, s.requests.value_or(cfg.sim.requests));
  {
    auto f = open_out(dir / "sweep_rows.csv");
    sim::write_metrics_header(f);
    for (const auto& r : res.rows) sim::write_metrics_row(f, r);
  }
  {
    auto f = open_out(dir / "sweep_summary.csv");
    sim::write_sweep_summary(f, res.cells);
  }
  sim::write_sweep_summary(out, res.cells);
  for (const auto& c : res.cells) {
    if (!c.error.empty()) err << "cell P_avg=" << c.p_avg_w << " L=" << c.payload_bits << " failed: " << c.error << '\n';
  }
  return res.any_failed() ? kExitFailure : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"UAV relay swarm: SMDP policy solving and discrete-event simulation", "uavrelay"};
  app.require_subcommand(1);

  CommonArgs solve_args, sim_common, sweep_common;
  auto* solve = app.add_subcommand("solve", "Solve the waiting and relaying policy; writes policy.jsonl");
  add_common(solve, solve_args);

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run one simulated episode; writes metrics_<mode>.csv");
  add_common(simulate, sim_common);
  simulate->add_option("--policy", sim_args.policy_path, "Policy artifact (default <out>/policy.jsonl)");
  simulate->add_option("--mode", sim_args.mode, "smdp_swarm | static_relays | bs_only");
  simulate->add_option("--seed", sim_args.seed, "Request stream seed");
  simulate->add_option("--requests", sim_args.requests, "Number of requests to serve");
  simulate->add_option("--static-radius", sim_args.static_radius, "Hover radius of static relays in m");
  simulate->add_flag("--trace", sim_args.trace, "Write a JSON-lines trace of control frames");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Latency and power trade-off over a P_avg x L grid");
  add_common(sweep, sweep_common);
  sweep->add_option("--p-avg-grid", sweep_args.p_avg_grid, "Comma-separated P_avg values in W")->delimiter(',');
  sweep->add_option("--payload-grid", sweep_args.payload_grid, "Comma-separated payload sizes in bits")->delimiter(',');
  sweep->add_option("--seeds", sweep_args.seeds, "Comma-separated simulation seeds")->delimiter(',');
  sweep->add_option("--mode", sweep_args.mode, "smdp_swarm | static_relays | bs_only");
  sweep->add_option("--requests", sweep_args.requests, "Requests per episode");

  std::string init_path;
  auto* init = app.add_subcommand("init-config", "Write the default configuration");
  init->add_option("path", init_path, "Destination file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_args, out);
    if (simulate->parsed()) return cmd_simulate(sim_common, sim_args, out);
    if (sweep->parsed()) return cmd_sweep(sweep_common, sweep_args, out, err);
    if (init->parsed()) {
      const std::string text = config_to_json_text(RunConfig{});
      if (init_path.empty()) {
        out << text;
      } else {
        open_out(init_path) << text;
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace uavrelay::cli
