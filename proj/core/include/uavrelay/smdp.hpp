#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavrelay/cell.hpp"
#include "uavrelay/channel.hpp"
#include "uavrelay/cso.hpp"
#include "uavrelay/power.hpp"
#include "uavrelay/trajectory.hpp"

namespace uavrelay::smdp {

/// Raised when the average power constraint cannot be met at any nu.
class InfeasibleConstraint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Discretization {
  std::size_t n_radii = 25;              // radius grid over [0, a]
  std::size_t n_radial_velocities = 25;  // waiting radial speeds over [-V_max, V_max]
  std::size_t n_angles = 25;             // GN angle psi relative to the UAV
  std::size_t n_end_radii = 25;          // end-radius targets, a subset of the radius grid
  double wait_step_s = 1.0;              // Delta_0
  std::size_t n_theta = 121;             // angular-speed search points

  /// Needs Delta_0 * Lambda < 0.1 for the given per-UAV arrival rate.
  void validate(double arrival_rate) const;
};

struct Grids {
  std::vector<double> radii;
  std::vector<double> radial_velocities;
  std::vector<double> angles;  // 2 pi k / n_angles
  std::vector<std::size_t> end_radius_indices;
  /// Probability that a uniformly placed GN falls in the bin around radii[j].
  std::vector<double> gn_bin_mass;

  static Grids build(const Discretization& disc, double cell_radius, double v_max);

  std::size_t nearest_radius(double r) const noexcept;
  /// Nearest angle index for any real angle (wrapped to [0, 2 pi)).
  std::size_t nearest_angle(double psi) const noexcept;
  /// psi_k and psi_{n-k} are mirror images; returns min(k, n - k).
  std::size_t canonical_angle(std::size_t k) const noexcept;
  std::size_t unique_angles() const noexcept { return angles.size() / 2 + 1; }
  /// End options for a UAV at radius index i: the end-radius subset plus i.
  std::vector<std::size_t> end_options(std::size_t i) const;
};

struct WaitState {
  std::size_t r_u_idx = 0;
};

struct CommState {
  std::size_t r_u_idx = 0;
  std::size_t r_gn_idx = 0;
  std::size_t psi_idx = 0;
};

/// Everything the solver needs besides the dual variable.
struct Problem {
  const channel::LinkBudget* links = nullptr;
  power::PowerModelParams power;
  CellConfig cell;
  /// Per-UAV request rate (Lambda / N_U for a replicated swarm policy).
  double arrival_rate = 1.0 / 60.0;
  Discretization disc;
  cso::CsoConfig cso;
  double horizon_s = 1000.0;
  double min_speed_mps = 2.0;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  void validate() const;
};

// ---- stage costs and inner decisions -------------------------------------

/// nu (P_mob(sqrt(v_r^2 + r_U^2 theta_c^2)) - P_avg) Delta_0. Throws
/// std::domain_error when the speed exceeds v_max.
double wait_stage_cost(double r_u, double v_r, double theta_c, double nu,
                       const power::PowerModelParams& power, double p_avg, double wait_step_s,
                       double v_max);

/// Non-negative angular speed minimizing P_mob under the speed bound, by
/// exhaustive search over `n_theta` points of [0, sqrt(v_max^2 - v_r^2) / r_u].
/// The lowest such speed wins ties; r_u = 0 gives 0.
double optimal_angular_velocity(double r_u, double v_r, double v_max,
                                const power::PowerModelParams& power, std::size_t n_theta = 121);

/// L / R_GB(r): the delay of a direct GN-to-BS transmission.
double comm_cost_direct(double r_gn, const channel::LinkBudget& links, double payload_bits);

struct SchedulingChoice {
  int xi = 0;
  double cost = 0.0;
};

/// Direct transmission is only admissible when the end radius equals the
/// current one; ties go to direct.
SchedulingChoice scheduling_decision(double direct_cost, double relay_cost, bool end_is_current);

struct WaitTransition {
  double stay_waiting = 1.0;  // e^{-Lambda Delta_0}
  /// Next radius after the radial move, split linearly between the two
  /// neighbouring grid radii. Shared by both branches.
  std::vector<std::pair<std::size_t, double>> next_radius;
  /// Full distribution: waiting states first (weighted by stay_waiting), then
  /// communication states. Sums to one.
  std::vector<std::pair<WaitState, double>> wait;
  std::vector<std::pair<CommState, double>> comm;
};

WaitTransition wait_transition(const Grids& grids, const WaitState& state, double v_r,
                               double arrival_rate, double wait_step_s);

// ---- policies and solutions ----------------------------------------------

struct OuterPolicy {
  std::vector<double> wait_radial_velocity;   // O(s), per radius index
  std::vector<double> wait_angular_speed;     // theta_c*, magnitude
  std::vector<std::size_t> wait_velocity_idx;

  /// Per communication state, index (i * n_gn + j) * n_angles + k.
  std::vector<std::size_t> comm_end_idx;     // U(s) as a radius index
  std::vector<std::uint8_t> comm_xi;
  std::vector<std::int64_t> comm_trajectory;  // -1 for direct transmission
  std::vector<double> comm_cost;              // Lagrangian at the solving nu
  std::vector<double> comm_delay;
  std::vector<double> comm_energy;
  std::vector<traj::Trajectory> trajectories;  // in the state frame (UAV at angle 0)

  std::size_t comm_index(std::size_t i, std::size_t j, std::size_t k, std::size_t n_gn,
                         std::size_t n_angles) const noexcept {
    return (i * n_gn + j) * n_angles + k;
  }
};

struct DualState {
  double nu = 0.0;
  double g_value = 0.0;
  double avg_energy_per_stage = 0.0;
  double avg_time_per_stage = 0.0;
  double avg_delay_per_stage = 0.0;
};

struct Solution {
  OuterPolicy policy;
  DualState dual;
  std::vector<double> relative_values;     // h, per radius index
  std::vector<double> wait_distribution;   // stationary, per waiting step
  double residual = 0.0;                   // final Bellman span
  std::size_t sweeps = 0;
  bool converged = false;
  double relay_fraction = 0.0;             // share of intervals served by relay
};

struct DualSettings {
  double step0 = 1e-7;  // eta_0 in (1/W) per joule of constraint violation
  std::size_t max_iterations = 60;
  std::size_t design_rounds = 3;
  std::size_t bisection_steps = 40;
  double nu_max = 0.05;
  double tolerance = 0.02;  // constraint residual as a fraction of P_avg
  double vi_tolerance = 1e-6;
  std::size_t vi_max_sweeps = 100000;
};

struct DualResult {
  DualState best;
  Solution solution;
  std::vector<DualState> history;
  std::size_t iterations = 0;
  std::size_t designed_buckets = 0;
  /// |E - P_avg T| / (T P_avg) at the returned policy.
  double residual_fraction = 0.0;
  bool constraint_slack = false;
};

// ---- solver ---------------------------------------------------------------

/// Single-relay SMDP solver.
///
/// Waiting steps and communication states are folded into a unit-step chain
/// over waiting radii: every Delta_0 step either keeps waiting or meets a
/// request, whose (GN bin, psi) is integrated out inside the step. The
/// average cost per step divided by the arrival probability per step is the
/// average cost per decision interval.
///
/// Relay costs come from a library of CSO-designed trajectories. Each
/// candidate contributes the affine cost Delta + nu (E - P_avg Delta); the
/// relay cost at nu is the minimum over the candidates, so g(nu) is the
/// minimum of affine functions and concave for a fixed library.
class Solver {
 public:
  explicit Solver(Problem problem);
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  const Problem& problem() const noexcept { return problem_; }
  const Grids& grids() const noexcept { return grids_; }

  /// Designs every relay candidate at the nu bucket of `nu` (1e-4 wide)
  /// unless that bucket is already in the library. Returns true if it did work.
  bool design_bucket(double nu);
  std::size_t designed_buckets() const noexcept { return buckets_.size(); }
  static long bucket_of(double nu) noexcept;

  /// Cheapest relay option for (state, end) at nu; +inf when no feasible
  /// trajectory is cached. Requires at least one designed bucket.
  struct RelayOption {
    double cost = 0.0;
    double delay = 0.0;
    double energy = 0.0;
    std::int64_t candidate = -1;
  };
  RelayOption comm_cost_relay(const CommState& state, std::size_t end_idx, double nu) const;

  /// Relative value iteration at fixed nu, then exact evaluation of the
  /// greedy policy. `warm_start` seeds the relative values.
  Solution value_iteration(double nu, const std::vector<double>* warm_start = nullptr,
                           double tolerance = 1e-6, std::size_t max_sweeps = 100000) const;

  /// Projected subgradient ascent on g(nu), interleaved with library growth
  /// at the current best nu.
  DualResult dual_ascent(const DualSettings& settings = {});

  /// Waiting-policy ingredients at radius index i and velocity index a.
  double wait_power(std::size_t i, std::size_t a) const;
  double wait_theta(std::size_t i, std::size_t a) const;

  /// Trajectory geometry for a cached candidate, in the frame of the given
  /// state (UAV at angle 0, GN at psi_k).
  traj::Trajectory candidate_trajectory(std::int64_t candidate, const CommState& state) const;

  const traj::TrajectoryDesigner& designer() const noexcept { return *designer_; }

 private:
  struct Candidate {
    double delay;
    double energy;
    std::vector<double> vector;
    traj::Trajectory trajectory;
  };
  struct Slot {
    std::vector<Candidate> candidates;
  };

  std::size_t slot_index(std::size_t i, std::size_t j, std::size_t kc, std::size_t option) const;
  std::size_t option_of(std::size_t i, std::size_t end_idx) const;

  Problem problem_;
  Grids grids_;
  std::unique_ptr<traj::LinkBudgetRates> rates_;
  std::unique_ptr<traj::TrajectoryDesigner> designer_;

  // Per radius i: end options and their offset into the option axis.
  std::vector<std::vector<std::size_t>> end_options_;
  std::vector<std::size_t> option_offset_;
  std::size_t options_per_gn_psi_total_ = 0;

  std::vector<double> wait_theta_;  // [i * n_v + a]
  std::vector<double> wait_power_;
  std::vector<double> direct_cost_;  // per GN radius index

  std::vector<Slot> slots_;
  std::set<long> buckets_;
};

/// Grid-faithful Monte-Carlo run of the folded chain under a solved policy.
struct ChainStats {
  std::size_t stages = 0;
  double mean_delay = 0.0;
  double delay_stderr = 0.0;
  double mean_energy = 0.0;
  double mean_time = 0.0;
  double mean_lagrangian = 0.0;
  double average_power = 0.0;  // total energy / total time
};

ChainStats simulate_policy_chain(const Solver& solver, const Solution& solution,
                                 std::size_t stages, std::uint64_t seed,
                                 std::size_t burn_in_stages = 1000);

}  // namespace uavrelay::smdp
