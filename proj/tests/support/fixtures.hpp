#pragma once

#include <memory>

#include "uavrelay/config.hpp"

namespace fixture {

/// A cell small enough to solve in well under a second.
inline uavrelay::RunConfig toy_config() {
  uavrelay::RunConfig c;
  c.disc.n_radii = 5;
  c.disc.n_radial_velocities = 5;
  c.disc.n_angles = 4;
  c.disc.n_end_radii = 3;
  c.disc.n_theta = 41;
  c.cso.swarm_size = 10;
  c.cso.max_cost_evaluations = 150;
  c.cso.waypoint_count = 2;
  c.dual.design_rounds = 2;
  c.sim.requests = 200;
  return c;
}

/// The smallest grid the solver accepts: two radii, two radial speeds, one
/// GN angle and both radii as end targets.
inline uavrelay::RunConfig brute_force_config() {
  uavrelay::RunConfig c = toy_config();
  c.disc.n_radii = 2;
  c.disc.n_radial_velocities = 2;
  c.disc.n_angles = 1;
  c.disc.n_end_radii = 2;
  return c;
}

}  // namespace fixture
