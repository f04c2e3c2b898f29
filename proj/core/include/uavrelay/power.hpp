#pragma once

namespace uavrelay::power {

/// Rotary-wing level-flight power model
///   P(v) = P0 (1 + 3 v^2 / U_tip^2)
///        + P1 (sqrt(1 + v^4 / (4 v0^4)) - v^2 / (2 v0^2))^(1/2)
///        + c v^3
///
/// The defaults are calibrated, not quoted: hover power sits near 1.43 kW and
/// the minimum-power speed at 22 m/s.
struct PowerModelParams {
  double blade_profile_power_w = 550.0;
  double induced_power_w = 880.0;
  double tip_speed_mps = 120.0;
  double mean_rotor_induced_velocity_mps = 7.6;
  double parasite_coeff = 0.00572;  // 0.5 d0 rho s A, W s^3 / m^3

  void validate() const;
};

/// Throws std::domain_error for negative or NaN speed.
double mobility_power(double v_mps, const PowerModelParams& params);

inline double hover_power(const PowerModelParams& params) {
  return params.blade_profile_power_w + params.induced_power_w;
}

/// Minimum-power speed on [0, v_max], golden-section to 1e-3 m/s.
double power_min_velocity(const PowerModelParams& params, double v_max);

}  // namespace uavrelay::power
