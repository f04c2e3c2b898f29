#include "uavrelay/power.hpp"

#include <cmath>
#include <stdexcept>

namespace uavrelay::power {

void PowerModelParams::validate() const {
  if (!(blade_profile_power_w > 0.0 && induced_power_w > 0.0 && tip_speed_mps > 0.0 &&
        mean_rotor_induced_velocity_mps > 0.0 && parasite_coeff > 0.0)) {
    throw std::invalid_argument("PowerModelParams: all parameters must be strictly positive");
  }
}

double mobility_power(double v_mps, const PowerModelParams& params) {
  if (!(v_mps >= 0.0)) throw std::domain_error("mobility_power: speed must be non-negative");
  const double v2 = v_mps * v_mps;
  const double u2 = params.tip_speed_mps * params.tip_speed_mps;
  const double v0 = params.mean_rotor_induced_velocity_mps;
  const double y = v2 / (2.0 * v0 * v0);
  // sqrt(1 + y^2) - y rewritten to avoid cancellation at high speed.
  const double induced_ratio = 1.0 / (std::sqrt(1.0 + y * y) + y);
  return params.blade_profile_power_w * (1.0 + 3.0 * v2 / u2) +
         params.induced_power_w * std::sqrt(induced_ratio) + params.parasite_coeff * v2 * v_mps;
}

double power_min_velocity(const PowerModelParams& params, double v_max) {
  if (!(v_max > 0.0)) throw std::invalid_argument("power_min_velocity: v_max must be positive");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.0;
  double hi = v_max;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = mobility_power(x1, params);
  double f2 = mobility_power(x2, params);
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = mobility_power(x1, params);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = mobility_power(x2, params);
    }
  }
  const double mid = 0.5 * (lo + hi);
  // The golden section can only approach the interval ends; check them directly.
  double best = mid;
  double best_p = mobility_power(mid, params);
  for (double edge : {0.0, v_max}) {
    const double p = mobility_power(edge, params);
    if (p < best_p) {
      best = edge;
      best_p = p;
    }
  }
  return best;
}

}  // namespace uavrelay::power
