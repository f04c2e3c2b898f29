#include "uavrelay/cell.hpp"

#include <stdexcept>

namespace uavrelay {

void CellConfig::validate() const {
  if (!(cell_radius_m > 0.0)) throw std::invalid_argument("CellConfig: cell radius must be positive");
  if (!(bs_height_m > 0.0 && uav_height_m > bs_height_m)) {
    throw std::invalid_argument("CellConfig: need uav_height > bs_height > 0");
  }
  if (!(v_max_mps > 0.0)) throw std::invalid_argument("CellConfig: v_max must be positive");
  if (!(payload_bits > 0.0)) throw std::invalid_argument("CellConfig: payload must be positive");
  if (!(arrival_rate() > 0.0)) throw std::invalid_argument("CellConfig: arrival rate must be positive");
  if (per_gn_rate_per_s > 0.0 && gn_count == 0) {
    throw std::invalid_argument("CellConfig: per-GN rate needs a positive gn_count");
  }
  if (bs_channels == 0) throw std::invalid_argument("CellConfig: need at least one BS channel");
  if (!(p_avg_w > 0.0)) throw std::invalid_argument("CellConfig: p_avg must be positive");
}

}  // namespace uavrelay
