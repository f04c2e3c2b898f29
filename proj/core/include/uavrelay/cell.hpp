#pragma once

#include <cstddef>

namespace uavrelay {

/// Cell geometry and traffic.
struct CellConfig {
  double cell_radius_m = 1000.0;
  double bs_height_m = 80.0;
  double uav_height_m = 200.0;
  double v_max_mps = 55.0;
  std::size_t n_uavs = 1;
  double payload_bits = 1e6;
  std::size_t gn_count = 300;
  /// Per-GN request rate; when positive the total rate is gn_count times this.
  double per_gn_rate_per_s = 0.0;
  double total_rate_per_s = 1.0 / 60.0;
  std::size_t bs_channels = 10;
  double p_avg_w = 1200.0;

  /// Lambda over the whole cell.
  double arrival_rate() const noexcept {
    return per_gn_rate_per_s > 0.0 ? per_gn_rate_per_s * static_cast<double>(gn_count)
                                   : total_rate_per_s;
  }

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

}  // namespace uavrelay
