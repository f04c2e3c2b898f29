#pragma once

#include <iosfwd>
#include <vector>

#include "uavrelay/marcum.hpp"

namespace uavrelay::channel {

/// Radio and propagation constants for one link class.
///
/// The transmit power, noise density and 1 m pathloss only ever appear as the
/// ratio beta0 * P_T / (N0 * B); that ratio is carried as ref_snr_linear and
/// the modulation gap is applied on top of it.
struct ChannelParams {
  double bandwidth_hz = 5e6;
  double snr_gap = 1.0;            // linear, >= 1
  double ref_snr_linear = 1e4;     // SNR at 1 m, linear (40 dB)
  double los_pathloss_exp = 2.0;
  double nlos_pathloss_exp = 2.8;
  double nlos_attenuation = 0.2;   // kappa in (0, 1]
  double los_prob_z1 = 9.61;
  double los_prob_z2 = 0.16;       // per degree
  double rician_k1 = 1.0;
  double rician_k2 = 0.05;         // per degree

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

struct LargeScaleState {
  double gain = 1.0;      // pathloss relative to the 1 m reference
  double k_factor = 0.0;  // Rician K, 0 for NLoS
};

struct LinkGeometry {
  double distance_m = 1.0;
  double elevation_deg = 90.0;
};

struct RateChoice {
  double rate_bps = 0.0;
  double throughput_bps = 0.0;
};

double los_probability(double elevation_deg, const ChannelParams& params);

/// Gain relative to the 1 m reference: d^-alpha (LoS) or kappa d^-alpha_nlos.
double large_scale_gain(double distance_m, bool is_los, const ChannelParams& params);

/// K(phi) = k1 exp(k2 phi) for LoS; 0 for NLoS (Rayleigh).
double rician_k(double elevation_deg, bool is_los, const ChannelParams& params);

double outage_probability(double rate_bps, const LargeScaleState& ls,
                          const ChannelParams& params);

/// Expected throughput rate * (1 - outage) at a fixed transmission rate.
double expected_throughput(double rate_bps, const LargeScaleState& ls,
                           const ChannelParams& params);

/// Throughput-maximizing rate for known (beta, K). Returns {0, 0} for a
/// channel that cannot carry any throughput.
RateChoice optimal_rate(const LargeScaleState& ls, const ChannelParams& params);

/// LoS/NLoS-averaged throughput under rate adaptation.
double mean_link_throughput(const LinkGeometry& geom, const ChannelParams& params);

enum class Link { GroundToBase, GroundToUav, UavToBase };

const char* link_name(Link link);

/// Antenna heights of the cell; the ground node sits at height 0.
struct Heights {
  double bs_m = 80.0;
  double uav_m = 200.0;
};

/// Distance/elevation for a link given the horizontal separation.
LinkGeometry link_geometry(Link link, double horizontal_m, const Heights& heights);

/// Mean throughput along one link class, tabulated on a uniform horizontal
/// distance grid and linearly interpolated. Distances past the end of the
/// table clamp to the last entry.
class ThroughputTable {
 public:
  ThroughputTable() = default;
  ThroughputTable(Link link, const ChannelParams& params, const Heights& heights,
                  double max_range_m, double step_m);

  double operator()(double horizontal_m) const noexcept {
    if (values_.empty()) return 0.0;
    if (horizontal_m <= 0.0) return values_.front();
    const double pos = horizontal_m * inv_step_;
    const auto idx = static_cast<std::size_t>(pos);
    if (idx + 1 >= values_.size()) return values_.back();
    const double frac = pos - static_cast<double>(idx);
    return values_[idx] + frac * (values_[idx + 1] - values_[idx]);
  }

  Link link() const noexcept { return link_; }
  double step() const noexcept { return step_; }
  double max_range() const noexcept { return step_ * static_cast<double>(values_.size() - 1); }
  const std::vector<double>& values() const noexcept { return values_; }

  /// CSV rows "radius,throughput_bps".
  void write_csv(std::ostream& out) const;

 private:
  Link link_ = Link::GroundToBase;
  double step_ = 1.0;
  double inv_step_ = 1.0;
  std::vector<double> values_;
};

/// The three link specializations of one cell, built once and then shared
/// read-only between workers.
class LinkBudget {
 public:
  struct Spec {
    ChannelParams gb;
    ChannelParams gu;
    ChannelParams ub;
    Heights heights;
    double cell_radius_m = 1000.0;
    double table_step_m = 1.0;
  };

  explicit LinkBudget(const Spec& spec);

  double throughput_gb(double r) const noexcept { return gb_(r); }
  double throughput_gu(double r_gu) const noexcept { return gu_(r_gu); }
  double throughput_ub(double r_ub) const noexcept { return ub_(r_ub); }

  const ThroughputTable& table(Link link) const noexcept;
  const Spec& spec() const noexcept { return spec_; }

 private:
  Spec spec_;
  ThroughputTable gb_;
  ThroughputTable gu_;
  ThroughputTable ub_;
};

}  // namespace uavrelay::channel
