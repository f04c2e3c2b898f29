#include "uavrelay/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace uavrelay::channel {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("ChannelParams: ") + what);
}

void check_elevation(double elevation_deg) {
  if (!(elevation_deg > 0.0 && elevation_deg <= 90.0)) {
    throw std::domain_error("elevation angle must lie in (0, 90] degrees");
  }
}

// Q1 tail level that bounds the rate search from above.
constexpr double kSearchTail = 1e-12;
constexpr double kLogSpan = 25.0;
constexpr double kLogTolerance = 1e-10;

}  // namespace

void ChannelParams::validate() const {
  require(bandwidth_hz > 0.0, "bandwidth must be positive");
  require(snr_gap >= 1.0, "SNR gap must be >= 1");
  require(ref_snr_linear > 0.0, "reference SNR must be positive");
  require(los_pathloss_exp >= 2.0 && los_pathloss_exp <= nlos_pathloss_exp,
          "pathloss exponents must satisfy 2 <= alpha <= alpha_nlos");
  require(nlos_attenuation > 0.0 && nlos_attenuation <= 1.0, "kappa must lie in (0, 1]");
  require(los_prob_z1 > 0.0 && los_prob_z2 > 0.0, "z1 and z2 must be positive");
  require(rician_k1 > 0.0 && rician_k2 >= 0.0, "k1 must be positive and k2 non-negative");
}

double los_probability(double elevation_deg, const ChannelParams& params) {
  check_elevation(elevation_deg);
  const double z1 = params.los_prob_z1;
  return 1.0 / (1.0 + z1 * std::exp(-params.los_prob_z2 * (elevation_deg - z1)));
}

double large_scale_gain(double distance_m, bool is_los, const ChannelParams& params) {
  if (!(distance_m > 0.0)) throw std::domain_error("link distance must be positive");
  if (is_los) return std::pow(distance_m, -params.los_pathloss_exp);
  return params.nlos_attenuation * std::pow(distance_m, -params.nlos_pathloss_exp);
}

double rician_k(double elevation_deg, bool is_los, const ChannelParams& params) {
  check_elevation(elevation_deg);
  if (!is_los) return 0.0;
  return params.rician_k1 * std::exp(params.rician_k2 * elevation_deg);
}

namespace {

// Normalized outage threshold u on |g|^2 for a given rate.
double outage_threshold(double rate_bps, const LargeScaleState& ls, const ChannelParams& params) {
  const double snr = params.ref_snr_linear * ls.gain;
  const double excess = std::expm1(rate_bps * std::numbers::ln2 / params.bandwidth_hz);
  return params.snr_gap * excess / snr;
}

}  // namespace

double outage_probability(double rate_bps, const LargeScaleState& ls,
                          const ChannelParams& params) {
  if (!(rate_bps >= 0.0)) throw std::domain_error("rate must be non-negative");
  if (rate_bps == 0.0) return 0.0;
  const double u = outage_threshold(rate_bps, ls, params);
  const double k = ls.k_factor;
  return 1.0 - marcum_q1(std::sqrt(2.0 * k), std::sqrt(2.0 * (k + 1.0) * u));
}

double expected_throughput(double rate_bps, const LargeScaleState& ls,
                           const ChannelParams& params) {
  if (!(rate_bps >= 0.0)) throw std::domain_error("rate must be non-negative");
  if (rate_bps == 0.0) return 0.0;
  const double u = outage_threshold(rate_bps, ls, params);
  const double k = ls.k_factor;
  return rate_bps * marcum_q1(std::sqrt(2.0 * k), std::sqrt(2.0 * (k + 1.0) * u));
}

RateChoice optimal_rate(const LargeScaleState& ls, const ChannelParams& params) {
  const double snr = params.ref_snr_linear * ls.gain;
  if (!(snr > 0.0) || !std::isfinite(snr) || ls.k_factor < 0.0) return {};

  // With Z^2 = 2 (2^(rate/B) - 1) the Marcum argument is b = c Z.
  const double a = std::sqrt(2.0 * ls.k_factor);
  const double c = std::sqrt((ls.k_factor + 1.0) * params.snr_gap / snr);
  const double bw = params.bandwidth_hz;
  auto rate_of = [bw](double z) { return bw * std::log1p(0.5 * z * z) / std::numbers::ln2; };
  // g(Z) = -ln f(Z) - ln Q1(a, cZ), minimized over t = ln Z.
  auto objective = [&](double t) {
    const double z = std::exp(t);
    const double q = marcum_q1(a, c * z);
    const double f = rate_of(z);
    if (q <= 0.0 || f <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(f) - std::log(q);
  };

  double b_hi = a + 1.0;
  while (marcum_q1(a, b_hi) > kSearchTail) b_hi *= 1.5;
  double hi = std::log(b_hi / c);
  double lo = hi - kLogSpan;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (hi - lo > kLogTolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  const double z = std::exp(0.5 * (lo + hi));
  const double rate = rate_of(z);
  const double throughput = rate * marcum_q1(a, c * z);
  if (!(throughput > bw * std::numeric_limits<double>::epsilon()) || !std::isfinite(throughput)) {
    return {};
  }
  return {rate, throughput};
}

double mean_link_throughput(const LinkGeometry& geom, const ChannelParams& params) {
  const double p_los = los_probability(geom.elevation_deg, params);
  const LargeScaleState los{large_scale_gain(geom.distance_m, true, params),
                            rician_k(geom.elevation_deg, true, params)};
  const LargeScaleState nlos{large_scale_gain(geom.distance_m, false, params), 0.0};
  return p_los * optimal_rate(los, params).throughput_bps +
         (1.0 - p_los) * optimal_rate(nlos, params).throughput_bps;
}

const char* link_name(Link link) {
  switch (link) {
    case Link::GroundToBase: return "GB";
    case Link::GroundToUav: return "GU";
    case Link::UavToBase: return "UB";
  }
  return "?";
}

LinkGeometry link_geometry(Link link, double horizontal_m, const Heights& heights) {
  if (!(horizontal_m >= 0.0)) throw std::domain_error("horizontal distance must be non-negative");
  double vertical = 0.0;
  switch (link) {
    case Link::GroundToBase: vertical = heights.bs_m; break;
    case Link::GroundToUav: vertical = heights.uav_m; break;
    case Link::UavToBase: vertical = heights.uav_m - heights.bs_m; break;
  }
  if (!(vertical > 0.0)) {
    throw std::invalid_argument(std::string(link_name(link)) +
                                " link needs a positive height offset (H_U > H_B > 0)");
  }
  const double d = std::hypot(horizontal_m, vertical);
  const double elevation = std::asin(std::min(1.0, vertical / d)) * 180.0 / std::numbers::pi;
  return {d, elevation};
}

ThroughputTable::ThroughputTable(Link link, const ChannelParams& params, const Heights& heights,
                                 double max_range_m, double step_m)
    : link_(link), step_(step_m), inv_step_(1.0 / step_m) {
  if (!(step_m > 0.0) || !(max_range_m > 0.0)) {
    throw std::invalid_argument("throughput table needs a positive range and step");
  }
  params.validate();
  const auto n = static_cast<std::size_t>(std::ceil(max_range_m / step_m)) + 1;
  values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    values_[i] = mean_link_throughput(link_geometry(link, step_m * static_cast<double>(i), heights),
                                      params);
  }
}

void ThroughputTable::write_csv(std::ostream& out) const {
  out << "radius,throughput_bps\n";
  out.precision(17);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out << step_ * static_cast<double>(i) << ',' << values_[i] << '\n';
  }
}

LinkBudget::LinkBudget(const Spec& spec)
    : spec_(spec),
      gb_(Link::GroundToBase, spec.gb, spec.heights, spec.cell_radius_m, spec.table_step_m),
      gu_(Link::GroundToUav, spec.gu, spec.heights, 2.0 * spec.cell_radius_m, spec.table_step_m),
      ub_(Link::UavToBase, spec.ub, spec.heights, spec.cell_radius_m, spec.table_step_m) {}

const ThroughputTable& LinkBudget::table(Link link) const noexcept {
  switch (link) {
    case Link::GroundToBase: return gb_;
    case Link::GroundToUav: return gu_;
    case Link::UavToBase: break;
  }
  return ub_;
}

}  // namespace uavrelay::channel
