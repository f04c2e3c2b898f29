#include "uavrelay/marcum.hpp"

#include <cmath>
#include <stdexcept>

namespace uavrelay::channel {
namespace {

constexpr double kTailMass = 1e-12;
// exp() underflows below about -745; beyond this switch to log-space terms.
constexpr double kDirectLimit = 600.0;

// Recurrence form: w_k = w_{k-1} mu / k, t_j = t_{j-1} x / j.
double series_direct(double mu, double x) {
  double weight = std::exp(-mu);
  double term = std::exp(-x);
  double cdf = term;  // P(Poisson(x) <= k)
  double weight_sum = weight;
  double q = weight * cdf;
  for (int k = 1;; ++k) {
    weight *= mu / k;
    term *= x / k;
    cdf += term;
    weight_sum += weight;
    q += weight * cdf;
    if (k > mu) {
      // Geometric bound on the Poisson tail beyond k.
      const double ratio = mu / (k + 1.0);
      const double tail = weight * ratio / (1.0 - ratio);
      if (tail < kTailMass || weight_sum >= 1.0) {
        // The remaining terms all carry cdf values in [cdf, 1].
        const double rest = std::max(0.0, 1.0 - weight_sum);
        return std::min(1.0, q + rest * cdf);
      }
    }
  }
}

double series_log(double mu, double x) {
  const double log_mu = std::log(mu);
  const double log_x = std::log(x);
  double cdf = 0.0;
  double weight_sum = 0.0;
  double q = 0.0;
  for (int k = 0;; ++k) {
    const double lg = std::lgamma(k + 1.0);
    const double weight = std::exp(-mu + k * log_mu - lg);
    cdf += std::exp(-x + k * log_x - lg);
    cdf = std::min(cdf, 1.0);
    weight_sum += weight;
    q += weight * cdf;
    if (k > mu) {
      const double ratio = mu / (k + 1.0);
      const double tail = weight * ratio / (1.0 - ratio);
      if (tail < kTailMass || weight_sum >= 1.0) {
        const double rest = std::max(0.0, 1.0 - weight_sum);
        return std::min(1.0, q + rest * cdf);
      }
    }
  }
}

}  // namespace

double marcum_q1(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw std::domain_error("marcum_q1: arguments must be non-negative");
  }
  if (b == 0.0) return 1.0;
  const double x = 0.5 * b * b;
  if (a == 0.0) return std::exp(-x);
  const double mu = 0.5 * a * a;
  if (std::isinf(x)) return 0.0;
  if (mu < kDirectLimit && x < kDirectLimit) return series_direct(mu, x);
  return series_log(mu, x);
}

}  // namespace uavrelay::channel
