#include "uavrelay/cso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace uavrelay::cso {

void Bounds::validate() const {
  if (lower.empty() || lower.size() != upper.size()) {
    throw std::invalid_argument("cso bounds: lower/upper must be non-empty and equal length");
  }
  for (std::size_t d = 0; d < lower.size(); ++d) {
    if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]) || lower[d] > upper[d]) {
      throw std::invalid_argument("cso bounds: each dimension needs finite lower <= upper");
    }
  }
}

void CsoConfig::validate() const {
  if (swarm_size < 4 || swarm_size % 2 != 0) {
    throw std::invalid_argument("CsoConfig: swarm_size must be even and >= 4");
  }
  if (waypoint_count < 2) throw std::invalid_argument("CsoConfig: waypoint_count must be >= 2");
  if (!(penalty_weight_payload > 0.0) || !(penalty_weight_speed > 0.0)) {
    throw std::invalid_argument("CsoConfig: penalty weights must be positive");
  }
  if (!(social_factor >= 0.0)) throw std::invalid_argument("CsoConfig: social_factor must be >= 0");
}

CsoResult cso_minimize(const CostFunction& cost, const Bounds& bounds, const CsoConfig& config,
                       std::uint64_t seed, std::span<const std::vector<double>> initial) {
  bounds.validate();
  config.validate();
  const std::size_t dim = bounds.dimension();
  const std::size_t m = config.swarm_size;
  const std::size_t budget = config.max_cost_evaluations;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> x(m, std::vector<double>(dim));
  std::vector<std::vector<double>> v(m, std::vector<double>(dim, 0.0));
  std::vector<double> f(m, std::numeric_limits<double>::infinity());

  for (std::size_t i = 0; i < m; ++i) {
    if (i < initial.size()) {
      if (initial[i].size() != dim) throw std::invalid_argument("cso: seed particle has wrong size");
      for (std::size_t d = 0; d < dim; ++d) {
        x[i][d] = std::clamp(initial[i][d], bounds.lower[d], bounds.upper[d]);
      }
    } else {
      for (std::size_t d = 0; d < dim; ++d) {
        x[i][d] = bounds.lower[d] + unit(rng) * (bounds.upper[d] - bounds.lower[d]);
      }
    }
  }

  CsoResult result;
  result.best_cost = std::numeric_limits<double>::infinity();
  auto evaluate = [&](std::size_t i) {
    f[i] = cost(std::span<const double>(x[i]));
    if (std::isnan(f[i])) f[i] = std::numeric_limits<double>::infinity();
    ++result.evaluations;
    if (f[i] < result.best_cost || result.best.empty()) {
      result.best_cost = f[i];
      result.best = x[i];
    }
  };

  for (std::size_t i = 0; i < m && result.evaluations < budget; ++i) evaluate(i);
  result.incumbent_history.push_back(result.best_cost);
  if (result.evaluations < m) return result;

  std::vector<std::size_t> order(m);
  std::vector<double> mean(dim);
  while (result.evaluations < budget) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (const auto& p : x) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += p[d];
    }
    for (double& c : mean) c /= static_cast<double>(m);

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k + 1 < m && result.evaluations < budget; k += 2) {
      std::size_t w = order[k];
      std::size_t l = order[k + 1];
      if (f[l] < f[w]) std::swap(w, l);
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        const double r3 = unit(rng);
        v[l][d] = r1 * v[l][d] + r2 * (x[w][d] - x[l][d]) +
                  config.social_factor * r3 * (mean[d] - x[l][d]);
        const double moved = x[l][d] + v[l][d];
        x[l][d] = std::clamp(moved, bounds.lower[d], bounds.upper[d]);
        if (x[l][d] != moved) v[l][d] = 0.0;
      }
      evaluate(l);
    }
    result.incumbent_history.push_back(result.best_cost);
  }
  return result;
}

}  // namespace uavrelay::cso
