#pragma once

namespace uavrelay::channel {

/// First-order Marcum Q-function Q1(a, b).
///
/// Evaluated as a Poisson(a^2/2)-weighted sum of regularized upper incomplete
/// gamma terms Q(k+1, b^2/2); the series is cut once the remaining Poisson
/// mass drops below 1e-12. Absolute accuracy is better than 1e-9 on the
/// range used by the channel model (a^2/2 up to a few hundred).
///
/// Throws std::domain_error for negative or NaN arguments.
double marcum_q1(double a, double b);

}  // namespace uavrelay::channel
