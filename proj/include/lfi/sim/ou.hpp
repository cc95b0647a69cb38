#pragma once

// Discretized mean-reverting process: starting from x0 = 10 (excluded from
// the data), fifty Euler steps
//   x_{t+1} = x_t + theta1 * (exp(theta2) - x_t) * dt + 0.5 * eps_t,
// with eps_t ~ N(0, dt) and dt = 0.2. Gaussian transitions make the exact
// likelihood available.

#include "lfi/common.hpp"

#include <cstdint>

namespace lfi::sim {

inline constexpr int ou_path_length = 50;
inline constexpr double ou_dt = 0.2;
inline constexpr double ou_x0 = 10.0;

// Per-step conditional standard deviation 0.5 * sqrt(dt).
inline double ou_step_sd() { return 0.5 * std::sqrt(ou_dt); }

// noise holds the eps_t draws; passing zeros gives the deterministic
// drift-only path used by the analytic tests.
Vec ou_simulate_with_noise(const Vec& theta, const Vec& noise);
Vec ou_simulate(const Vec& theta, std::uint64_t seed);

double ou_log_likelihood(const Vec& path, const Vec& theta);

// Mean, standard error of the mean, autocorrelations at lags 1..3 (5 dims).
// A constant path has no defined autocorrelation; those entries become 0 and
// *degenerate is set when provided.
Vec ou_expert_statistic(const Vec& path, bool* degenerate = nullptr);

}  // namespace lfi::sim
