#pragma once

#include "niaudit/matrix_kernel.hpp"

#include <functional>
#include <random>
#include <vector>

namespace niaudit {

/// Time-dependent input u(t).
using Signal = std::function<Vector(double)>;

[[nodiscard]] Signal zero_signal(Eigen::Index m);
[[nodiscard]] Signal constant_signal(const Vector& value);

/// u_i(t) = amplitude_i * sin(omega * t + phase_i)
[[nodiscard]] Signal sine_signal(const Vector& amplitude, double omega, const Vector& phase);
[[nodiscard]] Signal sine_signal(double amplitude, double omega);

/// Smooth bounded input: per channel a sum of three sinusoids with random
/// amplitudes, frequencies in [0.1, 3] rad/s and phases; |u_i(t)| <= bound.
[[nodiscard]] Signal random_smooth_signal(Eigen::Index m, double bound, std::mt19937_64& rng);

/// Classical fourth-order Runge-Kutta step for x' = f(t, x).
template <class F>
[[nodiscard]] Vector rk4_step(F&& f, double t, const Vector& x, double dt) {
    const Vector k1 = f(t, x);
    const Vector k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Vector k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Vector k4 = f(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Number of fixed steps covering [0, T]; T must be >= dt > 0.
[[nodiscard]] std::size_t step_count(double horizon, double dt);

/// Cumulative trapezoid integral of samples taken on a uniform grid.
[[nodiscard]] std::vector<double> cumulative_trapezoid(const std::vector<double>& values, double dt);

}  // namespace niaudit
