#pragma once

#include "niaudit/matrix_kernel.hpp"

#include <functional>
#include <vector>

namespace niaudit {

/// Axis-aligned box [lo, hi].
struct Box {
    Vector lo;
    Vector hi;

    static Box cube(Eigen::Index dim, double lo, double hi);
    [[nodiscard]] Eigen::Index dim() const { return lo.size(); }
    [[nodiscard]] bool contains(const Vector& x) const;
    [[nodiscard]] Vector clamp(const Vector& x) const;
    void validate() const;
};

/// First n points of the Sobol sequence mapped into the box. The sequence
/// starts after its all-zero point, so the first sample is the box centre.
[[nodiscard]] std::vector<Vector> sobol_points(const Box& box, std::size_t n);

struct MinimumProbe {
    double min_value = 0.0;
    Vector argmin;
    std::size_t evaluated = 0;
};

/// Samples f on the box with Sobol points outside the ball ||x|| <= exclude_radius,
/// then runs a projected descent from the `polish_starts` smallest samples.
/// Descent iterates stay in the box and outside the excluded ball.
[[nodiscard]] MinimumProbe probe_minimum(const std::function<double(const Vector&)>& f, const Box& box,
                                         std::size_t n_samples, double exclude_radius,
                                         std::size_t polish_starts = 10);

/// Central-difference gradient with step h.
[[nodiscard]] Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6);

/// Central-difference Jacobian of a vector map with step h.
[[nodiscard]] Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h = 1e-6);

}  // namespace niaudit
