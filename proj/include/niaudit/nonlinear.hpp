#pragma once

#include "niaudit/matrix_kernel.hpp"
#include "niaudit/ode.hpp"
#include "niaudit/sampling.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace niaudit {

using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;

/// x' = f(x, u), y = h(x) with n states and m inputs/outputs.
struct NonlinearSystem {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    std::string name;
    std::function<Vector(const Vector&, const Vector&)> dynamics;
    VectorField output;
    MatrixField output_jacobian;  // optional, m x n

    /// Checks f(0, 0) = 0 and h(0) = 0 within tol and the callback shapes.
    void validate(double tol = 1e-12) const;
    /// Analytic Jacobian when provided, central differences otherwise.
    [[nodiscard]] Matrix output_jacobian_at(const Vector& x) const;
};

/// x' = f(x) + g(x) u, y = h(x).
struct AffineSystem {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    std::string name;
    VectorField drift;
    MatrixField input_map;  // n x m
    VectorField output;
    MatrixField output_jacobian;  // optional

    [[nodiscard]] NonlinearSystem to_nonlinear() const;
    [[nodiscard]] Matrix output_jacobian_at(const Vector& x) const;
};

struct StorageFunction {
    ScalarField value;
    VectorField gradient;  // optional

    [[nodiscard]] Vector gradient_at(const Vector& x) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<Vector> outputs;
    double dt = 0.0;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    /// Header t,x1..xn,u1..um,y1..ym; 17 significant digits.
    void write_csv(std::ostream& os) const;
};

/// Fixed-step RK4; the input is sampled at the RK4 stage times. Throws
/// BlowUp when the state stops being finite.
[[nodiscard]] Trajectory simulate(const NonlinearSystem& sys, const Vector& x0, const Signal& input, double horizon,
                                  double dt);

struct DissipativityReport {
    double max_differential_violation = 0.0;  // max over samples of dV/dt - y'^T u
    double max_integral_violation = 0.0;      // max over t of V(t) - V(0) - int_0^t y'^T u
    double max_violation = 0.0;               // larger of the two, floored at 0
    double integral_slack = 0.0;              // min over t of int y'^T u - (V(t) - V(0))
    std::size_t worst_index = 0;              // sample of the worst differential violation
    bool passed = false;
};

/// y' from the output Jacobian when the system has one, fourth-order
/// differences of the sampled outputs otherwise.
[[nodiscard]] DissipativityReport dissipativity_check(const NonlinearSystem& sys, const StorageFunction& storage,
                                                      const Trajectory& traj, double tol = 1e-5);

struct PointwiseReport {
    double max_violation = 0.0;  // max of grad V^T (f + g u) - (dh/dx (f + g u))^T u
    double max_abs_gap = 0.0;    // max of the absolute value of the same quantity
    Vector worst_x;
    Vector worst_u;
    std::size_t samples = 0;
    bool passed = false;
};

/// Pointwise dissipation inequality at state/input samples; the storage
/// gradient falls back to central differences with step 1e-6.
[[nodiscard]] PointwiseReport nni_pointwise_check(const AffineSystem& sys, const StorageFunction& storage,
                                                  const std::vector<Vector>& states, const std::vector<Vector>& inputs,
                                                  double tol = 1e-8);

/// Every Sobol sample of the joint (x, u) box is checked.
[[nodiscard]] PointwiseReport nni_pointwise_check(const AffineSystem& sys, const StorageFunction& storage,
                                                  const Box& state_box, const Box& input_box, std::size_t n_samples,
                                                  double tol = 1e-8);

struct GasProbeReport {
    bool all_converged = false;
    double worst_final_norm = 0.0;
    std::vector<double> final_norms;
};

/// Zero-input simulations; numerical evidence of attractivity, not a proof.
[[nodiscard]] GasProbeReport gas_probe(const NonlinearSystem& sys, const std::vector<Vector>& initial_states,
                                       double horizon, double delta, double dt = 1e-2);

struct ObservabilityProbeReport {
    /// min over initial states of max_t |y(t)| / ||x0||; zero means a nonzero
    /// state produced an (almost) identically zero output.
    double min_output_ratio = 0.0;
    bool passed = false;
};

[[nodiscard]] ObservabilityProbeReport zero_state_observability_probe(const NonlinearSystem& sys,
                                                                      const std::vector<Vector>& initial_states,
                                                                      double horizon, double dt = 1e-2,
                                                                      double tol = 1e-6);

/// Largest difference quotient ||f(x, 0) - f(y, 0)|| / ||x - y|| over
/// consecutive Sobol samples of the box.
[[nodiscard]] double lipschitz_estimate(const NonlinearSystem& sys, const Box& box, std::size_t n_samples);

/// Shared input, summed outputs; state (x1, x2).
[[nodiscard]] NonlinearSystem parallel(const NonlinearSystem& a, const NonlinearSystem& b);
[[nodiscard]] AffineSystem parallel(const AffineSystem& a, const AffineSystem& b);

/// V(x1, x2) = V1(x1) + V2(x2).
[[nodiscard]] StorageFunction sum_storage(const StorageFunction& v1, Eigen::Index n1, const StorageFunction& v2,
                                          Eigen::Index n2);

}  // namespace niaudit
