#pragma once

#include "niaudit/nonlinear.hpp"

namespace niaudit {

struct SystemWithStorage {
    AffineSystem system;
    StorageFunction storage;
};

/// Mass-spring-damper with hardening spring k (x + x^3):
/// m x'' + beta x' + k (x + x^3) = u, state (x, x'), output x,
/// storage 1/2 m x'^2 + k (x^2 / 2 + x^4 / 4).
[[nodiscard]] SystemWithStorage make_msd(double mass = 1.0, double damping = 1.0, double stiffness = 2.0);

/// Hamiltonian system with state (q, p), q' = dH/dp, p' = -dH/dq + u,
/// output q and storage H. `dof` is the dimension of q.
[[nodiscard]] SystemWithStorage make_hamiltonian(Eigen::Index dof, const std::string& name, ScalarField hamiltonian,
                                                 VectorField gradient);

/// H = 1/2 p^2 + 1/2 q^2
[[nodiscard]] SystemWithStorage make_harmonic_oscillator();

/// H = 1/2 p^2 + (1 - cos q)
[[nodiscard]] SystemWithStorage make_hamiltonian_pendulum();

/// Planar two-link arm hanging from the origin; q measured from the
/// downward rest position, torque inputs, position outputs.
struct TwoLinkArm {
    double m1 = 1.0, m2 = 1.0;
    double l1 = 1.0;
    double lc1 = 0.5, lc2 = 0.5;
    double i1 = 1.0 / 12.0, i2 = 1.0 / 12.0;
    double gravity = 9.81;

    [[nodiscard]] Matrix mass_matrix(const Vector& q) const;
    /// dM/dq_i, i = 0, 1
    [[nodiscard]] Matrix mass_matrix_partial(const Vector& q, int i) const;
    /// Coriolis matrix from the Christoffel symbols of M.
    [[nodiscard]] Matrix coriolis(const Vector& q, const Vector& qdot) const;
    [[nodiscard]] double potential(const Vector& q) const;
    [[nodiscard]] Vector gravity_torque(const Vector& q) const;
    /// M'(q, qdot) by central differences of M along qdot.
    [[nodiscard]] Matrix mass_matrix_rate_fd(const Vector& q, const Vector& qdot, double h = 1e-6) const;
};

/// State (q1, q2, q1', q2'); storage 1/2 q'^T M q' + P(q) with P(0) = 0.
[[nodiscard]] SystemWithStorage make_euler_lagrange_pendulum2(const TwoLinkArm& arm = {});

}  // namespace niaudit
