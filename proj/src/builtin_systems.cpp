#include "niaudit/builtin_systems.hpp"

#include "niaudit/errors.hpp"

#include <cmath>

namespace niaudit {

SystemWithStorage make_msd(double mass, double damping, double stiffness) {
    if (!(mass > 0.0) || !(damping > 0.0) || !(stiffness > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "mass-spring-damper parameters must be positive");
    }
    SystemWithStorage out;
    AffineSystem& s = out.system;
    s.n = 2;
    s.m = 1;
    s.name = "msd";
    s.drift = [=](const Vector& x) -> Vector {
        Vector f(2);
        f << x(1), -(stiffness / mass) * (x(0) + x(0) * x(0) * x(0)) - (damping / mass) * x(1);
        return f;
    };
    s.input_map = [=](const Vector&) -> Matrix {
        Matrix g(2, 1);
        g << 0.0, 1.0 / mass;
        return g;
    };
    s.output = [](const Vector& x) -> Vector { return x.head(1); };
    s.output_jacobian = [](const Vector&) -> Matrix {
        Matrix j(1, 2);
        j << 1.0, 0.0;
        return j;
    };
    out.storage.value = [=](const Vector& x) {
        const double x2 = x(0) * x(0);
        return 0.5 * mass * x(1) * x(1) + stiffness * (0.5 * x2 + 0.25 * x2 * x2);
    };
    out.storage.gradient = [=](const Vector& x) -> Vector {
        Vector g(2);
        g << stiffness * (x(0) + x(0) * x(0) * x(0)), mass * x(1);
        return g;
    };
    return out;
}

SystemWithStorage make_hamiltonian(Eigen::Index dof, const std::string& name, ScalarField hamiltonian,
                                   VectorField gradient) {
    if (dof <= 0) throw Error(ErrorKind::InvalidArgument, "Hamiltonian system needs dof > 0");
    SystemWithStorage out;
    AffineSystem& s = out.system;
    s.n = 2 * dof;
    s.m = dof;
    s.name = name;
    s.drift = [dof, gradient](const Vector& x) -> Vector {
        const Vector dh = gradient(x);
        Vector f(2 * dof);
        f << dh.tail(dof), -dh.head(dof);
        return f;
    };
    s.input_map = [dof](const Vector&) -> Matrix {
        Matrix g = Matrix::Zero(2 * dof, dof);
        g.bottomRows(dof).setIdentity();
        return g;
    };
    s.output = [dof](const Vector& x) -> Vector { return x.head(dof); };
    s.output_jacobian = [dof](const Vector&) -> Matrix {
        Matrix j = Matrix::Zero(dof, 2 * dof);
        j.leftCols(dof).setIdentity();
        return j;
    };
    out.storage.value = std::move(hamiltonian);
    out.storage.gradient = std::move(gradient);
    return out;
}

SystemWithStorage make_harmonic_oscillator() {
    return make_hamiltonian(
        1, "hamiltonian_oscillator", [](const Vector& x) { return 0.5 * x.squaredNorm(); },
        [](const Vector& x) -> Vector { return x; });
}

SystemWithStorage make_hamiltonian_pendulum() {
    return make_hamiltonian(
        1, "hamiltonian_pendulum", [](const Vector& x) { return 0.5 * x(1) * x(1) + (1.0 - std::cos(x(0))); },
        [](const Vector& x) -> Vector {
            Vector g(2);
            g << std::sin(x(0)), x(1);
            return g;
        });
}

Matrix TwoLinkArm::mass_matrix(const Vector& q) const {
    const double c2 = std::cos(q(1));
    Matrix m(2, 2);
    m(0, 0) = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i1 + i2;
    m(0, 1) = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2;
    m(1, 0) = m(0, 1);
    m(1, 1) = m2 * lc2 * lc2 + i2;
    return m;
}

Matrix TwoLinkArm::mass_matrix_partial(const Vector& q, int i) const {
    Matrix d = Matrix::Zero(2, 2);
    if (i == 1) {
        const double s = -m2 * l1 * lc2 * std::sin(q(1));
        d(0, 0) = 2.0 * s;
        d(0, 1) = s;
        d(1, 0) = s;
    }
    return d;
}

Matrix TwoLinkArm::coriolis(const Vector& q, const Vector& qdot) const {
    // c_kj = sum_i 1/2 (dM_kj/dq_i + dM_ki/dq_j - dM_ij/dq_k) qdot_i
    const Matrix d[2] = {mass_matrix_partial(q, 0), mass_matrix_partial(q, 1)};
    Matrix c = Matrix::Zero(2, 2);
    for (int k = 0; k < 2; ++k) {
        for (int j = 0; j < 2; ++j) {
            for (int i = 0; i < 2; ++i) c(k, j) += 0.5 * (d[i](k, j) + d[j](k, i) - d[k](i, j)) * qdot(i);
        }
    }
    return c;
}

double TwoLinkArm::potential(const Vector& q) const {
    return (m1 * lc1 + m2 * l1) * gravity * (1.0 - std::cos(q(0))) + m2 * lc2 * gravity * (1.0 - std::cos(q(0) + q(1)));
}

Vector TwoLinkArm::gravity_torque(const Vector& q) const {
    const double s12 = std::sin(q(0) + q(1));
    Vector g(2);
    g << (m1 * lc1 + m2 * l1) * gravity * std::sin(q(0)) + m2 * lc2 * gravity * s12, m2 * lc2 * gravity * s12;
    return g;
}

Matrix TwoLinkArm::mass_matrix_rate_fd(const Vector& q, const Vector& qdot, double h) const {
    return (mass_matrix(q + h * qdot) - mass_matrix(q - h * qdot)) / (2.0 * h);
}

SystemWithStorage make_euler_lagrange_pendulum2(const TwoLinkArm& arm) {
    SystemWithStorage out;
    AffineSystem& s = out.system;
    s.n = 4;
    s.m = 2;
    s.name = "pendulum2";
    s.drift = [arm](const Vector& x) -> Vector {
        const Vector q = x.head(2), qd = x.tail(2);
        Vector f(4);
        f << qd, arm.mass_matrix(q).ldlt().solve(-arm.coriolis(q, qd) * qd - arm.gravity_torque(q));
        return f;
    };
    s.input_map = [arm](const Vector& x) -> Matrix {
        Matrix g = Matrix::Zero(4, 2);
        g.bottomRows(2) = arm.mass_matrix(x.head(2)).inverse();
        return g;
    };
    s.output = [](const Vector& x) -> Vector { return x.head(2); };
    s.output_jacobian = [](const Vector&) -> Matrix {
        Matrix j = Matrix::Zero(2, 4);
        j.leftCols(2).setIdentity();
        return j;
    };
    out.storage.value = [arm](const Vector& x) {
        const Vector q = x.head(2), qd = x.tail(2);
        return 0.5 * qd.dot(arm.mass_matrix(q) * qd) + arm.potential(q) - arm.potential(Vector::Zero(2));
    };
    out.storage.gradient = [arm](const Vector& x) -> Vector {
        const Vector q = x.head(2), qd = x.tail(2);
        Vector g(4);
        for (int i = 0; i < 2; ++i) g(i) = 0.5 * qd.dot(arm.mass_matrix_partial(q, i) * qd) + arm.gravity_torque(q)(i);
        g.tail(2) = arm.mass_matrix(q) * qd;
        return g;
    };
    return out;
}

}  // namespace niaudit
