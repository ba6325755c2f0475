#include "niaudit/nonlinear.hpp"

#include "niaudit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace niaudit {
namespace {

std::vector<Vector> differentiate_samples(const std::vector<Vector>& y, double dt) {
    const std::size_t n = y.size();
    std::vector<Vector> d(n);
    if (n < 5) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 < n ? i + 1 : i;
            d[i] = b > a ? ((y[b] - y[a]) / (static_cast<double>(b - a) * dt)).eval() : Vector::Zero(y[i].size()).eval();
        }
        return d;
    }
    const double s = 1.0 / (12.0 * dt);
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = s * (-y[i + 2] + 8.0 * y[i + 1] - 8.0 * y[i - 1] + y[i - 2]);
    d[0] = s * (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]);
    d[1] = s * (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]);
    const std::size_t e = n - 1;
    d[e] = -s * (-25.0 * y[e] + 48.0 * y[e - 1] - 36.0 * y[e - 2] + 16.0 * y[e - 3] - 3.0 * y[e - 4]);
    d[e - 1] = -s * (-3.0 * y[e] - 10.0 * y[e - 1] + 18.0 * y[e - 2] - 6.0 * y[e - 3] + y[e - 4]);
    return d;
}

void require_size(const Vector& v, Eigen::Index n, const char* what) {
    if (v.size() != n) throw Error(ErrorKind::DimensionMismatch, std::string(what) + " has the wrong size");
}

}  // namespace

void NonlinearSystem::validate(double tol) const {
    if (n <= 0 || m <= 0) throw Error(ErrorKind::InvalidArgument, name + ": dimensions must be positive");
    if (!dynamics || !output) throw Error(ErrorKind::InvalidArgument, name + ": missing dynamics or output");
    const Vector f0 = dynamics(Vector::Zero(n), Vector::Zero(m));
    const Vector h0 = output(Vector::Zero(n));
    require_size(f0, n, "f(0, 0)");
    require_size(h0, m, "h(0)");
    if (f0.norm() > tol || h0.norm() > tol) {
        throw Error(ErrorKind::AssumptionFailed, name + ": the origin is not an equilibrium with zero output");
    }
}

Matrix NonlinearSystem::output_jacobian_at(const Vector& x) const {
    if (output_jacobian) return output_jacobian(x);
    return fd_jacobian(output, x);
}

NonlinearSystem AffineSystem::to_nonlinear() const {
    NonlinearSystem sys;
    sys.n = n;
    sys.m = m;
    sys.name = name;
    sys.dynamics = [f = drift, g = input_map](const Vector& x, const Vector& u) -> Vector { return f(x) + g(x) * u; };
    sys.output = output;
    sys.output_jacobian = output_jacobian;
    return sys;
}

Matrix AffineSystem::output_jacobian_at(const Vector& x) const {
    if (output_jacobian) return output_jacobian(x);
    return fd_jacobian(output, x);
}

Vector StorageFunction::gradient_at(const Vector& x) const {
    if (gradient) return gradient(x);
    return fd_gradient(value, x);
}

void Trajectory::write_csv(std::ostream& os) const {
    if (states.empty()) return;
    const Eigen::Index n = states.front().size(), m = inputs.front().size(), p = outputs.front().size();
    os << "t";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
    for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
    for (Eigen::Index i = 1; i <= p; ++i) os << ",y" << i;
    os << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < times.size(); ++k) {
        os << times[k];
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << states[k](i);
        for (Eigen::Index i = 0; i < m; ++i) os << ',' << inputs[k](i);
        for (Eigen::Index i = 0; i < p; ++i) os << ',' << outputs[k](i);
        os << '\n';
    }
}

Trajectory simulate(const NonlinearSystem& sys, const Vector& x0, const Signal& input, double horizon, double dt) {
    require_size(x0, sys.n, "initial state");
    const std::size_t steps = step_count(horizon, dt);
    Trajectory traj;
    traj.dt = dt;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.inputs.reserve(steps + 1);
    traj.outputs.reserve(steps + 1);
    auto rhs = [&](double t, const Vector& x) -> Vector { return sys.dynamics(x, input(t)); };
    Vector x = x0;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        traj.times.push_back(t);
        traj.inputs.push_back(input(t));
        traj.outputs.push_back(sys.output(x));
        traj.states.push_back(x);
        if (k == steps) break;
        x = rk4_step(rhs, t, x, dt);
        if (!all_finite(x)) {
            throw BlowUp(t + dt, sys.name + ": state left the finite range at t = " + std::to_string(t + dt));
        }
    }
    return traj;
}

DissipativityReport dissipativity_check(const NonlinearSystem& sys, const StorageFunction& storage,
                                        const Trajectory& traj, double tol) {
    const std::size_t n = traj.size();
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty trajectory");
    std::vector<Vector> ydot;
    if (!sys.output_jacobian) ydot = differentiate_samples(traj.outputs, traj.dt);

    DissipativityReport report;
    report.max_differential_violation = -std::numeric_limits<double>::infinity();
    std::vector<double> supply(n), values(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vector& x = traj.states[k];
        const Vector& u = traj.inputs[k];
        const Vector xdot = sys.dynamics(x, u);
        const Vector yd = sys.output_jacobian ? (sys.output_jacobian(x) * xdot).eval() : ydot[k];
        supply[k] = yd.dot(u);
        values[k] = storage.value(x);
        const double excess = storage.gradient_at(x).dot(xdot) - supply[k];
        if (excess > report.max_differential_violation) {
            report.max_differential_violation = excess;
            report.worst_index = k;
        }
    }
    const std::vector<double> work = cumulative_trapezoid(supply, traj.dt);
    report.max_integral_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        report.max_integral_violation = std::max(report.max_integral_violation, values[k] - values[0] - work[k]);
    }
    report.integral_slack = -report.max_integral_violation;
    report.max_violation = std::max({0.0, report.max_differential_violation, report.max_integral_violation});
    report.passed = report.max_violation <= tol;
    return report;
}

PointwiseReport nni_pointwise_check(const AffineSystem& sys, const StorageFunction& storage,
                                    const std::vector<Vector>& states, const std::vector<Vector>& inputs, double tol) {
    if (states.size() != inputs.size()) throw Error(ErrorKind::DimensionMismatch, "state and input sample counts differ");
    PointwiseReport report;
    report.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < states.size(); ++k) {
        const Vector& x = states[k];
        const Vector& u = inputs[k];
        const Vector xdot = sys.drift(x) + sys.input_map(x) * u;
        const double gap = storage.gradient_at(x).dot(xdot) - (sys.output_jacobian_at(x) * xdot).dot(u);
        report.max_abs_gap = std::max(report.max_abs_gap, std::abs(gap));
        if (gap > report.max_violation) {
            report.max_violation = gap;
            report.worst_x = x;
            report.worst_u = u;
        }
    }
    report.samples = states.size();
    report.passed = report.max_violation <= tol;
    return report;
}

PointwiseReport nni_pointwise_check(const AffineSystem& sys, const StorageFunction& storage, const Box& state_box,
                                    const Box& input_box, std::size_t n_samples, double tol) {
    require_size(state_box.lo, sys.n, "state box");
    require_size(input_box.lo, sys.m, "input box");
    Box joint{Vector(sys.n + sys.m), Vector(sys.n + sys.m)};
    joint.lo << state_box.lo, input_box.lo;
    joint.hi << state_box.hi, input_box.hi;
    std::vector<Vector> xs, us;
    for (const Vector& p : sobol_points(joint, n_samples)) {
        xs.push_back(p.head(sys.n));
        us.push_back(p.tail(sys.m));
    }
    return nni_pointwise_check(sys, storage, xs, us, tol);
}

GasProbeReport gas_probe(const NonlinearSystem& sys, const std::vector<Vector>& initial_states, double horizon,
                         double delta, double dt) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "gas_probe needs delta > 0");
    GasProbeReport report;
    report.all_converged = true;
    const Signal zero = zero_signal(sys.m);
    for (const Vector& x0 : initial_states) {
        const Trajectory traj = simulate(sys, x0, zero, horizon, dt);
        const double final_norm = traj.states.back().norm();
        report.final_norms.push_back(final_norm);
        report.worst_final_norm = std::max(report.worst_final_norm, final_norm);
        if (!(final_norm < delta)) report.all_converged = false;
    }
    return report;
}

ObservabilityProbeReport zero_state_observability_probe(const NonlinearSystem& sys,
                                                        const std::vector<Vector>& initial_states, double horizon,
                                                        double dt, double tol) {
    ObservabilityProbeReport report;
    report.min_output_ratio = std::numeric_limits<double>::infinity();
    const Signal zero = zero_signal(sys.m);
    for (const Vector& x0 : initial_states) {
        if (x0.norm() == 0.0) continue;
        const Trajectory traj = simulate(sys, x0, zero, horizon, dt);
        double peak = 0.0;
        for (const Vector& y : traj.outputs) peak = std::max(peak, y.norm());
        report.min_output_ratio = std::min(report.min_output_ratio, peak / x0.norm());
    }
    report.passed = report.min_output_ratio > tol;
    return report;
}

double lipschitz_estimate(const NonlinearSystem& sys, const Box& box, std::size_t n_samples) {
    require_size(box.lo, sys.n, "box");
    const std::vector<Vector> pts = sobol_points(box, n_samples);
    const Vector u0 = Vector::Zero(sys.m);
    double best = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double dx = (pts[i] - pts[i - 1]).norm();
        if (dx == 0.0) continue;
        best = std::max(best, (sys.dynamics(pts[i], u0) - sys.dynamics(pts[i - 1], u0)).norm() / dx);
    }
    return best;
}

NonlinearSystem parallel(const NonlinearSystem& a, const NonlinearSystem& b) {
    if (a.m != b.m) throw Error(ErrorKind::DimensionMismatch, "parallel: input dimensions differ");
    NonlinearSystem sys;
    sys.n = a.n + b.n;
    sys.m = a.m;
    sys.name = a.name + "+" + b.name;
    const Eigen::Index n1 = a.n, n2 = b.n;
    sys.dynamics = [a, b, n1, n2](const Vector& x, const Vector& u) -> Vector {
        Vector dx(n1 + n2);
        dx << a.dynamics(x.head(n1), u), b.dynamics(x.tail(n2), u);
        return dx;
    };
    sys.output = [a, b, n1, n2](const Vector& x) -> Vector { return a.output(x.head(n1)) + b.output(x.tail(n2)); };
    if (a.output_jacobian && b.output_jacobian) {
        sys.output_jacobian = [a, b, n1, n2](const Vector& x) -> Matrix {
            Matrix j(a.m, n1 + n2);
            j << a.output_jacobian(x.head(n1)), b.output_jacobian(x.tail(n2));
            return j;
        };
    }
    return sys;
}

AffineSystem parallel(const AffineSystem& a, const AffineSystem& b) {
    if (a.m != b.m) throw Error(ErrorKind::DimensionMismatch, "parallel: input dimensions differ");
    AffineSystem sys;
    sys.n = a.n + b.n;
    sys.m = a.m;
    sys.name = a.name + "+" + b.name;
    const Eigen::Index n1 = a.n, n2 = b.n;
    sys.drift = [a, b, n1, n2](const Vector& x) -> Vector {
        Vector dx(n1 + n2);
        dx << a.drift(x.head(n1)), b.drift(x.tail(n2));
        return dx;
    };
    sys.input_map = [a, b, n1, n2](const Vector& x) -> Matrix {
        Matrix g(n1 + n2, a.m);
        g << a.input_map(x.head(n1)), b.input_map(x.tail(n2));
        return g;
    };
    sys.output = [a, b, n1, n2](const Vector& x) -> Vector { return a.output(x.head(n1)) + b.output(x.tail(n2)); };
    sys.output_jacobian = [a, b, n1, n2](const Vector& x) -> Matrix {
        Matrix j(a.m, n1 + n2);
        j << a.output_jacobian_at(x.head(n1)), b.output_jacobian_at(x.tail(n2));
        return j;
    };
    return sys;
}

StorageFunction sum_storage(const StorageFunction& v1, Eigen::Index n1, const StorageFunction& v2, Eigen::Index n2) {
    StorageFunction v;
    v.value = [v1, v2, n1, n2](const Vector& x) { return v1.value(x.head(n1)) + v2.value(x.tail(n2)); };
    v.gradient = [v1, v2, n1, n2](const Vector& x) -> Vector {
        Vector g(n1 + n2);
        g << v1.gradient_at(x.head(n1)), v2.gradient_at(x.tail(n2));
        return g;
    };
    return v;
}

}  // namespace niaudit
