#include "niaudit/free_motion.hpp"

#include "niaudit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

namespace niaudit {
namespace {

constexpr double kOriginRadius = 1e-3;
constexpr double kZeroTol = 1e-9;
constexpr std::size_t kLocusRefinements = 32;

Box default_eta_box(Eigen::Index n) { return Box::cube(n, -2.0, 2.0); }

// Newton projection onto {hf = 0}; nullopt when it leaves the box or stalls.
std::optional<Vector> project_to_zero_locus(const CascadeIntegratorSystem& sys, Vector eta, const Box& box) {
    for (int it = 0; it < 50; ++it) {
        const double phi = sys.hf(eta);
        if (std::abs(phi) <= 1e-13) return eta;
        const Vector grad = sys.grad_hf_at(eta);
        const double g2 = grad.squaredNorm();
        if (g2 < 1e-24) return std::nullopt;
        eta -= (phi / g2) * grad;
        if (!box.contains(eta) || !all_finite(eta)) return std::nullopt;
    }
    return std::abs(sys.hf(eta)) <= kZeroTol ? std::optional<Vector>(eta) : std::nullopt;
}

}  // namespace

double CascadeIntegratorSystem::hf(const Vector& eta) const { return grad_h_at(eta).dot(f(eta)); }

double CascadeIntegratorSystem::hg(const Vector& eta) const { return grad_h_at(eta).dot(g(eta)); }

Vector CascadeIntegratorSystem::grad_h_at(const Vector& eta) const {
    return grad_h ? grad_h(eta) : fd_gradient(h, eta);
}

Vector CascadeIntegratorSystem::grad_hf_at(const Vector& eta) const {
    return grad_hf ? grad_hf(eta) : fd_gradient([this](const Vector& e) { return hf(e); }, eta);
}

Vector CascadeIntegratorSystem::grad_hg_at(const Vector& eta) const {
    return grad_hg ? grad_hg(eta) : fd_gradient([this](const Vector& e) { return hg(e); }, eta);
}

void CascadeIntegratorSystem::validate(double tol) const {
    if (n <= 0 || !f || !g || !h) throw Error(ErrorKind::InvalidArgument, name + ": cascade needs n > 0 and f, g, h");
    const Vector zero = Vector::Zero(n);
    if (f(zero).size() != n || g(zero).size() != n) {
        throw Error(ErrorKind::DimensionMismatch, name + ": f and g must return n-vectors");
    }
    if (f(zero).norm() > tol) throw Error(ErrorKind::AssumptionFailed, name + ": f(0) != 0");
    if (std::abs(h(zero)) > tol) throw Error(ErrorKind::AssumptionFailed, name + ": h(0) != 0");
}

NonlinearSystem CascadeIntegratorSystem::to_nonlinear() const {
    validate();
    NonlinearSystem out;
    out.n = n + 1;
    out.m = 1;
    out.name = name;
    const CascadeIntegratorSystem self = *this;
    out.dynamics = [self](const Vector& x, const Vector& u) -> Vector {
        const Vector eta = x.head(self.n);
        Vector dx(self.n + 1);
        dx.head(self.n) = self.f(eta) + self.g(eta) * x(self.n);
        dx(self.n) = u(0);
        return dx;
    };
    out.output = [self](const Vector& x) -> Vector { return Vector::Constant(1, self.h(x.head(self.n))); };
    out.output_jacobian = [self](const Vector& x) -> Matrix {
        Matrix j = Matrix::Zero(1, self.n + 1);
        j.leftCols(self.n) = self.grad_h_at(x.head(self.n)).transpose();
        return j;
    };
    return out;
}

void FreeMotionConditions::write(std::ostream& os) const {
    os << std::setprecision(10);
    os << "samples: " << samples << '\n';
    os << "cond1 grad_h.g constant: " << cond1.constant_value << " max_deviation " << cond1.max_deviation << ' '
       << (cond1.positive ? "PASS" : "FAIL") << '\n';
    os << "cond2 grad_h.grad(grad_h.f) max: " << cond2.max_value << ' ' << (cond2.holds ? "PASS" : "FAIL") << '\n';
    os << "cond3 min |grad_h.f| off origin: " << cond3.min_abs_off_origin << " zero-locus points "
       << cond3.zero_locus_samples.size() << ' ' << (cond3.holds ? "PASS" : "FAIL") << '\n';
    os << "overall: " << (overall ? "PASS" : "FAIL") << '\n';
}

void FreeMotionConditions::write_zero_locus_csv(std::ostream& os, const CascadeIntegratorSystem& sys) const {
    for (Eigen::Index i = 0; i < sys.n; ++i) os << "eta_" << i + 1 << ',';
    os << "hf\n" << std::setprecision(17);
    for (const Vector& eta : cond3.zero_locus_samples) {
        for (Eigen::Index i = 0; i < eta.size(); ++i) os << eta(i) << ',';
        os << sys.hf(eta) << '\n';
    }
}

FreeMotionConditions check_free_motion_conditions(const CascadeIntegratorSystem& sys, const Box& box,
                                                  std::size_t n_samples) {
    sys.validate();
    box.validate();
    if (box.dim() != sys.n) throw Error(ErrorKind::DimensionMismatch, "condition box must match dim(eta)");
    if (!box.contains(Vector::Zero(sys.n))) throw Error(ErrorKind::InvalidArgument, "condition box must contain 0");

    const std::vector<Vector> pts = sobol_points(box, n_samples);
    FreeMotionConditions r;
    r.samples = pts.size();
    r.cond2.max_value = -std::numeric_limits<double>::infinity();
    r.cond3.min_abs_off_origin = std::numeric_limits<double>::infinity();
    const double c0 = sys.hg(pts.front());
    r.cond1.constant_value = c0;

    std::vector<std::pair<double, std::size_t>> small;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vector& eta = pts[k];
        r.cond1.max_deviation = std::max(r.cond1.max_deviation, std::abs(sys.hg(eta) - c0));
        r.cond2.max_value = std::max(r.cond2.max_value, sys.grad_h_at(eta).dot(sys.grad_hf_at(eta)));
        if (eta.norm() > kOriginRadius) {
            const double a = std::abs(sys.hf(eta));
            r.cond3.min_abs_off_origin = std::min(r.cond3.min_abs_off_origin, a);
            if (a <= kZeroTol) r.cond3.zero_locus_samples.push_back(eta);
            else small.emplace_back(a, k);
        }
    }
    // refine the smallest samples onto the zero set
    std::sort(small.begin(), small.end());
    small.resize(std::min(small.size(), kLocusRefinements));
    for (const auto& [value, k] : small) {
        const std::optional<Vector> z = project_to_zero_locus(sys, pts[k], box);
        if (z && z->norm() > kOriginRadius) {
            r.cond3.zero_locus_samples.push_back(*z);
            r.cond3.min_abs_off_origin = std::min(r.cond3.min_abs_off_origin, std::abs(sys.hf(*z)));
        }
    }
    r.cond1.positive = c0 > 0.0 && r.cond1.max_deviation <= 1e-8 * std::max(1.0, std::abs(c0));
    r.cond2.holds = r.cond2.max_value <= 1e-9;
    r.cond3.holds = r.cond3.zero_locus_samples.empty() && r.cond3.min_abs_off_origin > kZeroTol;
    r.overall = r.cond1.positive && r.cond2.holds && r.cond3.holds;
    return r;
}

FreeMotionStorage free_motion_storage(const CascadeIntegratorSystem& sys, const Box& box, std::size_t n_check) {
    sys.validate();
    const std::vector<Vector> pts = sobol_points(box, n_check);
    const double c0 = sys.hg(pts.front());
    double dev = 0.0;
    for (const Vector& eta : pts) dev = std::max(dev, std::abs(sys.hg(eta) - c0));
    if (!(c0 > 0.0) || dev > 1e-8 * std::max(1.0, std::abs(c0))) {
        std::ostringstream msg;
        msg << sys.name << ": grad_h.g is not a positive constant (value " << c0 << ", deviation " << dev << ")";
        throw Error(ErrorKind::Cond1Violated, msg.str());
    }
    const Eigen::Index n = sys.n;
    FreeMotionStorage s;
    s.hg = c0;
    s.expanded.value = [sys, n](const Vector& x) {
        const Vector eta = x.head(n);
        const double xi = x(n), phi = sys.hf(eta), psi = sys.hg(eta);
        return phi * phi / (2.0 * psi) + phi * xi + 0.5 * psi * xi * xi;
    };
    s.expanded.gradient = [sys, n](const Vector& x) -> Vector {
        const Vector eta = x.head(n);
        const double xi = x(n), phi = sys.hf(eta), psi = sys.hg(eta);
        const Vector dphi = sys.grad_hf_at(eta), dpsi = sys.grad_hg_at(eta);
        Vector grad(n + 1);
        grad.head(n) = (phi / psi + xi) * dphi + (0.5 * xi * xi - phi * phi / (2.0 * psi * psi)) * dpsi;
        grad(n) = phi + psi * xi;
        return grad;
    };
    s.factored.value = [sys, n](const Vector& x) {
        const Vector eta = x.head(n);
        const double psi = sys.hg(eta), w = sys.hf(eta) + psi * x(n);
        return w * w / (2.0 * psi);
    };
    return s;
}

FreeMotionStorage free_motion_storage(const CascadeIntegratorSystem& sys) {
    return free_motion_storage(sys, default_eta_box(sys.n));
}

double free_motion_residual(const CascadeIntegratorSystem& sys, const Vector& eta, double xi) {
    const double phi = sys.hf(eta), psi = sys.hg(eta);
    const Vector beta = sys.grad_hf_at(eta);
    const Vector alpha = (phi / psi) * beta;  // grad(phi^2) / (2 psi)
    const Vector fe = sys.f(eta), ge = sys.g(eta);
    return alpha.dot(fe) + (beta.dot(fe) + alpha.dot(ge)) * xi + beta.dot(ge) * xi * xi;
}

FreeMotionNniReport verify_free_motion_nni(const CascadeIntegratorSystem& sys, const StorageFunction& v,
                                           const std::vector<Signal>& inputs, double horizon, double dt,
                                           const Vector& x0, const Box& residual_box, std::size_t residual_samples,
                                           double tol) {
    const NonlinearSystem ns = sys.to_nonlinear();
    const Vector start = x0.size() == 0 ? Vector::Zero(ns.n) : x0;
    if (start.size() != ns.n) throw Error(ErrorKind::DimensionMismatch, "initial state must be (eta, xi)");
    if (residual_box.dim() != ns.n) throw Error(ErrorKind::DimensionMismatch, "residual box must be (eta, xi)");

    FreeMotionNniReport report;
    report.passed = true;
    for (const Signal& u : inputs) {
        const Trajectory traj = simulate(ns, start, u, horizon, dt);
        report.runs.push_back(dissipativity_check(ns, v, traj, tol));
        report.max_violation = std::max(report.max_violation, report.runs.back().max_violation);
        report.passed = report.passed && report.runs.back().passed;
    }

    ResidualScan& scan = report.residual;
    scan.max_value = -std::numeric_limits<double>::infinity();
    scan.min_value = std::numeric_limits<double>::infinity();
    for (const Vector& p : sobol_points(residual_box, residual_samples)) {
        const double r = free_motion_residual(sys, p.head(sys.n), p(sys.n));
        if (r > scan.max_value) {
            scan.max_value = r;
            scan.worst_point = p;
        }
        scan.min_value = std::min(scan.min_value, r);
        if (r > 1e-9) ++scan.positive;
        ++scan.samples;
    }
    return report;
}

StoragePositivityReport audit_storage_positivity(const CascadeIntegratorSystem& sys, const StorageFunction& v,
                                                 const Box& box, std::size_t n_samples) {
    box.validate();
    if (box.dim() != sys.n + 1) throw Error(ErrorKind::DimensionMismatch, "positivity box must be (eta, xi)");
    StoragePositivityReport r;
    r.min_off_origin = std::numeric_limits<double>::infinity();
    r.min_sampled = std::numeric_limits<double>::infinity();
    r.min_off_zero_set = std::numeric_limits<double>::infinity();
    for (const Vector& p : sobol_points(box, n_samples)) {
        if (p.norm() <= kOriginRadius) continue;
        const double value = v.value(p);
        r.min_sampled = std::min(r.min_sampled, value);
        if (std::abs(sys.hf(p.head(sys.n)) + sys.hg(p.head(sys.n)) * p(sys.n)) > kZeroTol) {
            r.min_off_zero_set = std::min(r.min_off_zero_set, value);
        }
        if (value < r.min_off_origin) {
            r.min_off_origin = value;
            r.argmin = p;
        }
        // the point of the zero set above this eta
        const Vector eta = p.head(sys.n);
        Vector z(sys.n + 1);
        z.head(sys.n) = eta;
        z(sys.n) = -sys.hf(eta) / sys.hg(eta);
        if (z.norm() <= kOriginRadius || !box.contains(z)) continue;
        const double vz = v.value(z);
        r.semidefinite_directions.push_back(z);
        r.max_abs_on_zero_set = std::max(r.max_abs_on_zero_set, std::abs(vz));
        if (vz < r.min_off_origin) {
            r.min_off_origin = vz;
            r.argmin = z;
        }
    }
    r.positive_definite_evidence = r.min_off_origin > kZeroTol;
    return r;
}

ClosedLoopReport free_motion_closed_loop(const CascadeIntegratorSystem& plant, const NonlinearSystem& controller,
                                         const StorageFunction& v1, const StorageFunction& v2,
                                         const std::vector<Vector>& initial_states, const ClosedLoopOptions& options) {
    const FeedbackSystem fb{plant.to_nonlinear(), controller};
    return closed_loop_experiment(fb, composite_lyapunov(fb, v1, v2), initial_states, options);
}

CascadeIntegratorSystem make_first_order_cascade(double a, double b, double c) {
    if (b == 0.0 || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        throw Error(ErrorKind::InvalidArgument, "first-order cascade needs finite a, c and b != 0");
    }
    CascadeIntegratorSystem s;
    s.n = 1;
    s.name = "first_order_cascade";
    s.f = [a](const Vector& eta) -> Vector { return a * eta; };
    s.g = [b](const Vector&) -> Vector { return Vector::Constant(1, b); };
    s.h = [c](const Vector& eta) { return c * eta(0); };
    s.grad_h = [c](const Vector&) -> Vector { return Vector::Constant(1, c); };
    s.grad_hf = [a, c](const Vector&) -> Vector { return Vector::Constant(1, c * a); };
    s.grad_hg = [](const Vector&) -> Vector { return Vector::Zero(1); };
    return s;
}

CascadeIntegratorSystem make_cubic_damped_cascade() {
    CascadeIntegratorSystem s;
    s.n = 2;
    s.name = "cubic_damped_cascade";
    s.f = [](const Vector& eta) -> Vector {
        Vector out(2);
        out << eta(1), -eta(0) * eta(0) * eta(0) - eta(1);
        return out;
    };
    s.g = [](const Vector&) -> Vector { return Vector::Unit(2, 1); };
    s.h = [](const Vector& eta) { return eta(1); };
    s.grad_h = [](const Vector&) -> Vector { return Vector::Unit(2, 1); };
    s.grad_hf = [](const Vector& eta) -> Vector {
        Vector out(2);
        out << -3.0 * eta(0) * eta(0), -1.0;
        return out;
    };
    s.grad_hg = [](const Vector&) -> Vector { return Vector::Zero(2); };
    return s;
}

CascadeIntegratorSystem make_pr2_cascade() {
    Matrix a(2, 2);
    a << -1.0, -1.0, 1.0, 0.0;
    const Vector b = Vector::Unit(2, 0);
    const Vector c = Vector::Ones(2);
    CascadeIntegratorSystem s;
    s.n = 2;
    s.name = "pr2_cascade";
    s.f = [a](const Vector& eta) -> Vector { return a * eta; };
    s.g = [b](const Vector&) -> Vector { return b; };
    s.h = [c](const Vector& eta) { return c.dot(eta); };
    s.grad_h = [c](const Vector&) -> Vector { return c; };
    s.grad_hf = [a, c](const Vector&) -> Vector { return a.transpose() * c; };
    s.grad_hg = [](const Vector&) -> Vector { return Vector::Zero(2); };
    return s;
}

}  // namespace niaudit
