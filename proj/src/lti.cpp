#include "niaudit/lti.hpp"

#include "niaudit/errors.hpp"
#include "lmi_search.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace niaudit {
namespace {

constexpr double kPoleDistance = 1e-8;
constexpr double kAxisTol = 1e-8;

std::string dims(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_hurwitz_free_axis(const StateSpace& sys, OriginPolePolicy policy, bool& no_rhp) {
    no_rhp = true;
    for (const Complex& p : poles(sys)) {
        if (std::abs(p) <= kAxisTol) {
            if (policy == OriginPolePolicy::Refuse) {
                throw Error(ErrorKind::PoleAtOrigin, "A has an eigenvalue at s = 0");
            }
            continue;
        }
        if (std::abs(p.real()) <= kAxisTol) {
            throw Error(ErrorKind::ImaginaryAxisPole, "A has an eigenvalue on the imaginary axis");
        }
        if (p.real() > kAxisTol) no_rhp = false;
    }
}

}  // namespace

StateSpace StateSpace::make(Matrix a, Matrix b, Matrix c, Matrix d) {
    StateSpace sys{std::move(a), std::move(b), std::move(c), std::move(d)};
    sys.validate();
    return sys;
}

StateSpace StateSpace::static_gain(const Matrix& d) {
    return make(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
}

StateSpace StateSpace::siso(double a, double b, double c, double d) {
    return make(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, c),
                Matrix::Constant(1, 1, d));
}

void StateSpace::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw Error(ErrorKind::NonSquare, "A is " + dims(A));
    if (B.rows() != n || C.cols() != n || C.rows() != D.rows() || B.cols() != D.cols()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "A " + dims(A) + ", B " + dims(B) + ", C " + dims(C) + ", D " + dims(D));
    }
    if (D.rows() == 0 || D.cols() == 0) throw Error(ErrorKind::DimensionMismatch, "system has no inputs or outputs");
    if (!all_finite(A) || !all_finite(B) || !all_finite(C) || !all_finite(D)) {
        throw Error(ErrorKind::NonFinite, "state-space data contains NaN or Inf");
    }
}

void StateSpace::require_square() const {
    if (!square()) throw Error(ErrorKind::DimensionMismatch, "system must have as many outputs as inputs");
}

StateSpace parallel(const StateSpace& g, const StateSpace& h) {
    if (g.inputs() != h.inputs() || g.outputs() != h.outputs()) {
        throw Error(ErrorKind::DimensionMismatch, "parallel: port counts differ");
    }
    const Eigen::Index n1 = g.states(), n2 = h.states();
    Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
    a.topLeftCorner(n1, n1) = g.A;
    a.bottomRightCorner(n2, n2) = h.A;
    Matrix b(n1 + n2, g.inputs());
    b << g.B, h.B;
    Matrix c(g.outputs(), n1 + n2);
    c << g.C, h.C;
    return StateSpace::make(a, b, c, g.D + h.D);
}

FrequencyGrid FrequencyGrid::logspace(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) {
        throw Error(ErrorKind::InvalidArgument, "frequency grid needs 0 < lo < hi and at least 2 points");
    }
    FrequencyGrid grid;
    grid.omegas.resize(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) {
        grid.omegas[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return grid;
}

FrequencyGrid FrequencyGrid::standard() { return logspace(1e-3, 1e3, 2000); }

void FrequencyGrid::validate() const {
    if (omegas.empty()) throw Error(ErrorKind::InvalidArgument, "empty frequency grid");
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (!(omegas[i] > 0.0) || !std::isfinite(omegas[i]) || (i > 0 && !(omegas[i] > omegas[i - 1]))) {
            throw Error(ErrorKind::InvalidArgument, "frequency grid must be positive and strictly increasing");
        }
    }
}

std::vector<Complex> poles(const StateSpace& sys) {
    if (sys.states() == 0) return {};
    Eigen::EigenSolver<Matrix> es(sys.A, false);
    const Eigen::VectorXcd ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

ComplexMatrix freq_response(const StateSpace& sys, double omega) {
    const ComplexMatrix d = sys.D.cast<Complex>();
    const Eigen::Index n = sys.states();
    if (n == 0) return d;
    const Complex s(0.0, omega);
    for (const Complex& p : poles(sys)) {
        if (std::abs(p - s) <= kPoleDistance) {
            throw Error(ErrorKind::PoleOnGrid, "j*" + std::to_string(omega) + " is a pole of the system");
        }
    }
    ComplexMatrix resolvent = s * ComplexMatrix::Identity(n, n) - sys.A.cast<Complex>();
    const ComplexMatrix x = resolvent.partialPivLu().solve(sys.B.cast<Complex>());
    return sys.C.cast<Complex>() * x + d;
}

Matrix dc_gain(const StateSpace& sys) {
    if (sys.states() == 0) return sys.D;
    Eigen::FullPivLU<Matrix> lu(sys.A);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularA, "A is singular; G(0) is undefined");
    return sys.D - sys.C * lu.solve(sys.B);
}

NiFrequencyReport ni_frequency_test(const StateSpace& sys, const FrequencyGrid& grid, double tol,
                                    OriginPolePolicy policy) {
    sys.require_square();
    grid.validate();
    NiFrequencyReport report;
    require_hurwitz_free_axis(sys, policy, report.no_rhp_poles);
    report.worst_lambda_min = std::numeric_limits<double>::infinity();
    const Complex j(0.0, 1.0);
    for (double w : grid.omegas) {
        const ComplexMatrix g = freq_response(sys, w);
        const ComplexMatrix h = j * w * (g - g.adjoint());
        const double lam = hermitian_min_eigenvalue(h);
        if (lam < report.worst_lambda_min) {
            report.worst_lambda_min = lam;
            report.worst_omega = w;
        }
    }
    report.is_ni = report.no_rhp_poles && report.worst_lambda_min >= -tol;
    return report;
}

SniFrequencyReport sni_frequency_test(const StateSpace& sys, const FrequencyGrid& grid, double margin) {
    sys.require_square();
    grid.validate();
    for (const Complex& p : poles(sys)) {
        if (p.real() >= 0.0) throw Error(ErrorKind::NotHurwitz, "A is not Hurwitz");
    }
    SniFrequencyReport report;
    report.worst_normalized = std::numeric_limits<double>::infinity();
    const Complex j(0.0, 1.0);
    for (double w : grid.omegas) {
        const ComplexMatrix g = freq_response(sys, w);
        const double lam = hermitian_min_eigenvalue(j * (g - g.adjoint()));
        const double normalized = lam / (w / (1.0 + w * w));
        if (normalized < report.worst_normalized) {
            report.worst_normalized = normalized;
            report.worst_lambda_min = lam;
            report.worst_omega = w;
        }
    }
    report.is_sni = report.worst_normalized >= margin;
    return report;
}

PrFrequencyReport pr_frequency_test(const StateSpace& sys, const FrequencyGrid& grid, double tol) {
    sys.require_square();
    grid.validate();
    PrFrequencyReport report;
    report.no_rhp_poles = true;
    for (const Complex& p : poles(sys)) {
        if (p.real() > kAxisTol) report.no_rhp_poles = false;
    }
    report.worst_lambda_min = std::numeric_limits<double>::infinity();
    for (double w : grid.omegas) {
        const ComplexMatrix g = freq_response(sys, w);
        const double lam = hermitian_min_eigenvalue(g + g.adjoint());
        if (lam < report.worst_lambda_min) {
            report.worst_lambda_min = lam;
            report.worst_omega = w;
        }
    }
    report.is_pr = report.no_rhp_poles && report.worst_lambda_min >= -tol;
    return report;
}

StateSpace ni_from_pr(const StateSpace& sys) {
    sys.require_square();
    const Eigen::Index n = sys.states(), m = sys.inputs();
    Matrix a = Matrix::Zero(n + m, n + m);
    a.topLeftCorner(n, n) = sys.A;
    a.topRightCorner(n, m) = sys.B;
    Matrix b = Matrix::Zero(n + m, m);
    b.bottomRows(m) = Matrix::Identity(m, m);
    Matrix c(m, n + m);
    c << sys.C, sys.D;
    return StateSpace::make(a, b, c, Matrix::Zero(m, m));
}

StateSpace pr_from_ni(const StateSpace& sys) {
    sys.require_square();
    return StateSpace::make(sys.A, sys.B, sys.C * sys.A, sys.C * sys.B);
}

Matrix storage_lmi_block(const StateSpace& sys, const Matrix& x) {
    sys.require_square();
    const Eigen::Index n = sys.states(), m = sys.inputs();
    if (x.rows() != n || x.cols() != n) throw Error(ErrorKind::DimensionMismatch, "storage matrix must be n x n");
    Matrix block(n + m, n + m);
    const Matrix off = x * sys.B - sys.A.transpose() * sys.C.transpose();
    block.topLeftCorner(n, n) = x * sys.A + sys.A.transpose() * x;
    block.topRightCorner(n, m) = off;
    block.bottomLeftCorner(m, n) = off.transpose();
    block.bottomRightCorner(m, m) = -(sys.C * sys.B + sys.B.transpose() * sys.C.transpose());
    return block;
}

NiCertificate verify_certificate(const StateSpace& sys, const Matrix& p, double tol) {
    sys.require_square();
    const Eigen::Index n = sys.states();
    if (p.rows() != n || p.cols() != n) throw Error(ErrorKind::DimensionMismatch, "P must be n x n, got " + dims(p));
    NiCertificate cert;
    cert.P = p;
    if (n == 0) {
        // A static gain is NI exactly when it is symmetric.
        cert.lambda_min_P = std::numeric_limits<double>::infinity();
        cert.lambda_max_lyap = -std::numeric_limits<double>::infinity();
        cert.residual_affine = (sys.D - sys.D.transpose()).norm();
        cert.storage = Matrix(0, 0);
        cert.lambda_max_storage_lmi = max_eigenvalue(storage_lmi_block(sys, Matrix(0, 0)));
        cert.valid = cert.residual_affine <= tol;
        return cert;
    }
    cert.residual_affine = (sys.B + sys.A * p * sys.C.transpose()).norm();
    cert.lambda_min_P = min_eigenvalue(p);
    cert.lambda_max_lyap = max_eigenvalue(sys.A * p + p * sys.A.transpose());
    cert.lambda_max_storage_lmi = std::numeric_limits<double>::quiet_NaN();
    if (cert.lambda_min_P > 0.0) {
        Matrix x = p.ldlt().solve(Matrix::Identity(n, n));
        x = 0.5 * (x + x.transpose());
        cert.lambda_max_storage_lmi = max_eigenvalue(storage_lmi_block(sys, x));
        cert.storage = std::move(x);
    }
    cert.valid = cert.lambda_min_P > tol && cert.residual_affine <= tol && cert.lambda_max_lyap <= tol;
    return cert;
}

std::optional<NiCertificate> search_certificate(const StateSpace& sys, const CertificateSearchOptions& options) {
    sys.require_square();
    const Eigen::Index n = sys.states();
    if (n == 0) {
        NiCertificate cert = verify_certificate(sys, Matrix(0, 0), options.tol);
        return cert.valid ? std::optional(cert) : std::nullopt;
    }
    if (!Eigen::FullPivLU<Matrix>(sys.A).isInvertible()) {
        throw Error(ErrorKind::SingularA, "certificate search needs det(A) != 0");
    }
    const detail::AffineMap equality = [&](const Matrix& p) -> Matrix {
        return sys.B + sys.A * p * sys.C.transpose();
    };
    const std::vector<detail::ConeConstraint> cones{
        {[](const Matrix& p) -> Matrix { return p; }, options.pd_floor},
        {[&](const Matrix& p) -> Matrix { return -(sys.A * p + p * sys.A.transpose()); }, 0.0},
    };
    const auto found = detail::solve_lmi(n, &equality, cones, options.max_iter, 1e-2 * options.tol);
    if (!found) return std::nullopt;
    NiCertificate cert = verify_certificate(sys, found->X, options.tol);
    if (!cert.valid) return std::nullopt;
    return cert;
}

StorageCertificate verify_storage_certificate(const StateSpace& sys, const Matrix& x, bool allow_semidefinite,
                                              double tol) {
    StorageCertificate cert;
    cert.X = x;
    cert.lambda_max_lmi = max_eigenvalue(storage_lmi_block(sys, x));
    cert.lambda_min_X = x.size() == 0 ? std::numeric_limits<double>::infinity() : min_eigenvalue(x);
    const bool x_ok = allow_semidefinite ? cert.lambda_min_X >= -tol : cert.lambda_min_X > tol;
    cert.valid = x_ok && cert.lambda_max_lmi <= tol;
    return cert;
}

std::optional<StorageCertificate> search_storage_certificate(const StateSpace& sys, bool allow_semidefinite,
                                                             const CertificateSearchOptions& options) {
    sys.require_square();
    const Eigen::Index n = sys.states();
    const double floor = allow_semidefinite ? 0.0 : options.pd_floor;
    const std::vector<detail::ConeConstraint> cones{
        {[](const Matrix& x) -> Matrix { return x; }, floor},
        {[&](const Matrix& x) -> Matrix { return -storage_lmi_block(sys, x); }, 0.0},
    };
    const auto found = detail::solve_lmi(n, nullptr, cones, options.max_iter, 1e-2 * options.tol);
    if (!found) return std::nullopt;
    StorageCertificate cert = verify_storage_certificate(sys, found->X, allow_semidefinite, options.tol);
    if (!cert.valid) return std::nullopt;
    return cert;
}

DcGainReport dc_gain_condition(const StateSpace& plant, const StateSpace& controller) {
    const Matrix g0 = dc_gain(plant);
    const Matrix h0 = dc_gain(controller);
    if (g0.cols() != h0.rows() || g0.rows() != h0.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "plant and controller port counts differ");
    }
    const Matrix loop = g0 * h0;
    Eigen::EigenSolver<Matrix> es(loop, false);
    DcGainReport report;
    report.lambda_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < loop.rows(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        if (std::abs(ev.imag()) > 1e-9 * (1.0 + std::abs(ev))) report.real_spectrum = false;
        report.lambda_max = std::max(report.lambda_max, ev.real());
    }
    report.satisfied = report.real_spectrum && report.lambda_max < 1.0;
    return report;
}

Matrix block_lyapunov_matrix(const StateSpace& sys1, const Matrix& p1, const StateSpace& sys2, const Matrix& p2) {
    const Eigen::Index n1 = sys1.states(), n2 = sys2.states();
    if (p1.rows() != n1 || p1.cols() != n1 || p2.rows() != n2 || p2.cols() != n2) {
        throw Error(ErrorKind::DimensionMismatch, "storage matrices must match the state dimensions");
    }
    if (sys1.outputs() != sys2.inputs() || sys2.outputs() != sys1.inputs()) {
        throw Error(ErrorKind::DimensionMismatch, "feedback pair port counts differ");
    }
    Matrix m(n1 + n2, n1 + n2);
    m.topLeftCorner(n1, n1) = p1 - sys1.C.transpose() * sys2.D * sys1.C;
    m.topRightCorner(n1, n2) = -sys1.C.transpose() * sys2.C;
    m.bottomLeftCorner(n2, n1) = -sys2.C.transpose() * sys1.C;
    m.bottomRightCorner(n2, n2) = p2 - sys2.C.transpose() * sys1.D * sys2.C;
    return m;
}

LtiLyapunovCandidates lti_lyapunov_candidates(const StateSpace& sys1, const Matrix& p1, const StateSpace& sys2,
                                              const Matrix& p2, const Vector& x1, const Vector& x2) {
    const Matrix m = block_lyapunov_matrix(sys1, p1, sys2, p2);
    if (x1.size() != sys1.states() || x2.size() != sys2.states()) {
        throw Error(ErrorKind::DimensionMismatch, "state vectors do not match the systems");
    }
    Vector z(x1.size() + x2.size());
    z << x1, x2;
    LtiLyapunovCandidates out;
    out.block_form = 0.5 * z.dot(m * z);
    const double v1 = 0.5 * x1.dot(p1 * x1);
    const double v2 = 0.5 * x2.dot(p2 * x2);
    out.doubled_cross_form = v1 + v2 - 2.0 * (sys1.C * x1).dot(sys2.C * x2);
    return out;
}

TimeDomainNiReport time_domain_ni_check(const StateSpace& sys, const Matrix& storage, const Signal& input,
                                        double horizon, double dt, const std::optional<Vector>& x0) {
    sys.require_square();
    const Eigen::Index n = sys.states();
    if (storage.rows() != n || storage.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "storage matrix must be n x n");
    }
    const std::size_t steps = step_count(horizon, dt);
    const bool feedthrough = !sys.D.isZero(0.0);
    constexpr double h = 1e-6;

    Vector x = x0.value_or(Vector::Zero(n));
    if (x.size() != n) throw Error(ErrorKind::DimensionMismatch, "initial state has wrong size");
    auto rhs = [&](double t, const Vector& s) -> Vector { return sys.A * s + sys.B * input(t); };

    std::vector<double> supply(steps + 1), storage_values(steps + 1);
    TimeDomainNiReport report;
    report.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vector u = input(t);
        const Vector xdot = sys.A * x + sys.B * u;
        Vector ydot = sys.C * xdot;
        if (feedthrough) {
            const Vector udot = (input(t + h) - input(std::max(0.0, t - h))) / (t + h - std::max(0.0, t - h));
            ydot += sys.D * udot;
        }
        const double vdot = x.dot(storage * xdot);
        supply[k] = ydot.dot(u);
        storage_values[k] = 0.5 * x.dot(storage * x);
        report.max_violation = std::max(report.max_violation, vdot - supply[k]);
        if (k < steps) {
            x = rk4_step(rhs, t, x, dt);
            if (!all_finite(x)) throw BlowUp(t + dt, "LTI simulation diverged");
        }
    }
    const std::vector<double> work = cumulative_trapezoid(supply, dt);
    report.max_integral_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= steps; ++k) {
        report.max_integral_violation =
            std::max(report.max_integral_violation, storage_values[k] - storage_values[0] - work[k]);
    }
    report.samples = steps + 1;
    return report;
}

Matrix dissipation_factor(const StateSpace& sys, const Matrix& p) {
    return psd_factor(-(sys.A * p + p * sys.A.transpose()));
}

AuxiliaryRankReport wsnni_auxiliary_system(const StateSpace& sys, const Matrix& p, const Matrix& l,
                                           const FrequencyGrid& grid, double rank_tol) {
    sys.require_square();
    grid.validate();
    const Eigen::Index n = sys.states();
    if (p.rows() != n || p.cols() != n || l.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "P must be n x n and L must have n columns");
    }
    const Matrix lyap = sys.A * p + p * sys.A.transpose();
    const double mismatch = (l.transpose() * l + lyap).norm();
    if (mismatch > 1e-8 * (1.0 + lyap.norm())) {
        throw Error(ErrorKind::CertificateInvalid, "L^T L does not equal -(AP + PA^T)");
    }
    AuxiliaryRankReport report{StateSpace::make(sys.A, sys.B, l * p, l * sys.C.transpose()), 0.0, 0.0, false};
    report.min_singular_value = std::numeric_limits<double>::infinity();
    const Eigen::Index m = sys.inputs();
    for (double w : grid.omegas) {
        const ComplexMatrix resp = freq_response(report.auxiliary, w);
        const Vector sv = singular_values(resp);
        const double smallest = resp.rows() >= m && sv.size() >= m ? sv(m - 1) : 0.0;
        if (smallest < report.min_singular_value) {
            report.min_singular_value = smallest;
            report.worst_omega = w;
        }
    }
    report.full_column_rank = report.min_singular_value > rank_tol;
    return report;
}

}  // namespace niaudit
