#include "niaudit/matrix_kernel.hpp"

#include "niaudit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace niaudit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonSquare: return "NonSquare";
        case ErrorKind::NotSymmetric: return "NotSymmetric";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::PoleOnGrid: return "PoleOnGrid";
        case ErrorKind::PoleAtOrigin: return "PoleAtOrigin";
        case ErrorKind::ImaginaryAxisPole: return "ImaginaryAxisPole";
        case ErrorKind::NotHurwitz: return "NotHurwitz";
        case ErrorKind::SingularA: return "SingularA";
        case ErrorKind::CertificateInvalid: return "CertificateInvalid";
        case ErrorKind::SingularJacobian: return "SingularJacobian";
        case ErrorKind::MaxIterations: return "MaxIterations";
        case ErrorKind::NewtonFailure: return "NewtonFailure";
        case ErrorKind::Cond1Violated: return "Cond1Violated";
        case ErrorKind::AssumptionFailed: return "AssumptionFailed";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

std::string_view to_string(Definiteness d) {
    switch (d) {
        case Definiteness::PD: return "PD";
        case Definiteness::PSD: return "PSD";
        case Definiteness::Indefinite: return "Indefinite";
        case Definiteness::NSD: return "NSD";
        case Definiteness::ND: return "ND";
    }
    return "?";
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

namespace {

void require_square(const Matrix& s, const char* who) {
    if (s.rows() != s.cols()) {
        std::ostringstream msg;
        msg << who << ": matrix is " << s.rows() << "x" << s.cols();
        throw Error(ErrorKind::NonSquare, msg.str());
    }
}

}  // namespace

SymmetricEig sym_eig(const Matrix& s) {
    require_square(s, "sym_eig");
    if (!s.allFinite()) {
        throw Error(ErrorKind::NonFinite, "sym_eig: non-finite entry");
    }
    const double norm = s.norm();
    const double asym = (s - s.transpose()).norm();
    if (asym > 1e-9 * norm) {
        std::ostringstream msg;
        msg << "sym_eig: ||S - S^T|| = " << asym << " exceeds 1e-9 * ||S|| = " << 1e-9 * norm;
        throw Error(ErrorKind::NotSymmetric, msg.str());
    }
    if (s.rows() == 0) {
        return {Vector(0), Matrix(0, 0)};
    }
    const Matrix sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    return {solver.eigenvalues(), solver.eigenvectors()};
}

double default_definiteness_tol(const Vector& eigenvalues) {
    const double lam = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    return 1e-9 * (1.0 + lam);
}

Definiteness definiteness(const Matrix& s, double tol) {
    require_square(s, "definiteness");
    const auto eig = sym_eig(s);
    if (eig.eigenvalues.size() == 0) {
        return Definiteness::PSD;
    }
    const double lo = eig.eigenvalues.minCoeff();
    const double hi = eig.eigenvalues.maxCoeff();
    if (lo > tol) return Definiteness::PD;
    if (lo >= -tol) return Definiteness::PSD;
    if (hi < -tol) return Definiteness::ND;
    if (hi <= tol) return Definiteness::NSD;
    return Definiteness::Indefinite;
}

Definiteness definiteness(const Matrix& s) {
    require_square(s, "definiteness");
    return definiteness(s, default_definiteness_tol(sym_eig(s).eigenvalues));
}

bool is_psd(Definiteness d) {
    return d == Definiteness::PD || d == Definiteness::PSD;
}

bool is_nsd(Definiteness d) {
    return d == Definiteness::ND || d == Definiteness::NSD;
}

double min_eigenvalue(const Matrix& s) {
    const auto eig = sym_eig(s);
    return eig.eigenvalues.size() ? eig.eigenvalues(0) : 0.0;
}

double max_eigenvalue(const Matrix& s) {
    const auto eig = sym_eig(s);
    return eig.eigenvalues.size() ? eig.eigenvalues(eig.eigenvalues.size() - 1) : 0.0;
}

Vector lstsq(const Matrix& a, const Vector& b) {
    if (a.rows() != b.size()) {
        std::ostringstream msg;
        msg << "lstsq: A has " << a.rows() << " rows, b has " << b.size();
        throw Error(ErrorKind::DimensionMismatch, msg.str());
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw Error(ErrorKind::NonFinite, "lstsq: non-finite input");
    }
    if (a.cols() == 0) {
        return Vector(0);
    }
    if (a.rows() == 0) {
        return Vector::Zero(a.cols());
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(1e-12);
    return cod.solve(b);
}

Matrix null_space(const Matrix& a, double rel_tol) {
    if (a.rows() == 0) {
        return Matrix::Identity(a.cols(), a.cols());
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cut = rel_tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) ++rank;
    }
    return svd.matrixV().rightCols(a.cols() - rank);
}

Matrix hermitian_embedding(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::NonSquare, "hermitian_embedding: matrix not square");
    }
    const auto n = m.rows();
    const Matrix x = m.real();
    const Matrix y = m.imag();
    Matrix e(2 * n, 2 * n);
    e << x, -y, y, x;
    return e;
}

double hermitian_min_eigenvalue(const ComplexMatrix& m) {
    const ComplexMatrix herm = 0.5 * (m + m.adjoint());
    return min_eigenvalue(hermitian_embedding(herm));
}

Matrix psd_factor(const Matrix& s) {
    const auto eig = sym_eig(s);
    const auto n = s.rows();
    const double tol = default_definiteness_tol(eig.eigenvalues);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eig.eigenvalues(i) > tol) keep.push_back(i);
    }
    if (keep.empty()) {
        return Matrix::Zero(1, n);
    }
    Matrix l(static_cast<Eigen::Index>(keep.size()), n);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto i = keep[r];
        l.row(static_cast<Eigen::Index>(r)) = std::sqrt(eig.eigenvalues(i)) * eig.eigenvectors.col(i).transpose();
    }
    return l;
}

Matrix clip_eigenvalues(const Matrix& s, double floor) {
    const auto eig = sym_eig(s);
    const Vector clipped = eig.eigenvalues.cwiseMax(floor);
    return eig.eigenvectors * clipped.asDiagonal() * eig.eigenvectors.transpose();
}

Vector singular_values(const ComplexMatrix& m) {
    if (m.size() == 0) return Vector(0);
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues();
}

}  // namespace niaudit
