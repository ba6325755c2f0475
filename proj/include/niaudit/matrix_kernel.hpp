#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string_view>

namespace niaudit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

struct SymmetricEig {
    Vector eigenvalues;  // ascending
    Matrix eigenvectors;  // orthogonal, columns match eigenvalues
};

enum class Definiteness { PD, PSD, Indefinite, NSD, ND };

std::string_view to_string(Definiteness d);

[[nodiscard]] bool all_finite(const Matrix& m);

/// Eigendecomposition of a symmetric matrix. The input is symmetrized after the
/// asymmetry check ||S - S^T||_F <= 1e-9 ||S||_F.
[[nodiscard]] SymmetricEig sym_eig(const Matrix& s);

/// Scale-relative tolerance 1e-9 * (1 + max |lambda|).
[[nodiscard]] double default_definiteness_tol(const Vector& eigenvalues);

[[nodiscard]] Definiteness definiteness(const Matrix& s, double tol);
[[nodiscard]] Definiteness definiteness(const Matrix& s);

[[nodiscard]] bool is_psd(Definiteness d);
[[nodiscard]] bool is_nsd(Definiteness d);

[[nodiscard]] double min_eigenvalue(const Matrix& s);
[[nodiscard]] double max_eigenvalue(const Matrix& s);

/// Minimum-norm least-squares solution of A x = b.
[[nodiscard]] Vector lstsq(const Matrix& a, const Vector& b);

/// Orthonormal basis of the null space of A (columns); rank cut at tol * sigma_max.
[[nodiscard]] Matrix null_space(const Matrix& a, double rel_tol = 1e-10);

/// Real symmetric embedding [[X, -Y], [Y, X]] of a Hermitian M = X + jY.
[[nodiscard]] Matrix hermitian_embedding(const ComplexMatrix& m);

/// Smallest eigenvalue of a Hermitian matrix (via the real embedding).
[[nodiscard]] double hermitian_min_eigenvalue(const ComplexMatrix& m);

/// Returns L with L^T L = S for a PSD matrix S (negative eigenvalues clipped to zero).
/// Rows of L equal the number of strictly positive eigenvalues, at least one row.
[[nodiscard]] Matrix psd_factor(const Matrix& s);

/// Projection onto {S : S >= floor * I} in the Frobenius norm.
[[nodiscard]] Matrix clip_eigenvalues(const Matrix& s, double floor);

/// Singular values, descending.
[[nodiscard]] Vector singular_values(const ComplexMatrix& m);

}  // namespace niaudit
