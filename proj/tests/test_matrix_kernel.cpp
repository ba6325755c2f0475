#include "niaudit/errors.hpp"
#include "niaudit/matrix_kernel.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace niaudit;
using Catch::Approx;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> nd;
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    return 0.5 * (a + a.transpose());
}

}  // namespace

TEST_CASE("2x2 eigenvalues match the closed form") {
    // [[a, b], [b, c]]: (a + c)/2 -+ sqrt(((a - c)/2)^2 + b^2)
    const double a = 3.0, b = -1.5, c = 0.25;
    Matrix s(2, 2);
    s << a, b, b, c;
    const SymmetricEig eig = sym_eig(s);
    const double mid = 0.5 * (a + c), rad = std::hypot(0.5 * (a - c), b);
    CHECK(eig.eigenvalues(0) == Approx(mid - rad).epsilon(1e-14));
    CHECK(eig.eigenvalues(1) == Approx(mid + rad).epsilon(1e-14));
}

TEST_CASE("eigendecomposition reconstructs random symmetric matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix s = random_symmetric(rng, 1 + trial % 6);
        const SymmetricEig eig = sym_eig(s);
        const Matrix rebuilt = eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
        CHECK((rebuilt - s).norm() <= 1e-12 * (1.0 + s.norm()));
        for (Eigen::Index i = 1; i < eig.eigenvalues.size(); ++i) CHECK(eig.eigenvalues(i - 1) <= eig.eigenvalues(i));
    }
}

TEST_CASE("definiteness classification") {
    CHECK(definiteness(Matrix::Identity(3, 3)) == Definiteness::PD);
    CHECK(definiteness(-Matrix::Identity(2, 2)) == Definiteness::ND);
    Matrix ones(2, 2);
    ones << 1, -1, -1, 1;
    CHECK(definiteness(ones) == Definiteness::PSD);
    CHECK(definiteness(-ones) == Definiteness::NSD);
    Matrix saddle(2, 2);
    saddle << 1, 0, 0, -1;
    CHECK(definiteness(saddle) == Definiteness::Indefinite);
    CHECK(definiteness(Matrix(0, 0)) == Definiteness::PSD);
}

TEST_CASE("sym_eig rejects bad input") {
    Matrix asym(2, 2);
    asym << 1, 2, 0, 1;
    CHECK_THROWS_AS(sym_eig(asym), Error);
    try {
        (void)sym_eig(asym);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotSymmetric);
    }
    Matrix rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(sym_eig(rect), Error);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(sym_eig(bad), Error);
}

TEST_CASE("Hermitian embedding spectrum doubles the complex spectrum") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 4;
        ComplexMatrix z(n, n);
        for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = Complex(nd(rng), nd(rng));
        const ComplexMatrix h = z + z.adjoint();
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> direct(h);
        CHECK(hermitian_min_eigenvalue(h) == Approx(direct.eigenvalues().minCoeff()).margin(1e-12));
        const SymmetricEig emb = sym_eig(hermitian_embedding(h));
        for (Eigen::Index i = 0; i < n; ++i) {
            CHECK(emb.eigenvalues(2 * i) == Approx(direct.eigenvalues()(i)).margin(1e-11));
            CHECK(emb.eigenvalues(2 * i + 1) == Approx(direct.eigenvalues()(i)).margin(1e-11));
        }
    }
}

TEST_CASE("least squares agrees with the normal equations") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Matrix a(8, 3);
    Vector b(8);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = nd(rng);
    const Vector x = lstsq(a, b);
    const Vector normal = (a.transpose() * a).llt().solve(a.transpose() * b);
    CHECK((x - normal).norm() <= 1e-10);
}

TEST_CASE("least squares returns the minimum-norm solution") {
    Matrix a(1, 2);
    a << 1, 1;
    Vector b(1);
    b << 2;
    const Vector x = lstsq(a, b);
    CHECK(x(0) == Approx(1.0));
    CHECK(x(1) == Approx(1.0));
}

TEST_CASE("null space is orthonormal and annihilated") {
    Matrix a(2, 4);
    a << 1, 2, 3, 4, 2, 4, 6, 8;
    const Matrix n = null_space(a);
    CHECK(n.cols() == 3);
    CHECK((a * n).norm() <= 1e-12);
    CHECK((n.transpose() * n - Matrix::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("PSD factor and eigenvalue clipping") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix s = random_symmetric(rng, 4);
        const Matrix psd = s * s;
        const Matrix l = psd_factor(psd);
        CHECK((l.transpose() * l - psd).norm() <= 1e-10 * (1.0 + psd.norm()));

        const Matrix clipped = clip_eigenvalues(s, 0.5);
        CHECK(min_eigenvalue(clipped) >= 0.5 - 1e-12);
        // Projection property: the residual is NSD and orthogonal to the clipped part.
        const Matrix residual = s - clipped;
        CHECK(max_eigenvalue(residual) <= 1e-12);
        CHECK(std::abs((residual.array() * (clipped - 0.5 * Matrix::Identity(4, 4)).array()).sum()) <= 1e-10);
    }
    CHECK(psd_factor(Matrix::Zero(2, 2)).rows() == 1);
}
