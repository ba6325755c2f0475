#include "lmi_search.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace niaudit::detail {
namespace {

// Orthonormal basis of symmetric matrices in the Frobenius inner product.
std::vector<Matrix> symmetric_basis(Eigen::Index n) {
    std::vector<Matrix> basis;
    const double r = 1.0 / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            Matrix e = Matrix::Zero(n, n);
            if (i == j) {
                e(i, i) = 1.0;
            } else {
                e(i, j) = r;
                e(j, i) = r;
            }
            basis.push_back(std::move(e));
        }
    }
    return basis;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows) {
    Matrix m = Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
    return m;
}

// vec(map(X)) = offset + linear * x for X = sum_k x_k E_k.
struct LinearizedMap {
    Vector offset;
    Matrix linear;
    Eigen::Index rows = 0;
};

LinearizedMap linearize(const AffineMap& map, const std::vector<Matrix>& basis, Eigen::Index n) {
    const Matrix f0 = map(Matrix::Zero(n, n));
    LinearizedMap out;
    out.rows = f0.rows();
    out.offset = vec(f0);
    out.linear.resize(f0.size(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        out.linear.col(static_cast<Eigen::Index>(k)) = vec(map(basis[k])) - out.offset;
    }
    return out;
}

struct Cone {
    Vector c;  // value at z = 0
    Matrix h;  // linear part in z
    Eigen::Index rows = 0;
    double floor = 0.0;

    [[nodiscard]] Matrix value(const Vector& z) const {
        Matrix s = unvec(c + h * z, rows);
        return 0.5 * (s + s.transpose());
    }
};

constexpr double kProjectionMargin = 1e-7;
constexpr int kPolishPeriod = 20;
constexpr int kPolishSteps = 80;
constexpr std::array<double, 7> kPolishThresholds{1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1};

class Problem {
public:
    Problem(std::vector<Cone> cones, double accept_tol) : cones_(std::move(cones)), accept_tol_(accept_tol) {}

    [[nodiscard]] bool feasible(const Vector& z) const {
        for (const auto& k : cones_) {
            const Matrix s = k.value(z);
            if (!all_finite(s)) return false;
            if (k.rows > 0 && min_eigenvalue(s) - k.floor < -accept_tol_) return false;
        }
        return true;
    }

    // Treats eigen-directions of each cone value below threshold as active and
    // drives the active eigenvalues to zero: Newton steps on the projected
    // equalities V^T (S_k(z + dz) - floor I) V = 0, minimum-norm in dz, with V
    // refreshed after each step.
    [[nodiscard]] std::optional<Vector> polish(const Vector& z, double rel_threshold) const {
        std::vector<Eigen::Index> active(cones_.size(), 0);
        bool any = false;
        for (std::size_t k = 0; k < cones_.size(); ++k) {
            if (cones_[k].rows == 0) continue;
            const Vector ev = sym_eig(shifted(k, z)).eigenvalues;
            const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
            active[k] = (ev.array() < rel_threshold * scale).count();
            any = any || active[k] > 0;
        }
        if (!any) return std::nullopt;

        Vector candidate = z;
        std::optional<Vector> best;
        for (int step = 0; step < kPolishSteps; ++step) {
            const Eigen::Index d = z.size();
            Eigen::Index total_rows = 0;
            for (std::size_t k = 0; k < cones_.size(); ++k) total_rows += active[k] * active[k];
            Matrix jac(total_rows, d);
            Vector rhs(total_rows);
            Eigen::Index row = 0;
            for (std::size_t k = 0; k < cones_.size(); ++k) {
                if (active[k] == 0) continue;
                const Cone& c = cones_[k];
                const Matrix e = shifted(k, candidate);
                const Matrix v = sym_eig(e).eigenvectors.leftCols(active[k]);
                const Eigen::Index rows = active[k] * active[k];
                for (Eigen::Index j = 0; j < d; ++j) {
                    Matrix dj = unvec(c.h.col(j), c.rows);
                    dj = 0.5 * (dj + dj.transpose());
                    jac.block(row, j, rows, 1) = vec(v.transpose() * dj * v);
                }
                rhs.segment(row, rows) = -vec(v.transpose() * e * v);
                row += rows;
            }
            const Vector delta = lstsq(jac, rhs);
            candidate += delta;
            if (!all_finite(candidate)) break;
            // Keep stepping after the first feasible point: on tangential
            // faces Newton converges only linearly and the tolerance is met
            // well before the iterate settles.
            if (feasible(candidate)) best = candidate;
            else if (best) break;
            if (delta.norm() <= 1e-14 * (1.0 + candidate.norm())) break;
        }
        return best;
    }

    [[nodiscard]] const std::vector<Cone>& cones() const { return cones_; }

private:
    [[nodiscard]] Matrix shifted(std::size_t k, const Vector& z) const {
        const Cone& c = cones_[k];
        return c.value(z) - c.floor * Matrix::Identity(c.rows, c.rows);
    }

    std::vector<Cone> cones_;
    double accept_tol_;
};

}  // namespace

std::optional<LmiSearchResult> solve_lmi(Eigen::Index n, const AffineMap* equality,
                                         const std::vector<ConeConstraint>& constraints, int max_iter,
                                         double accept_tol) {
    const std::vector<Matrix> basis = symmetric_basis(n);
    const auto p = static_cast<Eigen::Index>(basis.size());

    Vector x0 = Vector::Zero(p);
    Matrix nullspace = Matrix::Identity(p, p);
    if (equality != nullptr && p > 0) {
        const LinearizedMap eq = linearize(*equality, basis, n);
        x0 = lstsq(eq.linear, -eq.offset);
        const double residual = (eq.linear * x0 + eq.offset).norm();
        if (residual > 1e-9 * (1.0 + eq.offset.norm())) return std::nullopt;
        nullspace = null_space(eq.linear);
    }

    std::vector<Cone> cones;
    for (const auto& constraint : constraints) {
        const LinearizedMap lin = linearize(constraint.map, basis, n);
        Cone k;
        k.rows = lin.rows;
        k.floor = constraint.floor;
        k.c = lin.offset + lin.linear * x0;
        k.h = lin.linear * nullspace;
        cones.push_back(std::move(k));
    }
    const Problem problem(std::move(cones), accept_tol);

    auto to_matrix = [&](const Vector& z) {
        Matrix x = Matrix::Zero(n, n);
        const Vector coords = x0 + nullspace * z;
        for (Eigen::Index k = 0; k < p; ++k) x += coords(k) * basis[static_cast<std::size_t>(k)];
        return x;
    };

    const Eigen::Index d = nullspace.cols();
    Vector z = Vector::Zero(d);
    if (problem.feasible(z)) return LmiSearchResult{to_matrix(z), 0, false};
    if (d == 0) return std::nullopt;

    Matrix normal = Matrix::Identity(d, d);
    for (const auto& k : problem.cones()) normal += k.h.transpose() * k.h;
    const Eigen::LDLT<Matrix> solver(normal);

    for (int it = 1; it <= max_iter; ++it) {
        Vector rhs = z;
        for (const auto& k : problem.cones()) {
            const Matrix target = clip_eigenvalues(k.value(z), k.floor + kProjectionMargin);
            rhs += k.h.transpose() * (vec(target) - k.c);
        }
        z = solver.solve(rhs);
        if (problem.feasible(z)) return LmiSearchResult{to_matrix(z), it, false};
        if (it % kPolishPeriod == 0 || it == max_iter) {
            for (double threshold : kPolishThresholds) {
                if (auto polished = problem.polish(z, threshold)) {
                    return LmiSearchResult{to_matrix(*polished), it, true};
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace niaudit::detail
