#pragma once

// Feasibility search for small LMIs over one symmetric matrix unknown.

#include "niaudit/matrix_kernel.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace niaudit::detail {

/// Affine in the symmetric unknown X.
using AffineMap = std::function<Matrix(const Matrix&)>;

struct ConeConstraint {
    AffineMap map;  // must return a symmetric matrix
    double floor = 0.0;  // map(X) >= floor * I
};

struct LmiSearchResult {
    Matrix X;
    int iterations = 0;
    bool polished = false;
};

/// Finds symmetric X (n x n) with equality(X) = 0 and every cone constraint
/// satisfied up to accept_tol. Alternating projections in the coordinates of
/// the equality solution set, with a periodic active-face correction that
/// handles feasible sets without interior.
std::optional<LmiSearchResult> solve_lmi(Eigen::Index n, const AffineMap* equality,
                                         const std::vector<ConeConstraint>& cones, int max_iter,
                                         double accept_tol);

}  // namespace niaudit::detail
