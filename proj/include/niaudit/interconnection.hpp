#pragma once

#include "niaudit/lti.hpp"
#include "niaudit/nonlinear.hpp"
#include "niaudit/sampling.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace niaudit {

/// LTI system as a NonlinearSystem with y = Cx. Throws DimensionMismatch
/// when D is nonzero (outputs must depend on the state only).
[[nodiscard]] NonlinearSystem to_nonlinear(const StateSpace& sys, const std::string& name = "lti");

/// V(x) = 1/2 x^T X x
[[nodiscard]] StorageFunction quadratic_storage(const Matrix& x);

/// Positive feedback pair: u1 = y2 + r1, u2 = y1 + r2.
struct FeedbackSystem {
    NonlinearSystem plant;
    NonlinearSystem controller;

    /// State z = (x1, x2), input (r1, r2), output (y1, y2).
    [[nodiscard]] NonlinearSystem closed_loop() const;
    [[nodiscard]] Eigen::Index states() const { return plant.n + controller.n; }
    void validate() const;
};

struct SteadyState {
    Vector u_bar;
    Vector x_bar;
    Vector y_bar;
    double newton_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double fd_step = 1e-7;
};

/// Damped Newton on f(x, u_bar) = 0 with a finite-difference Jacobian and
/// Armijo backtracking. Throws SingularJacobian or MaxIterations.
[[nodiscard]] SteadyState solve_steady_state(const NonlinearSystem& sys, const Vector& u_bar, const Vector& x_guess,
                                             const NewtonOptions& options = {});

struct ContinuationReport {
    bool continuous = true;
    double max_jump = 0.0;
    std::size_t jump_index = 0;  // index of the first flagged point
    std::vector<SteadyState> states;
    std::string note;
};

/// Warm-started Newton along an ordered input path. A step is flagged when it
/// exceeds ten times the mean of the two previous steps (and 1e-6); a Newton
/// failure restarts from x_guess and is flagged as well.
[[nodiscard]] ContinuationReport continuation_audit(const NonlinearSystem& sys, const std::vector<Vector>& u_path,
                                                    const Vector& x_guess);

/// Steady state of the open chain u1 -> H1 -> y1 = u2 -> H2 -> y2.
struct ChainPoint {
    SteadyState first;
    SteadyState second;
};

/// Throws StageFailure (stage 1 or 2) when Newton fails.
[[nodiscard]] ChainPoint solve_chain(const FeedbackSystem& fb, const Vector& u1, const Vector& x1_guess,
                                     const Vector& x2_guess);

/// Solves the chain along a grid with warm starts; the grid is visited
/// outward from the point closest to zero.
[[nodiscard]] std::vector<ChainPoint> solve_chain_grid(const FeedbackSystem& fb, const std::vector<Vector>& u_grid);

/// Scalar grid of n points on [lo, hi] as 1-vectors.
[[nodiscard]] std::vector<Vector> scalar_grid(double lo, double hi, std::size_t n);

struct SignConditionReport {
    double worst_product = 0.0;  // min over the grid of h1(x1)^T h2(x2)
    Vector worst_u;
    bool passed = false;  // worst_product >= -1e-9
};

[[nodiscard]] SignConditionReport audit_sign_condition(const FeedbackSystem& fb, const std::vector<Vector>& u_grid);

struct SectorScan {
    std::vector<Vector> u_grid;
    std::vector<Vector> y2_bars;
    double gamma_hat = 0.0;    // max of ||y2|| / ||u1|| over the grid and the limit ratio
    double grid_gamma = 0.0;   // grid part only, points with ||u1|| <= 1e-6 excluded
    double limit_ratio = 0.0;  // one-sided difference quotient at u1 = 0
    double margin = 0.01;
    bool satisfied = false;    // gamma_hat <= 1 - margin

    /// u_bar,y2_bar,upper_bound,lower_bound with bounds +-gamma_hat |u_bar|;
    /// vector-valued rows use Euclidean norms.
    void write_csv(std::ostream& os) const;
};

[[nodiscard]] SectorScan sector_scan(const FeedbackSystem& fb, const std::vector<Vector>& u_grid, double margin = 0.01);

/// W(x1, x2) = V1(x1) + V2(x2) - h1(x1)^T h2(x2) with its gradient.
[[nodiscard]] StorageFunction composite_lyapunov(const FeedbackSystem& fb, const StorageFunction& v1,
                                                 const StorageFunction& v2);

struct LowerBoundIteration {
    /// 1 when h2(x2) = 0 (W = V1 + V2), otherwise 2.
    int branch = 1;
    /// For branch 2: 1 when h1 = 0 at the first steady state, 2 when h2 = 0,
    /// 3 when their product is positive, 0 when the product is negative.
    int sub_case = 0;
    double w_value = 0.0;

    /// ||u1^(i)|| along u1^(1) = h2(x2), u1^(i+1) = y2^(i) / sqrt(gamma) with u2 = y1.
    std::vector<double> u_norm_trace;
    std::vector<double> contraction_ratios;
    bool converged = false;  // every step satisfies ||u^(i+1)|| <= sqrt(gamma) ||u^(i)|| + 1e-9

    /// Telescoping lower bounds on W: entry i is
    /// V1(x1[i]) + V2(x2[i]) - c_i h1(x1[i])^T h2(x2[i]) + (1/sqrt(gamma) - 1) h1(x1[1])^T h2(x2[1]) [i >= 2],
    /// with c_1 = 1 and c_i = 1/sqrt(gamma) afterwards; both steady-state
    /// inputs of step i >= 2 carry the 1/sqrt(gamma) factor.
    std::vector<double> lower_bound_trace;
    double limit_bound = 0.0;       // (1/sqrt(gamma) - 1) h1(x1[1])^T h2(x2[1])
    bool bounds_below_w = true;     // every ledger entry <= W + 1e-9
    bool ledger_monotone = true;    // ledger entries nonincreasing within 1e-9
};

/// Throws InvalidArgument unless 0 < gamma < 1; StageFailure carries the step index.
[[nodiscard]] LowerBoundIteration lower_bound_iteration(const FeedbackSystem& fb, const StorageFunction& v1,
                                            const StorageFunction& v2, const Vector& x1, const Vector& x2,
                                            double gamma, int max_iter = 20);

struct PositivityReport {
    double min_value = 0.0;
    Vector argmin;
    bool positive_on_samples = false;
    double exclude_radius = 1e-3;
};

/// Minimum of W over the box outside a small ball around the origin.
[[nodiscard]] PositivityReport positivity_probe(const StorageFunction& w, const Box& box, std::size_t n_samples,
                                                double exclude_radius = 1e-3);

struct ClosedLoopOptions {
    double horizon = 60.0;
    double dt = 1e-3;
    double delta = 1e-3;
    double monotone_tol = 1e-5;
    unsigned threads = 0;
};

struct ClosedLoopRun {
    Vector z0;
    double final_norm = 0.0;
    double max_w_increase = 0.0;  // largest W(t_{k+1}) - W(t_k)
    double max_w_rate = 0.0;      // largest grad W . z' at the samples
    bool converged = false;
    bool blew_up = false;
};

struct ClosedLoopReport {
    std::vector<ClosedLoopRun> runs;
    bool all_converged = false;
    bool w_monotone = false;
    double worst_dw = 0.0;  // max over runs of max(max_w_increase, max_w_rate)
    double worst_final_norm = 0.0;
};

[[nodiscard]] ClosedLoopReport closed_loop_experiment(const FeedbackSystem& fb, const StorageFunction& w,
                                                      const std::vector<Vector>& initial_states,
                                                      const ClosedLoopOptions& options = {});

/// Uniform random points in [lo, hi]^n.
[[nodiscard]] std::vector<Vector> random_initial_states(Eigen::Index n, std::size_t count, double lo, double hi,
                                                        std::uint64_t seed);

struct AuditOptions {
    double u_lo = -16.0;
    double u_hi = 16.0;
    std::size_t n_points = 401;
    double margin = 0.01;
    double box_half_width = 1.0;
    std::size_t n_samples = 10000;
    std::size_t n_ics = 20;
    std::uint64_t seed = 42;
    int iteration_steps = 12;
    ClosedLoopOptions closed_loop;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct InterconnectionAudit {
    std::vector<CheckResult> checks;
    std::optional<SectorScan> sector;
    std::optional<LowerBoundIteration> iteration;
    std::optional<ClosedLoopReport> closed_loop;
    bool passed = false;

    [[nodiscard]] const CheckResult* find(const std::string& name) const;
    void write_report(std::ostream& os) const;
};

/// Runs every check and records failures instead of throwing.
[[nodiscard]] InterconnectionAudit audit_interconnection(const FeedbackSystem& fb, const StorageFunction& v1,
                                                         const StorageFunction& v2, const AuditOptions& options = {});

}  // namespace niaudit
