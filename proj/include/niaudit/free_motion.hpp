#pragma once

#include "niaudit/interconnection.hpp"
#include "niaudit/nonlinear.hpp"
#include "niaudit/sampling.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace niaudit {

/// eta' = f(eta) + g(eta) xi, xi' = u, y = h(eta). Scalar input and output;
/// the combined state is (eta, xi).
struct CascadeIntegratorSystem {
    Eigen::Index n = 0;  // dimension of eta
    std::string name;
    VectorField f;
    VectorField g;
    ScalarField h;
    VectorField grad_h;     // optional
    VectorField grad_hf;    // optional, gradient of grad_h . f
    VectorField grad_hg;    // optional, gradient of grad_h . g

    /// grad_h . f
    [[nodiscard]] double hf(const Vector& eta) const;
    /// grad_h . g
    [[nodiscard]] double hg(const Vector& eta) const;
    [[nodiscard]] Vector grad_h_at(const Vector& eta) const;
    [[nodiscard]] Vector grad_hf_at(const Vector& eta) const;
    [[nodiscard]] Vector grad_hg_at(const Vector& eta) const;

    /// Checks shapes, f(0) = 0 and h(0) = 0.
    void validate(double tol = 1e-12) const;
    [[nodiscard]] NonlinearSystem to_nonlinear() const;
};

struct FreeMotionConditions {
    struct Cond1 {
        double constant_value = 0.0;
        double max_deviation = 0.0;
        bool positive = false;  // constant within 1e-8 relative and > 0
    } cond1;
    struct Cond2 {
        double max_value = 0.0;  // max of grad_h . grad(grad_h . f)
        bool holds = false;      // max_value <= 1e-9
    } cond2;
    struct Cond3 {
        double min_abs_off_origin = 0.0;  // min |grad_h . f| with ||eta|| > 1e-3
        std::vector<Vector> zero_locus_samples;
        bool holds = false;
    } cond3;
    std::size_t samples = 0;
    bool overall = false;

    void write(std::ostream& os) const;
    /// One row per zero-locus point: eta_1..eta_n,hf
    void write_zero_locus_csv(std::ostream& os, const CascadeIntegratorSystem& sys) const;
};

/// Sampled audit of the three conditions on an eta box containing the origin.
/// Samples with small |grad_h . f| are refined by Newton projection onto the
/// zero set of grad_h . f, so points of the zero locus are found exactly.
[[nodiscard]] FreeMotionConditions check_free_motion_conditions(const CascadeIntegratorSystem& sys, const Box& box, std::size_t n_samples = 10000);

struct FreeMotionStorage {
    StorageFunction expanded;  // V = (hf)^2 / (2 hg) + hf xi + hg xi^2 / 2
    StorageFunction factored;  // (hf + hg xi)^2 / (2 hg)
    double hg = 0.0;
};

/// Throws Cond1Violated when grad_h . g is not a positive constant on
/// `n_check` samples of the box.
[[nodiscard]] FreeMotionStorage free_motion_storage(const CascadeIntegratorSystem& sys, const Box& box,
                                         std::size_t n_check = 512);
[[nodiscard]] FreeMotionStorage free_motion_storage(const CascadeIntegratorSystem& sys);

/// alpha . (f + g xi) + beta . (f + g xi) xi with alpha = grad((hf)^2) / (2 hg)
/// and beta = grad(hf), i.e. dV/dt - y' u when hg is constant.
[[nodiscard]] double free_motion_residual(const CascadeIntegratorSystem& sys, const Vector& eta, double xi);

struct ResidualScan {
    double max_value = 0.0;
    double min_value = 0.0;
    std::size_t positive = 0;  // samples above 1e-9
    std::size_t samples = 0;
    Vector worst_point;  // (eta, xi) of max_value
};

struct FreeMotionNniReport {
    std::vector<DissipativityReport> runs;
    double max_violation = 0.0;
    ResidualScan residual;
    bool passed = false;  // every run passed
};

/// One simulation per input, all from `x0` (origin when empty), plus a Sobol
/// scan of the residual on `residual_box` over (eta, xi).
[[nodiscard]] FreeMotionNniReport verify_free_motion_nni(const CascadeIntegratorSystem& sys, const StorageFunction& v,
                                                         const std::vector<Signal>& inputs, double horizon, double dt,
                                                         const Vector& x0, const Box& residual_box,
                                                         std::size_t residual_samples = 10000, double tol = 1e-5);

struct StoragePositivityReport {
    double min_off_origin = 0.0;  // over samples and zero-set points
    Vector argmin;
    double min_sampled = 0.0;           // Sobol samples only
    double min_off_zero_set = 0.0;      // Sobol samples with |hf + hg xi| > 1e-9
    double max_abs_on_zero_set = 0.0;   // |V| on the points of the zero set
    std::vector<Vector> semidefinite_directions;  // (eta, xi) with hf + hg xi = 0
    bool positive_definite_evidence = false;      // min_off_origin > 1e-9
};

/// V sampled on an (eta, xi) box outside the 1e-3 ball, plus the points
/// xi = -hf / hg above each sampled eta that stay in the box.
[[nodiscard]] StoragePositivityReport audit_storage_positivity(const CascadeIntegratorSystem& sys,
                                                                const StorageFunction& v, const Box& box,
                                                                std::size_t n_samples = 10000);

/// Closed loop with z = (eta1, xi, eta2) and W from the two storages.
[[nodiscard]] ClosedLoopReport free_motion_closed_loop(const CascadeIntegratorSystem& plant, const NonlinearSystem& controller,
                                                const StorageFunction& v1, const StorageFunction& v2,
                                                const std::vector<Vector>& initial_states,
                                                const ClosedLoopOptions& options = {});

/// eta' = a eta + b xi, y = c eta
[[nodiscard]] CascadeIntegratorSystem make_first_order_cascade(double a = -1.0, double b = 1.0, double c = 1.0);
/// f = (eta2, -eta1^3 - eta2), g = (0, 1), h = eta2
[[nodiscard]] CascadeIntegratorSystem make_cubic_damped_cascade();
/// f = A eta, g = B, h = C eta with A = [-1 -1; 1 0], B = (1, 0), C = (1, 1)
[[nodiscard]] CascadeIntegratorSystem make_pr2_cascade();

}  // namespace niaudit
