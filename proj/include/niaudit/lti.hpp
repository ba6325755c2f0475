#pragma once

#include "niaudit/matrix_kernel.hpp"
#include "niaudit/ode.hpp"

#include <optional>
#include <vector>

namespace niaudit {

/// LTI quadruple x' = Ax + Bu, y = Cx + Du. The analysis routines require
/// square systems (as many outputs as inputs); the auxiliary-output
/// construction produces non-square ones. A zero-state system (n = 0)
/// represents a static gain D.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    /// Validates dimensions and finiteness.
    static StateSpace make(Matrix a, Matrix b, Matrix c, Matrix d);
    static StateSpace static_gain(const Matrix& d);
    static StateSpace siso(double a, double b, double c, double d = 0.0);

    [[nodiscard]] Eigen::Index states() const { return A.rows(); }
    [[nodiscard]] Eigen::Index inputs() const { return D.cols(); }
    [[nodiscard]] Eigen::Index outputs() const { return D.rows(); }
    [[nodiscard]] bool square() const { return inputs() == outputs(); }
    void validate() const;
    /// Throws DimensionMismatch unless square().
    void require_square() const;
};

/// Sum of two systems with a shared input (parallel connection).
[[nodiscard]] StateSpace parallel(const StateSpace& g, const StateSpace& h);

struct FrequencyGrid {
    std::vector<double> omegas;

    /// n log-spaced points on [lo, hi].
    static FrequencyGrid logspace(double lo, double hi, std::size_t n);
    /// 2000 points over [1e-3, 1e3] rad/s.
    static FrequencyGrid standard();

    void validate() const;
};

[[nodiscard]] std::vector<Complex> poles(const StateSpace& sys);

/// C (jw I - A)^{-1} B + D. Throws PoleOnGrid when jw lies within 1e-8 of an eigenvalue of A.
[[nodiscard]] ComplexMatrix freq_response(const StateSpace& sys, double omega);

/// G(0) = D - C A^{-1} B. Throws SingularA.
[[nodiscard]] Matrix dc_gain(const StateSpace& sys);

enum class OriginPolePolicy {
    Refuse,      // PoleAtOrigin error, the standard definition
    FreeMotion,  // poles at s = 0 tolerated; only the sweep over w > 0 is evaluated
};

struct NiFrequencyReport {
    bool is_ni = false;
    bool no_rhp_poles = false;
    double worst_omega = 0.0;
    double worst_lambda_min = 0.0;  // min over grid of lambda_min(jw (G - G^H))
};

[[nodiscard]] NiFrequencyReport ni_frequency_test(const StateSpace& sys, const FrequencyGrid& grid,
                                                  double tol = 1e-9,
                                                  OriginPolePolicy policy = OriginPolePolicy::Refuse);

struct SniFrequencyReport {
    bool is_sni = false;
    double worst_omega = 0.0;
    double worst_lambda_min = 0.0;   // lambda_min(j (G - G^H)) at worst_omega
    double worst_normalized = 0.0;   // min over grid of lambda_min / (w / (1 + w^2))
};

[[nodiscard]] SniFrequencyReport sni_frequency_test(const StateSpace& sys, const FrequencyGrid& grid,
                                                    double margin = 1e-8);

struct PrFrequencyReport {
    bool is_pr = false;
    bool no_rhp_poles = false;
    double worst_omega = 0.0;
    double worst_lambda_min = 0.0;  // min over grid of lambda_min(G + G^H)
};

[[nodiscard]] PrFrequencyReport pr_frequency_test(const StateSpace& sys, const FrequencyGrid& grid,
                                                  double tol = 1e-9);

/// Realization of G(s)/s: an integrator bank feeding the original system,
/// A_R = [[A, B], [0, 0]], B_R = [0; I], C_R = [C, D], D_R = 0.
[[nodiscard]] StateSpace ni_from_pr(const StateSpace& sys);

/// Realization of s (G(s) - D): (A, B, CA, CB).
[[nodiscard]] StateSpace pr_from_ni(const StateSpace& sys);

/// Certificate in the (A P + P A^T <= 0, B + A P C^T = 0) convention. The
/// dissipation storage is V(x) = 1/2 x^T P^{-1} x.
struct NiCertificate {
    Matrix P;
    double residual_affine = 0.0;   // ||B + A P C^T||_F
    double lambda_min_P = 0.0;
    double lambda_max_lyap = 0.0;   // lambda_max(A P + P A^T)
    std::optional<Matrix> storage;  // P^{-1} when P is invertible
    /// lambda_max of the block matrix [[XA + A^T X, XB - A^T C^T], [B^T X - CA, -(CB + B^T C^T)]]
    /// with X = P^{-1}; NaN when P is singular.
    double lambda_max_storage_lmi = 0.0;
    bool valid = false;
};

[[nodiscard]] NiCertificate verify_certificate(const StateSpace& sys, const Matrix& p, double tol = 1e-8);

struct CertificateSearchOptions {
    int max_iter = 5000;
    double pd_floor = 1e-6;
    double tol = 1e-8;
};

/// Alternating projections between the affine set {B + A P C^T = 0} and the
/// cone {P >= eps I, A P + P A^T <= 0}. Throws SingularA when det(A) = 0.
[[nodiscard]] std::optional<NiCertificate> search_certificate(const StateSpace& sys,
                                                              const CertificateSearchOptions& options = {});

/// Storage-form certificate: X with the block matrix of the NI LMI <= 0.
struct StorageCertificate {
    Matrix X;
    double lambda_min_X = 0.0;
    double lambda_max_lmi = 0.0;
    bool valid = false;
};

[[nodiscard]] Matrix storage_lmi_block(const StateSpace& sys, const Matrix& x);
[[nodiscard]] StorageCertificate verify_storage_certificate(const StateSpace& sys, const Matrix& x, bool allow_semidefinite,
                                                            double tol = 1e-8);

/// Works for singular A (poles at the origin); with allow_semidefinite the
/// floor on X is 0 instead of pd_floor.
[[nodiscard]] std::optional<StorageCertificate> search_storage_certificate(const StateSpace& sys, bool allow_semidefinite,
                                                                           const CertificateSearchOptions& options = {});

struct DcGainReport {
    double lambda_max = 0.0;  // largest real part in the spectrum of G(0) H(0)
    bool real_spectrum = true;
    bool satisfied = false;   // lambda_max < 1
};

[[nodiscard]] DcGainReport dc_gain_condition(const StateSpace& plant, const StateSpace& controller);

/// [[P1 - C1^T D2 C1, -C1^T C2], [-C2^T C1, P2 - C2^T D1 C2]] with storage matrices P1, P2.
[[nodiscard]] Matrix block_lyapunov_matrix(const StateSpace& sys1, const Matrix& p1, const StateSpace& sys2,
                                           const Matrix& p2);

/// The two candidate Lyapunov values for an LTI feedback pair: the quadratic
/// form 1/2 z^T M z of the block matrix, and V1 + V2 - 2 y1^T y2 with y = Cx.
struct LtiLyapunovCandidates {
    double block_form = 0.0;
    double doubled_cross_form = 0.0;
};

[[nodiscard]] LtiLyapunovCandidates lti_lyapunov_candidates(const StateSpace& sys1, const Matrix& p1,
                                                            const StateSpace& sys2, const Matrix& p2,
                                                            const Vector& x1, const Vector& x2);

struct TimeDomainNiReport {
    double max_violation = 0.0;           // max over samples of dV/dt - y'^T u
    double max_integral_violation = 0.0;  // max over t of V(t) - V(0) - int y'^T u
    std::size_t samples = 0;
};

/// Simulates from x0 (default zero) with RK4 and checks d/dt (1/2 x^T X x) <= y'^T u,
/// where X is the storage matrix.
[[nodiscard]] TimeDomainNiReport time_domain_ni_check(const StateSpace& sys, const Matrix& storage, const Signal& input,
                                                      double horizon, double dt,
                                                      const std::optional<Vector>& x0 = std::nullopt);

/// L with L^T L = -(A P + P A^T), P in the certificate convention.
[[nodiscard]] Matrix dissipation_factor(const StateSpace& sys, const Matrix& p);

struct AuxiliaryRankReport {
    StateSpace auxiliary;           // x' = Ax + Bu, y~ = L P x + L C^T u
    double min_singular_value = 0.0;  // min over grid of sigma_m(W(jw))
    double worst_omega = 0.0;
    bool full_column_rank = false;
};

[[nodiscard]] AuxiliaryRankReport wsnni_auxiliary_system(const StateSpace& sys, const Matrix& p, const Matrix& l,
                                                         const FrequencyGrid& grid, double rank_tol = 1e-9);

}  // namespace niaudit
