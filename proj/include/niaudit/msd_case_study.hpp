#pragma once

#include "niaudit/interconnection.hpp"
#include "niaudit/lti.hpp"
#include "niaudit/nonlinear.hpp"

#include <iosfwd>
#include <vector>

namespace niaudit {

inline constexpr double kMsdMass = 1.0;
inline constexpr double kMsdDamping = 1.0;
inline constexpr double kMsdStiffness = 2.0;
inline constexpr double kIrcGamma = 1.0;  // free parameter, the sector data do not depend on it
inline constexpr double kIrcPhi = 2.0;

/// Integral resonant controller Gamma / (s + Gamma Phi).
struct IrcController {
    double gamma = kIrcGamma;
    double phi = kIrcPhi;

    /// A = -Gamma Phi, B = Gamma, C = 1, D = 0. Throws InvalidArgument unless both are positive.
    [[nodiscard]] StateSpace realization() const;
    [[nodiscard]] NonlinearSystem system() const;
    /// 1/2 Phi xc^2, from the certificate P = 1 / Phi.
    [[nodiscard]] StorageFunction storage() const;
};

struct CardanoResult {
    double u_bar = 0.0;
    double discriminant = 0.0;  // -4 - 27 (u_bar / k)^2
    double root = 0.0;
    double residual = 0.0;      // |root^3 + root - u_bar / k|
    double first_term = 0.0;    // cbrt(q/2 + sqrt(1/27 + q^2/4)), q = u_bar / k
    double second_term = 0.0;   // cbrt(q/2 - sqrt(1/27 + q^2/4))
};

/// Real root of k (x + x^3) = u_bar from the two real cube roots. The second
/// is taken as -1 / (3 first) and their sum is formed without cancellation;
/// negative u_bar uses the odd symmetry of the map. Throws InvalidArgument
/// unless k > 0.
[[nodiscard]] CardanoResult cardano_steady_state(double u_bar, double k = kMsdStiffness);

struct SectorPlotData {
    double phi = kIrcPhi;
    double k = kMsdStiffness;
    std::vector<double> u_bar;
    std::vector<double> y_c;
    double grid_gamma = 0.0;   // max |y_c / u_bar| over grid points with u_bar != 0
    double limit_ratio = 0.0;  // 1 / (k phi), the slope at the origin
    double gamma_hat = 0.0;    // larger of the two
    bool satisfied = false;    // gamma_hat < 1

    /// u_bar,y_c,envelope_pos,envelope_neg with envelopes +-gamma_hat u_bar.
    void write_csv(std::ostream& os) const;
};

/// Controller steady-state output y_c = root / phi along the grid.
[[nodiscard]] SectorPlotData sector_plot_data(double phi, double k, double u_lo, double u_hi, std::size_t n_points);

struct MsdDemoOptions {
    IrcController controller;
    AuditOptions audit;
    std::size_t n_traces = 3;         // trajectories kept for export
    std::size_t trace_stride = 100;   // keep every stride-th sample
};

struct MsdDemoReport {
    InterconnectionAudit audit;
    std::vector<Trajectory> traces;
    bool passed = false;
};

/// Audits the steady-state assumptions, then runs the closed loop from
/// random initial states. Throws AssumptionFailed naming the first failed
/// steady-state check with its evidence.
[[nodiscard]] MsdDemoReport msd_closed_loop_demo(const MsdDemoOptions& options = {});

}  // namespace niaudit
