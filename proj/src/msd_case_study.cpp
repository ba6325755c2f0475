#include "niaudit/msd_case_study.hpp"

#include "niaudit/builtin_systems.hpp"
#include "niaudit/errors.hpp"
#include "niaudit/logging.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace niaudit {

StateSpace IrcController::realization() const {
    if (!(gamma > 0.0) || !(phi > 0.0)) throw Error(ErrorKind::InvalidArgument, "IRC needs Gamma > 0 and Phi > 0");
    return StateSpace::siso(-gamma * phi, gamma, 1.0);
}

NonlinearSystem IrcController::system() const { return to_nonlinear(realization(), "irc"); }

StorageFunction IrcController::storage() const {
    (void)realization();
    return quadratic_storage(Matrix::Constant(1, 1, phi));
}

CardanoResult cardano_steady_state(double u_bar, double k) {
    if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "stiffness must be positive");
    if (!std::isfinite(u_bar)) throw Error(ErrorKind::NonFinite, "u_bar is not finite");
    CardanoResult r;
    r.u_bar = u_bar;
    const double q = u_bar / k;
    r.discriminant = -4.0 - 27.0 * q * q;
    const double s = std::sqrt(1.0 / 27.0 + 0.25 * q * q);
    const double aq = std::abs(q);
    const double t1 = std::cbrt(0.5 * aq + s);
    const double t2 = -1.0 / (3.0 * t1);
    const double sign = q < 0.0 ? -1.0 : 1.0;
    // for q < 0 the terms swap roles: cbrt(q/2 + s) = -t2, cbrt(q/2 - s) = -t1
    r.first_term = q < 0.0 ? -t2 : t1;
    r.second_term = q < 0.0 ? -t1 : t2;
    // t1 + t2 = (t1^3 + t2^3) / (t1^2 - t1 t2 + t2^2) with t1^3 + t2^3 = |q| and t1 t2 = -1/3
    r.root = sign * aq / (t1 * t1 + t2 * t2 + 1.0 / 3.0);
    r.residual = std::abs(r.root * r.root * r.root + r.root - q);
    return r;
}

void SectorPlotData::write_csv(std::ostream& os) const {
    os << "u_bar,y_c,envelope_pos,envelope_neg\n" << std::setprecision(17);
    for (std::size_t i = 0; i < u_bar.size(); ++i) {
        os << u_bar[i] << ',' << y_c[i] << ',' << gamma_hat * u_bar[i] << ',' << -gamma_hat * u_bar[i] << '\n';
    }
}

SectorPlotData sector_plot_data(double phi, double k, double u_lo, double u_hi, std::size_t n_points) {
    if (!(phi > 0.0) || !(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "phi and k must be positive");
    SectorPlotData d;
    d.phi = phi;
    d.k = k;
    for (const Vector& u : scalar_grid(u_lo, u_hi, n_points)) {
        const double y = cardano_steady_state(u(0), k).root / phi;
        d.u_bar.push_back(u(0));
        d.y_c.push_back(y);
        if (u(0) != 0.0) d.grid_gamma = std::max(d.grid_gamma, std::abs(y / u(0)));
    }
    d.limit_ratio = 1.0 / (k * phi);
    d.gamma_hat = std::max(d.grid_gamma, d.limit_ratio);
    d.satisfied = d.gamma_hat < 1.0;
    return d;
}

MsdDemoReport msd_closed_loop_demo(const MsdDemoOptions& options) {
    const SystemWithStorage msd = make_msd(kMsdMass, kMsdDamping, kMsdStiffness);
    const FeedbackSystem fb{msd.system.to_nonlinear(), options.controller.system()};
    MsdDemoReport report;
    report.audit = audit_interconnection(fb, msd.storage, options.controller.storage(), options.audit);
    for (const char* name :
         {"plant_steady_state_map", "controller_steady_state_map", "steady_state_sign", "sector_bound"}) {
        const CheckResult* c = report.audit.find(name);
        if (c == nullptr || !c->passed) {
            throw Error(ErrorKind::AssumptionFailed,
                        std::string(name) + (c == nullptr ? " not evaluated" : " failed: " + c->detail));
        }
    }
    const NonlinearSystem cl = fb.closed_loop();
    const std::vector<Vector> ics = random_initial_states(fb.states(), options.audit.n_ics,
                                                          -options.audit.box_half_width,
                                                          options.audit.box_half_width, options.audit.seed);
    const std::size_t stride = std::max<std::size_t>(1, options.trace_stride);
    for (std::size_t i = 0; i < std::min(options.n_traces, ics.size()); ++i) {
        const Trajectory full = simulate(cl, ics[i], zero_signal(cl.m), options.audit.closed_loop.horizon,
                                         options.audit.closed_loop.dt);
        Trajectory t;
        t.dt = full.dt * static_cast<double>(stride);
        for (std::size_t s = 0; s < full.size(); s += stride) {
            t.times.push_back(full.times[s]);
            t.states.push_back(full.states[s]);
            t.inputs.push_back(full.inputs[s]);
            t.outputs.push_back(full.outputs[s]);
        }
        report.traces.push_back(std::move(t));
    }
    report.passed = report.audit.passed;
    log_info(std::string("msd demo ") + (report.passed ? "passed" : "failed"));
    return report;
}

}  // namespace niaudit
