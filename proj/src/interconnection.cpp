#include "niaudit/interconnection.hpp"

#include "niaudit/errors.hpp"
#include "niaudit/logging.hpp"
#include "niaudit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace niaudit {
namespace {

constexpr double kSectorExclusion = 1e-6;
constexpr double kLimitStep = 1e-5;

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

}  // namespace

NonlinearSystem to_nonlinear(const StateSpace& sys, const std::string& name) {
    sys.require_square();
    if (!sys.D.isZero(0.0)) throw Error(ErrorKind::DimensionMismatch, name + ": feedthrough D must be zero");
    NonlinearSystem out;
    out.n = sys.states();
    out.m = sys.inputs();
    out.name = name;
    out.dynamics = [a = sys.A, b = sys.B](const Vector& x, const Vector& u) -> Vector { return a * x + b * u; };
    out.output = [c = sys.C](const Vector& x) -> Vector { return c * x; };
    out.output_jacobian = [c = sys.C](const Vector&) -> Matrix { return c; };
    return out;
}

StorageFunction quadratic_storage(const Matrix& x) {
    return {[x](const Vector& v) { return 0.5 * v.dot(x * v); }, [x](const Vector& v) -> Vector { return x * v; }};
}

void FeedbackSystem::validate() const {
    plant.validate();
    controller.validate();
    if (plant.m != controller.m) throw Error(ErrorKind::DimensionMismatch, "plant and controller port counts differ");
}

NonlinearSystem FeedbackSystem::closed_loop() const {
    validate();
    NonlinearSystem cl;
    const Eigen::Index n1 = plant.n, n2 = controller.n, m = plant.m;
    cl.n = n1 + n2;
    cl.m = 2 * m;
    cl.name = plant.name + "<->" + controller.name;
    cl.dynamics = [p = plant, c = controller, n1, n2, m](const Vector& z, const Vector& r) -> Vector {
        const Vector x1 = z.head(n1), x2 = z.tail(n2);
        Vector dz(n1 + n2);
        dz << p.dynamics(x1, c.output(x2) + r.head(m)), c.dynamics(x2, p.output(x1) + r.tail(m));
        return dz;
    };
    cl.output = [p = plant, c = controller, n1, n2, m](const Vector& z) -> Vector {
        Vector y(2 * m);
        y << p.output(z.head(n1)), c.output(z.tail(n2));
        return y;
    };
    return cl;
}

SteadyState solve_steady_state(const NonlinearSystem& sys, const Vector& u_bar, const Vector& x_guess,
                               const NewtonOptions& options) {
    if (u_bar.size() != sys.m || x_guess.size() != sys.n) {
        throw Error(ErrorKind::DimensionMismatch, sys.name + ": steady-state input or guess has the wrong size");
    }
    if (!all_finite(u_bar) || !all_finite(x_guess)) throw Error(ErrorKind::NonFinite, "steady-state input is not finite");
    auto residual = [&](const Vector& x) { return sys.dynamics(x, u_bar); };
    SteadyState ss;
    ss.u_bar = u_bar;
    Vector x = x_guess;
    Vector f = residual(x);
    for (int it = 0;; ++it) {
        const double norm = f.norm();
        if (norm <= options.tol) {
            ss.x_bar = x;
            ss.y_bar = sys.output(x);
            ss.newton_residual = norm;
            ss.iterations = it;
            ss.converged = true;
            return ss;
        }
        if (it == options.max_iter) {
            throw Error(ErrorKind::MaxIterations,
                        sys.name + ": Newton stopped at residual " + fmt(norm) + " after " + std::to_string(it) + " steps");
        }
        Matrix jac(sys.n, sys.n);
        for (Eigen::Index i = 0; i < sys.n; ++i) {
            const double h = options.fd_step * std::max(1.0, std::abs(x(i)));
            Vector xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            jac.col(i) = (residual(xp) - residual(xm)) / (2.0 * h);
        }
        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) throw Error(ErrorKind::SingularJacobian, sys.name + ": singular Jacobian in Newton");
        const Vector step = lu.solve(-f);
        // Armijo backtracking on 1/2 ||f||^2
        const double merit = 0.5 * norm * norm;
        double t = 1.0;
        Vector trial = x + step;
        Vector ft = residual(trial);
        while (!(0.5 * ft.squaredNorm() <= (1.0 - 2e-4 * t) * merit) && t > 1e-10) {
            t *= 0.5;
            trial = x + t * step;
            ft = residual(trial);
        }
        x = trial;
        f = ft;
    }
}

ContinuationReport continuation_audit(const NonlinearSystem& sys, const std::vector<Vector>& u_path,
                                      const Vector& x_guess) {
    ContinuationReport report;
    Vector guess = x_guess;
    std::vector<double> steps;
    for (std::size_t i = 0; i < u_path.size(); ++i) {
        SteadyState ss;
        bool restarted = false;
        try {
            ss = solve_steady_state(sys, u_path[i], guess);
        } catch (const Error& e) {
            ss = solve_steady_state(sys, u_path[i], x_guess);
            restarted = true;
            if (report.note.empty()) report.note = std::string("warm start failed (") + e.what() + ")";
        }
        if (i > 0) {
            const double step = (ss.x_bar - report.states.back().x_bar).norm();
            report.max_jump = std::max(report.max_jump, step);
            bool flagged = restarted;
            if (steps.size() >= 2) {
                const double trend = 0.5 * (steps[steps.size() - 1] + steps[steps.size() - 2]);
                flagged = flagged || (step > 10.0 * trend && step > 1e-6);
            }
            if (flagged && report.continuous) {
                report.continuous = false;
                report.jump_index = i;
            }
            steps.push_back(step);
        }
        guess = ss.x_bar;
        report.states.push_back(std::move(ss));
    }
    return report;
}

ChainPoint solve_chain(const FeedbackSystem& fb, const Vector& u1, const Vector& x1_guess, const Vector& x2_guess) {
    ChainPoint p;
    try {
        p.first = solve_steady_state(fb.plant, u1, x1_guess);
    } catch (const Error& e) {
        throw StageFailure(1, e.what());
    }
    try {
        p.second = solve_steady_state(fb.controller, p.first.y_bar, x2_guess);
    } catch (const Error& e) {
        throw StageFailure(2, e.what());
    }
    return p;
}

std::vector<ChainPoint> solve_chain_grid(const FeedbackSystem& fb, const std::vector<Vector>& u_grid) {
    std::vector<ChainPoint> out(u_grid.size());
    if (u_grid.empty()) return out;
    std::size_t centre = 0;
    for (std::size_t i = 1; i < u_grid.size(); ++i) {
        if (u_grid[i].norm() < u_grid[centre].norm()) centre = i;
    }
    const Vector z1 = Vector::Zero(fb.plant.n), z2 = Vector::Zero(fb.controller.n);
    out[centre] = solve_chain(fb, u_grid[centre], z1, z2);
    for (std::size_t i = centre + 1; i < u_grid.size(); ++i) {
        out[i] = solve_chain(fb, u_grid[i], out[i - 1].first.x_bar, out[i - 1].second.x_bar);
    }
    for (std::size_t i = centre; i-- > 0;) {
        out[i] = solve_chain(fb, u_grid[i], out[i + 1].first.x_bar, out[i + 1].second.x_bar);
    }
    return out;
}

std::vector<Vector> scalar_grid(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw Error(ErrorKind::InvalidArgument, "grid needs lo < hi and at least 2 points");
    std::vector<Vector> grid;
    grid.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid.push_back(Vector::Constant(1, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1)));
    }
    return grid;
}

SignConditionReport audit_sign_condition(const FeedbackSystem& fb, const std::vector<Vector>& u_grid) {
    const std::vector<ChainPoint> chain = solve_chain_grid(fb, u_grid);
    SignConditionReport report;
    report.worst_product = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const double product = chain[i].first.y_bar.dot(chain[i].second.y_bar);
        if (product < report.worst_product) {
            report.worst_product = product;
            report.worst_u = u_grid[i];
        }
    }
    report.passed = report.worst_product >= -1e-9;
    return report;
}

void SectorScan::write_csv(std::ostream& os) const {
    os << "u_bar,y2_bar,upper_bound,lower_bound\n" << std::setprecision(17);
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        const bool scalar = u_grid[i].size() == 1;
        const double u = scalar ? u_grid[i](0) : u_grid[i].norm();
        const double y = scalar ? y2_bars[i](0) : y2_bars[i].norm();
        const double bound = gamma_hat * std::abs(u);
        os << u << ',' << y << ',' << bound << ',' << -bound << '\n';
    }
}

SectorScan sector_scan(const FeedbackSystem& fb, const std::vector<Vector>& u_grid, double margin) {
    SectorScan scan;
    scan.u_grid = u_grid;
    scan.margin = margin;
    const std::vector<ChainPoint> chain = solve_chain_grid(fb, u_grid);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        scan.y2_bars.push_back(chain[i].second.y_bar);
        const double un = u_grid[i].norm();
        if (un > kSectorExclusion) scan.grid_gamma = std::max(scan.grid_gamma, chain[i].second.y_bar.norm() / un);
    }
    const Vector z1 = Vector::Zero(fb.plant.n), z2 = Vector::Zero(fb.controller.n);
    for (Eigen::Index i = 0; i < fb.plant.m; ++i) {
        for (double sign : {1.0, -1.0}) {
            Vector u = Vector::Zero(fb.plant.m);
            u(i) = sign * kLimitStep;
            const ChainPoint p = solve_chain(fb, u, z1, z2);
            scan.limit_ratio = std::max(scan.limit_ratio, p.second.y_bar.norm() / kLimitStep);
        }
    }
    scan.gamma_hat = std::max(scan.grid_gamma, scan.limit_ratio);
    scan.satisfied = scan.gamma_hat <= 1.0 - margin;
    return scan;
}

StorageFunction composite_lyapunov(const FeedbackSystem& fb, const StorageFunction& v1, const StorageFunction& v2) {
    const NonlinearSystem p = fb.plant, c = fb.controller;
    const Eigen::Index n1 = p.n, n2 = c.n;
    StorageFunction w;
    w.value = [=](const Vector& z) {
        const Vector x1 = z.head(n1), x2 = z.tail(n2);
        return v1.value(x1) + v2.value(x2) - p.output(x1).dot(c.output(x2));
    };
    w.gradient = [=](const Vector& z) -> Vector {
        const Vector x1 = z.head(n1), x2 = z.tail(n2);
        Vector g(n1 + n2);
        g.head(n1) = v1.gradient_at(x1) - p.output_jacobian_at(x1).transpose() * c.output(x2);
        g.tail(n2) = v2.gradient_at(x2) - c.output_jacobian_at(x2).transpose() * p.output(x1);
        return g;
    };
    return w;
}

LowerBoundIteration lower_bound_iteration(const FeedbackSystem& fb, const StorageFunction& v1, const StorageFunction& v2,
                              const Vector& x1, const Vector& x2, double gamma, int max_iter) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must lie in (0, 1)");
    const NonlinearSystem& p = fb.plant;
    const NonlinearSystem& c = fb.controller;
    LowerBoundIteration report;
    const Vector h2 = c.output(x2);
    report.w_value = v1.value(x1) + v2.value(x2) - p.output(x1).dot(h2);
    if (h2.norm() == 0.0) {
        report.branch = 1;
        report.converged = true;
        report.lower_bound_trace.push_back(v1.value(x1) + v2.value(x2));
        return report;
    }
    report.branch = 2;
    const double s = 1.0 / std::sqrt(gamma);

    // Contraction chain: u2 = y1, next u1 = y2 / sqrt(gamma).
    Vector u = h2;
    Vector g1 = Vector::Zero(p.n), g2 = Vector::Zero(c.n);
    report.converged = true;
    for (int i = 1; i <= max_iter; ++i) {
        report.u_norm_trace.push_back(u.norm());
        ChainPoint pt;
        try {
            pt = solve_chain(fb, u, g1, g2);
        } catch (const StageFailure& e) {
            throw StageFailure(i, e.what());
        }
        g1 = pt.first.x_bar;
        g2 = pt.second.x_bar;
        const Vector next = s * pt.second.y_bar;
        if (report.u_norm_trace.back() > 0.0) {
            report.contraction_ratios.push_back(next.norm() / report.u_norm_trace.back());
        }
        if (next.norm() > std::sqrt(gamma) * u.norm() + 1e-9) report.converged = false;
        u = next;
        if (u.norm() == 0.0) break;
    }

    // Lower-bound ledger, scalings as in the telescoping argument.
    g1.setZero();
    g2.setZero();
    SteadyState s1, s2;
    try {
        s1 = solve_steady_state(p, h2, g1);
        s2 = solve_steady_state(c, s1.y_bar, g2);
    } catch (const Error& e) {
        throw StageFailure(1, e.what());
    }
    const double first_cross = s1.y_bar.dot(s2.y_bar);
    const double h1_norm = s1.y_bar.norm(), h2_norm = s2.y_bar.norm();
    if (h1_norm == 0.0 && h2_norm != 0.0) report.sub_case = 1;
    else if (h1_norm != 0.0 && h2_norm == 0.0) report.sub_case = 2;
    else if (first_cross > 0.0) report.sub_case = 3;
    report.lower_bound_trace.push_back(v1.value(s1.x_bar) + v2.value(s2.x_bar) - first_cross);
    report.limit_bound = (s - 1.0) * first_cross;
    for (int i = 2; i <= max_iter; ++i) {
        try {
            s1 = solve_steady_state(p, s * s2.y_bar, s1.x_bar);
            s2 = solve_steady_state(c, s * s1.y_bar, s2.x_bar);
        } catch (const Error& e) {
            throw StageFailure(i, e.what());
        }
        report.lower_bound_trace.push_back(v1.value(s1.x_bar) + v2.value(s2.x_bar) - s * s1.y_bar.dot(s2.y_bar) +
                                           report.limit_bound);
    }
    for (std::size_t i = 0; i < report.lower_bound_trace.size(); ++i) {
        if (report.lower_bound_trace[i] > report.w_value + 1e-9) report.bounds_below_w = false;
        // each entry bounds the previous one from below
        if (i > 0 && report.lower_bound_trace[i] > report.lower_bound_trace[i - 1] + 1e-9) report.ledger_monotone = false;
    }
    return report;
}

PositivityReport positivity_probe(const StorageFunction& w, const Box& box, std::size_t n_samples,
                                  double exclude_radius) {
    const MinimumProbe probe = probe_minimum(w.value, box, n_samples, exclude_radius);
    PositivityReport report;
    report.min_value = probe.min_value;
    report.argmin = probe.argmin;
    report.positive_on_samples = probe.min_value > 0.0;
    report.exclude_radius = exclude_radius;
    return report;
}

ClosedLoopReport closed_loop_experiment(const FeedbackSystem& fb, const StorageFunction& w,
                                        const std::vector<Vector>& initial_states, const ClosedLoopOptions& options) {
    const NonlinearSystem cl = fb.closed_loop();
    const Signal zero = zero_signal(cl.m);
    ClosedLoopReport report;
    report.runs.resize(initial_states.size());
    parallel_for(initial_states.size(), options.threads, [&](std::size_t i) {
        ClosedLoopRun& run = report.runs[i];
        run.z0 = initial_states[i];
        run.max_w_increase = -std::numeric_limits<double>::infinity();
        run.max_w_rate = -std::numeric_limits<double>::infinity();
        Trajectory traj;
        try {
            traj = simulate(cl, run.z0, zero, options.horizon, options.dt);
        } catch (const BlowUp&) {
            run.blew_up = true;
            run.final_norm = std::numeric_limits<double>::infinity();
            return;
        }
        double previous = w.value(traj.states.front());
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const Vector& z = traj.states[k];
            const double value = w.value(z);
            if (k > 0) run.max_w_increase = std::max(run.max_w_increase, value - previous);
            previous = value;
            run.max_w_rate = std::max(run.max_w_rate, w.gradient_at(z).dot(cl.dynamics(z, zero(0.0))));
        }
        run.final_norm = traj.states.back().norm();
        run.converged = run.final_norm < options.delta;
    });
    report.all_converged = !report.runs.empty();
    report.w_monotone = !report.runs.empty();
    for (const ClosedLoopRun& run : report.runs) {
        report.all_converged = report.all_converged && run.converged;
        report.worst_final_norm = std::max(report.worst_final_norm, run.final_norm);
        if (run.blew_up) {
            report.w_monotone = false;
            report.worst_dw = std::numeric_limits<double>::infinity();
            continue;
        }
        const double dw = std::max(run.max_w_increase, run.max_w_rate);
        report.worst_dw = std::max(report.worst_dw, dw);
        if (dw > options.monotone_tol) report.w_monotone = false;
    }
    return report;
}

std::vector<Vector> random_initial_states(Eigen::Index n, std::size_t count, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vector z(n);
        for (Eigen::Index j = 0; j < n; ++j) z(j) = dist(rng);
        out.push_back(std::move(z));
    }
    return out;
}

const CheckResult* InterconnectionAudit::find(const std::string& name) const {
    for (const CheckResult& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

void InterconnectionAudit::write_report(std::ostream& os) const {
    for (const CheckResult& c : checks) {
        os << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty()) os << ": " << c.detail;
        os << '\n';
    }
    os << (passed ? "overall: PASS\n" : "overall: FAIL\n");
}

InterconnectionAudit audit_interconnection(const FeedbackSystem& fb, const StorageFunction& v1,
                                           const StorageFunction& v2, const AuditOptions& options) {
    InterconnectionAudit audit;
    auto run = [&](const std::string& name, auto&& body) {
        CheckResult result{name, false, {}};
        try {
            body(result);
        } catch (const std::exception& e) {
            result.passed = false;
            result.detail = e.what();
        }
        log_info(std::string(result.passed ? "pass " : "fail ") + result.name + (result.detail.empty() ? "" : ": " + result.detail));
        audit.checks.push_back(std::move(result));
    };

    run("well_posed", [&](CheckResult& r) {
        fb.validate();
        r.passed = true;
    });
    if (!audit.checks.back().passed) return audit;

    std::vector<Vector> grid;
    if (fb.plant.m == 1) {
        grid = scalar_grid(options.u_lo, options.u_hi, options.n_points);
    } else {
        // scaled copies of a fixed direction for vector-valued ports
        const Vector dir = Vector::Ones(fb.plant.m) / std::sqrt(static_cast<double>(fb.plant.m));
        for (const Vector& s : scalar_grid(options.u_lo, options.u_hi, options.n_points)) grid.push_back(s(0) * dir);
    }

    std::vector<ChainPoint> chain;
    run("plant_steady_state_map", [&](CheckResult& r) {
        const ContinuationReport c = continuation_audit(fb.plant, grid, Vector::Zero(fb.plant.n));
        r.passed = c.continuous;
        r.detail = "max step " + fmt(c.max_jump) + (c.continuous ? "" : ", jump at index " + std::to_string(c.jump_index));
        if (!c.note.empty()) r.detail += "; " + c.note;
    });
    run("controller_steady_state_map", [&](CheckResult& r) {
        chain = solve_chain_grid(fb, grid);
        std::vector<Vector> y1;
        for (const ChainPoint& p : chain) y1.push_back(p.first.y_bar);
        std::vector<std::size_t> order(y1.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y1[a](0) < y1[b](0); });
        std::vector<Vector> path;
        for (std::size_t i : order) path.push_back(y1[i]);
        const ContinuationReport c = continuation_audit(fb.controller, path, Vector::Zero(fb.controller.n));
        r.passed = c.continuous;
        r.detail = "chain solved at " + std::to_string(chain.size()) + " points";
    });
    run("steady_state_sign", [&](CheckResult& r) {
        const SignConditionReport a3 = audit_sign_condition(fb, grid);
        r.passed = a3.passed;
        r.detail = "min h1^T h2 " + fmt(a3.worst_product);
    });
    run("sector_bound", [&](CheckResult& r) {
        audit.sector = sector_scan(fb, grid, options.margin);
        r.passed = audit.sector->satisfied;
        r.detail = "gamma_hat " + fmt(audit.sector->gamma_hat) + ", limit ratio at 0 " + fmt(audit.sector->limit_ratio);
    });

    const StorageFunction w = composite_lyapunov(fb, v1, v2);
    const Eigen::Index nz = fb.states();
    run("w_positive", [&](CheckResult& r) {
        const PositivityReport pr =
            positivity_probe(w, Box::cube(nz, -options.box_half_width, options.box_half_width), options.n_samples);
        r.passed = pr.positive_on_samples;
        r.detail = "min W outside the 1e-3 ball " + fmt(pr.min_value);
    });
    run("steady_state_contraction", [&](CheckResult& r) {
        if (!audit.sector || !audit.sector->satisfied || !(audit.sector->gamma_hat > 0.0)) {
            r.detail = "skipped: needs 0 < gamma_hat < 1";
            return;
        }
        const Vector x1 = Vector::Constant(fb.plant.n, options.box_half_width);
        const Vector x2 = Vector::Constant(fb.controller.n, 0.5 * options.box_half_width);
        audit.iteration = lower_bound_iteration(fb, v1, v2, x1, x2, audit.sector->gamma_hat, options.iteration_steps);
        r.passed = audit.iteration->converged;
        double worst = 0.0;
        for (double q : audit.iteration->contraction_ratios) worst = std::max(worst, q);
        r.detail = "worst ratio " + fmt(worst) + " vs sqrt(gamma_hat) " + fmt(std::sqrt(audit.sector->gamma_hat));
    });
    const std::vector<Vector> ics = random_initial_states(nz, options.n_ics, -options.box_half_width,
                                                          options.box_half_width, options.seed);
    run("zero_state_observability_h1", [&](CheckResult& r) {
        std::vector<Vector> x1s;
        for (const Vector& z : ics) x1s.push_back(z.head(fb.plant.n));
        const ObservabilityProbeReport o = zero_state_observability_probe(fb.plant, x1s, 10.0, 1e-2);
        r.passed = o.passed;
        r.detail = "min peak |y| / |x0| " + fmt(o.min_output_ratio);
    });
    run("closed_loop", [&](CheckResult& r) {
        if (ics.empty()) throw Error(ErrorKind::InvalidArgument, "no initial states");
        audit.closed_loop = closed_loop_experiment(fb, w, ics, options.closed_loop);
        r.passed = audit.closed_loop->all_converged && audit.closed_loop->w_monotone;
        r.detail = "worst |z(T)| " + fmt(audit.closed_loop->worst_final_norm) + ", worst dW " + fmt(audit.closed_loop->worst_dw);
    });

    audit.passed = std::all_of(audit.checks.begin(), audit.checks.end(), [](const CheckResult& c) { return c.passed; });
    return audit;
}

}  // namespace niaudit
