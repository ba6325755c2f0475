#include "commands.hpp"

#include "niaudit/errors.hpp"
#include "niaudit/free_motion.hpp"
#include "niaudit/interconnection.hpp"
#include "niaudit/logging.hpp"
#include "niaudit/msd_case_study.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace niaudit::cli {
namespace {

constexpr double kNniTol = 1e-5;
constexpr std::size_t kNniRuns = 10;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) parts.push_back(part);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

double to_double(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::ParseError, "bad number '" + s + "' in " + what);
    }
    return v;
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::vector<Signal> random_inputs(Eigen::Index m, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Signal> inputs;
    for (std::size_t i = 0; i < count; ++i) inputs.push_back(random_smooth_signal(m, 1.0, rng));
    return inputs;
}

std::string dissipativity_csv(const std::vector<DissipativityReport>& runs) {
    std::ostringstream os;
    os << "run,max_differential_violation,max_integral_violation,integral_slack,passed\n" << std::setprecision(17);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        os << i << ',' << runs[i].max_differential_violation << ',' << runs[i].max_integral_violation << ','
           << runs[i].integral_slack << ',' << (runs[i].passed ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string closed_loop_csv(const ClosedLoopReport& report) {
    std::ostringstream os;
    os << "run";
    const Eigen::Index n = report.runs.empty() ? 0 : report.runs.front().z0.size();
    for (Eigen::Index i = 0; i < n; ++i) os << ",z0_" << i + 1;
    os << ",final_norm,max_w_increase,max_w_rate,converged,blew_up\n" << std::setprecision(17);
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const ClosedLoopRun& run = report.runs[r];
        os << r;
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << run.z0(i);
        os << ',' << run.final_norm << ',' << run.max_w_increase << ',' << run.max_w_rate << ','
           << (run.converged ? 1 : 0) << ',' << (run.blew_up ? 1 : 0) << '\n';
    }
    return os.str();
}

template <typename T>
std::string to_csv(const T& item) {
    std::ostringstream os;
    item.write_csv(os);
    return os.str();
}

// storage for a system inside a feedback loop or an NNI check
std::optional<StorageFunction> storage_for(const ResolvedSystem& r, std::string& note) {
    if (r.storage) return r.storage;
    if (r.cascade) {
        note = "storage from the cascade construction";
        return free_motion_storage(*r.cascade).expanded;
    }
    if (r.lti) {
        const std::optional<NiCertificate> cert = search_certificate(*r.lti);
        if (cert && cert->valid && cert->storage) {
            note = "storage 1/2 x^T P^-1 x from the certificate search";
            return quadratic_storage(*cert->storage);
        }
        note = "no certificate found";
    }
    return std::nullopt;
}

Box symmetric_box(Eigen::Index dim, const std::optional<Range>& box, double fallback) {
    if (!box) return Box::cube(dim, -fallback, fallback);
    return Box::cube(dim, box->lo, box->hi);
}

}  // namespace

Range parse_grid(const std::string& text) {
    const std::vector<std::string> p = split(text, ':');
    if (p.size() != 3) throw Error(ErrorKind::ParseError, "grid must be a:b:n, got '" + text + "'");
    Range r{to_double(p[0], "grid"), to_double(p[1], "grid"), 0};
    const double n = to_double(p[2], "grid");
    if (!(r.lo < r.hi) || n < 2 || n != std::floor(n)) {
        throw Error(ErrorKind::ParseError, "grid needs a < b and an integer n >= 2");
    }
    r.n = static_cast<std::size_t>(n);
    return r;
}

Range parse_box(const std::string& text) {
    const std::vector<std::string> p = split(text, ':');
    if (p.size() != 2) throw Error(ErrorKind::ParseError, "box must be a:b, got '" + text + "'");
    Range r{to_double(p[0], "box"), to_double(p[1], "box"), 0};
    if (!(r.lo < r.hi)) throw Error(ErrorKind::ParseError, "box needs a < b");
    return r;
}

CommandResult cmd_verify_lti(const SystemDescription& desc, const std::string& property, const RunConfig& config) {
    if (desc.kind != SystemKind::Lti) throw Error(ErrorKind::InvalidArgument, "verify-lti needs an lti description");
    if (property != "ni" && property != "sni" && property != "pr") {
        throw Error(ErrorKind::InvalidArgument, "property must be ni, sni or pr");
    }
    const StateSpace sys = StateSpace::make(desc.a, desc.b, desc.c, desc.d);
    sys.require_square();
    const FrequencyGrid grid = config.grid ? FrequencyGrid::logspace(config.grid->lo, config.grid->hi, config.grid->n)
                                           : FrequencyGrid::standard();
    const double tol = config.tol.value_or(1e-9);
    std::ostringstream rep;
    rep << "system: " << sys.states() << " states, " << sys.inputs() << " inputs\n";

    std::optional<bool> ni, sni, pr;
    bool free_motion = false;
    try {
        NiFrequencyReport f;
        try {
            f = ni_frequency_test(sys, grid, tol);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleAtOrigin) throw;
            free_motion = true;
            f = ni_frequency_test(sys, grid, tol, OriginPolePolicy::FreeMotion);
        }
        ni = f.is_ni;
        rep << "ni frequency test" << (free_motion ? " (poles at the origin allowed)" : "") << ": "
            << verdict(f.is_ni) << " worst lambda_min " << num(f.worst_lambda_min) << " at w = " << num(f.worst_omega)
            << (f.no_rhp_poles ? "" : ", right half-plane poles") << '\n';
    } catch (const Error& e) {
        rep << "ni frequency test: ERROR " << e.what() << '\n';
    }
    try {
        const SniFrequencyReport s = sni_frequency_test(sys, grid);
        sni = s.is_sni;
        rep << "sni frequency test: " << verdict(s.is_sni) << " worst normalized " << num(s.worst_normalized)
            << " at w = " << num(s.worst_omega) << '\n';
    } catch (const Error& e) {
        sni = false;
        rep << "sni frequency test: FAIL " << e.what() << '\n';
    }
    try {
        const PrFrequencyReport p = pr_frequency_test(sys, grid, tol);
        pr = p.is_pr;
        rep << "pr frequency test: " << verdict(p.is_pr) << " worst lambda_min " << num(p.worst_lambda_min)
            << " at w = " << num(p.worst_omega) << '\n';
    } catch (const Error& e) {
        rep << "pr frequency test: ERROR " << e.what() << '\n';
    }

    std::optional<Matrix> storage;
    if (!free_motion) {
        try {
            const std::optional<NiCertificate> cert = search_certificate(sys);
            if (cert) {
                rep << "certificate search: " << verdict(cert->valid) << " residual " << num(cert->residual_affine)
                    << " lambda_min(P) " << num(cert->lambda_min_P) << " lambda_max(AP + PA^T) "
                    << num(cert->lambda_max_lyap) << '\n';
                if (cert->valid) storage = cert->storage;
            } else {
                rep << "certificate search: no certificate found\n";
            }
        } catch (const Error& e) {
            rep << "certificate search: ERROR " << e.what() << '\n';
        }
    } else {
        const std::optional<StorageCertificate> cert = search_storage_certificate(sys, true);
        if (cert && cert->valid) {
            rep << "storage-form certificate search: PASS lambda_min(X) " << num(cert->lambda_min_X)
                << " lambda_max(LMI) " << num(cert->lambda_max_lmi) << '\n';
            storage = cert->X;
        } else {
            rep << "storage-form certificate search: no certificate found\n";
        }
    }

    bool time_ok = false;
    if (storage) {
        const double horizon = config.horizon.value_or(20.0), dt = config.dt.value_or(1e-3);
        const Vector amp = Vector::Ones(sys.inputs()), phase = Vector::Zero(sys.inputs());
        const TimeDomainNiReport t = time_domain_ni_check(sys, *storage, sine_signal(amp, 1.0, phase), horizon, dt);
        const double scale = 1.0 + storage->norm();
        time_ok = t.max_violation <= 1e-6 * scale && t.max_integral_violation <= 1e-6 * scale;
        rep << "time-domain check: " << verdict(time_ok) << " max violation " << num(t.max_violation)
            << " integral " << num(t.max_integral_violation) << " over " << t.samples << " samples\n";
    }

    CommandResult result;
    if (property == "ni") {
        if (!ni) result.exit_code = kNumericalFailure;
        else if (!*ni) result.exit_code = storage ? kNumericalFailure : kRefuted;
        else result.exit_code = (storage && time_ok) ? kPassed : kNumericalFailure;
    } else if (property == "sni") {
        result.exit_code = *sni ? kPassed : kRefuted;
    } else {
        result.exit_code = !pr ? kNumericalFailure : (*pr ? kPassed : kRefuted);
    }
    rep << "property " << property << ": "
        << (result.exit_code == kPassed ? "certified" : result.exit_code == kRefuted ? "refuted" : "inconclusive")
        << '\n';
    result.report = rep.str();
    return result;
}

CommandResult cmd_verify_nni(const SystemDescription& desc, const RunConfig& config) {
    const ResolvedSystem r = resolve(desc);
    std::string note;
    const std::optional<StorageFunction> v = storage_for(r, note);
    std::ostringstream rep;
    rep << "system: " << r.system.name << " (" << r.system.n << " states)\n";
    if (!note.empty()) rep << note << '\n';
    CommandResult result;
    if (!v) {
        rep << "no storage function available\n";
        result.exit_code = kRefuted;
        result.report = rep.str();
        return result;
    }
    const double horizon = config.horizon.value_or(20.0), dt = config.dt.value_or(1e-3);
    const double tol = config.tol.value_or(kNniTol);
    std::vector<DissipativityReport> runs;
    bool ok = true;
    for (const Signal& u : random_inputs(r.system.m, kNniRuns, config.seed)) {
        const Trajectory traj = simulate(r.system, Vector::Zero(r.system.n), u, horizon, dt);
        runs.push_back(dissipativity_check(r.system, *v, traj, tol));
        ok = ok && runs.back().passed;
    }
    double worst = 0.0;
    for (const DissipativityReport& d : runs) worst = std::max(worst, d.max_violation);
    rep << "dissipation inequality over " << runs.size() << " random inputs: " << verdict(ok) << " max violation "
        << num(worst) << '\n';
    if (r.affine) {
        const Box state_box = symmetric_box(r.system.n, config.box, 2.0);
        const Box input_box = symmetric_box(r.system.m, config.box, 2.0);
        const PointwiseReport p = nni_pointwise_check(*r.affine, *v, state_box, input_box, 10000);
        rep << "pointwise inequality on " << p.samples << " samples: " << verdict(p.passed) << " max violation "
            << num(p.max_violation) << '\n';
        ok = ok && p.passed;
    }
    result.exit_code = ok ? kPassed : kRefuted;
    result.files["nni_runs.csv"] = dissipativity_csv(runs);
    result.report = rep.str();
    return result;
}

CommandResult cmd_audit_interconnection(const SystemDescription& plant_desc, const SystemDescription& ctrl_desc,
                                        const AuditFlags& flags, const RunConfig& config) {
    if (flags.n_ics == 0) throw Error(ErrorKind::InvalidArgument, "the initial-state set is empty");
    const ResolvedSystem plant = resolve(plant_desc), ctrl = resolve(ctrl_desc);
    std::string note1, note2;
    const std::optional<StorageFunction> v1 = storage_for(plant, note1), v2 = storage_for(ctrl, note2);
    std::ostringstream rep;
    CommandResult result;
    if (!v1 || !v2) {
        rep << "missing storage: " << (!v1 ? "plant " + note1 : "controller " + note2) << '\n';
        result.exit_code = kRefuted;
        result.report = rep.str();
        return result;
    }
    AuditOptions opts;
    if (config.grid) {
        opts.u_lo = config.grid->lo;
        opts.u_hi = config.grid->hi;
        opts.n_points = config.grid->n;
    }
    if (config.box) {
        if (config.box->lo != -config.box->hi) throw Error(ErrorKind::InvalidArgument, "box must be symmetric, -r:r");
        opts.box_half_width = config.box->hi;
    }
    opts.margin = flags.margin;
    opts.n_samples = flags.n_samples;
    opts.n_ics = flags.n_ics;
    opts.seed = config.seed;
    opts.closed_loop.horizon = config.horizon.value_or(opts.closed_loop.horizon);
    opts.closed_loop.dt = config.dt.value_or(opts.closed_loop.dt);
    opts.closed_loop.threads = config.threads;
    const FeedbackSystem fb{plant.system, ctrl.system};
    const InterconnectionAudit audit = audit_interconnection(fb, *v1, *v2, opts);
    rep << "plant: " << plant.system.name << ", controller: " << ctrl.system.name << '\n';
    std::ostringstream body;
    audit.write_report(body);
    rep << body.str();
    if (audit.sector) result.files["sector_scan.csv"] = to_csv(*audit.sector);
    if (audit.closed_loop) result.files["closed_loop.csv"] = closed_loop_csv(*audit.closed_loop);
    result.exit_code = audit.passed ? kPassed : kRefuted;
    result.report = rep.str();
    return result;
}

CommandResult cmd_free_motion(const SystemDescription& desc, std::size_t n_samples, const RunConfig& config) {
    const ResolvedSystem r = resolve(desc);
    if (!r.cascade) throw Error(ErrorKind::InvalidArgument, "free-motion needs a cascade with an integrator");
    const CascadeIntegratorSystem& sys = *r.cascade;
    const Range box = config.box.value_or(Range{-2.0, 2.0, 0});
    const Box eta_box = Box::cube(sys.n, box.lo, box.hi);
    const Box joint_box = Box::cube(sys.n + 1, box.lo, box.hi);
    std::ostringstream rep;
    rep << "system: " << sys.name << '\n';
    CommandResult result;

    const FreeMotionConditions cond = check_free_motion_conditions(sys, eta_box, n_samples);
    cond.write(rep);
    std::ostringstream locus;
    cond.write_zero_locus_csv(locus, sys);
    result.files["zero_locus.csv"] = locus.str();

    FreeMotionStorage storage;
    try {
        storage = free_motion_storage(sys, eta_box);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Cond1Violated) throw;
        rep << "storage: not constructed, " << e.what() << '\n';
        result.exit_code = kRefuted;
        result.report = rep.str();
        return result;
    }
    const FreeMotionNniReport nni =
        verify_free_motion_nni(sys, storage.expanded, random_inputs(1, kNniRuns, config.seed),
                               config.horizon.value_or(20.0), config.dt.value_or(1e-3), Vector(), joint_box, n_samples,
                               config.tol.value_or(kNniTol));
    rep << "dissipation inequality over " << nni.runs.size() << " random inputs: " << verdict(nni.passed)
        << " max violation " << num(nni.max_violation) << '\n';
    rep << "residual dV/dt - y'u on samples: max " << num(nni.residual.max_value) << ", " << nni.residual.positive
        << " of " << nni.residual.samples << " samples positive\n";
    result.files["nni_runs.csv"] = dissipativity_csv(nni.runs);

    const StoragePositivityReport pos = audit_storage_positivity(sys, storage.expanded, joint_box, n_samples);
    rep << "storage positivity: min off origin " << num(pos.min_off_origin) << ", min off the zero set "
        << num(pos.min_off_zero_set) << ", " << pos.semidefinite_directions.size() << " zero-set points, "
        << (pos.positive_definite_evidence ? "positive definite on samples" : "only semidefinite") << '\n';
    std::ostringstream zs;
    for (Eigen::Index i = 0; i < sys.n; ++i) zs << "eta_" << i + 1 << ',';
    zs << "xi,V\n" << std::setprecision(17);
    for (const Vector& z : pos.semidefinite_directions) {
        for (Eigen::Index i = 0; i < z.size(); ++i) zs << z(i) << ',';
        zs << storage.expanded.value(z) << '\n';
    }
    result.files["storage_zero_set.csv"] = zs.str();

    result.exit_code = (cond.overall && nni.passed) ? kPassed : kRefuted;
    result.report = rep.str();
    return result;
}

CommandResult cmd_msd_demo(const DemoFlags& flags, const RunConfig& config) {
    if (flags.n_ics == 0) throw Error(ErrorKind::InvalidArgument, "the initial-state set is empty");
    MsdDemoOptions opts;
    opts.controller = IrcController{flags.gamma, flags.phi};
    (void)opts.controller.realization();
    if (config.grid) {
        opts.audit.u_lo = config.grid->lo;
        opts.audit.u_hi = config.grid->hi;
        opts.audit.n_points = config.grid->n;
    }
    opts.audit.n_ics = flags.n_ics;
    opts.audit.n_samples = flags.n_samples;
    opts.audit.seed = config.seed;
    opts.audit.closed_loop.horizon = config.horizon.value_or(60.0);
    opts.audit.closed_loop.dt = config.dt.value_or(1e-3);
    opts.audit.closed_loop.threads = config.threads;

    CommandResult result;
    std::ostringstream rep;
    const SectorPlotData plot =
        sector_plot_data(flags.phi, kMsdStiffness, opts.audit.u_lo, opts.audit.u_hi, opts.audit.n_points);
    result.files["sector_plot.csv"] = to_csv(plot);
    rep << "closed-form sector gain " << num(plot.gamma_hat) << " (limit at 0: " << num(plot.limit_ratio) << ")\n";
    try {
        const MsdDemoReport demo = msd_closed_loop_demo(opts);
        std::ostringstream body;
        demo.audit.write_report(body);
        rep << body.str();
        if (demo.audit.sector) result.files["sector_scan.csv"] = to_csv(*demo.audit.sector);
        if (demo.audit.closed_loop) result.files["closed_loop.csv"] = closed_loop_csv(*demo.audit.closed_loop);
        for (std::size_t i = 0; i < demo.traces.size(); ++i) {
            result.files["trace_" + std::to_string(i) + ".csv"] = to_csv(demo.traces[i]);
        }
        result.exit_code = demo.passed ? kPassed : kRefuted;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::AssumptionFailed) throw;
        rep << "assumption failed: " << e.what() << '\n';
        result.exit_code = kRefuted;
    }
    result.report = rep.str();
    return result;
}

CommandResult cmd_sector_scan(const std::optional<SystemDescription>& plant,
                              const std::optional<SystemDescription>& controller, double phi, double k,
                              const RunConfig& config) {
    const Range grid = config.grid.value_or(Range{-16.0, 16.0, 401});
    CommandResult result;
    std::ostringstream rep;
    if (plant.has_value() != controller.has_value()) {
        throw Error(ErrorKind::InvalidArgument, "give both plant and controller, or neither");
    }
    if (plant) {
        const FeedbackSystem fb{resolve(*plant).system, resolve(*controller).system};
        const SectorScan scan = sector_scan(fb, scalar_grid(grid.lo, grid.hi, grid.n), config.tol.value_or(0.01));
        result.files["sector_scan.csv"] = to_csv(scan);
        rep << "sector gain " << num(scan.gamma_hat) << " (grid " << num(scan.grid_gamma) << ", limit at 0 "
            << num(scan.limit_ratio) << "): " << verdict(scan.satisfied) << '\n';
        result.exit_code = scan.satisfied ? kPassed : kRefuted;
    } else {
        const SectorPlotData plot = sector_plot_data(phi, k, grid.lo, grid.hi, grid.n);
        result.files["sector_plot.csv"] = to_csv(plot);
        rep << "sector gain " << num(plot.gamma_hat) << " (grid " << num(plot.grid_gamma) << ", limit at 0 "
            << num(plot.limit_ratio) << "): " << verdict(plot.satisfied) << '\n';
        result.exit_code = plot.satisfied ? kPassed : kRefuted;
    }
    result.report = rep.str();
    return result;
}

CommandResult cmd_simulate(const SystemDescription& desc, const SimulateFlags& flags, const RunConfig& config) {
    const ResolvedSystem r = resolve(desc);
    Vector x0 = Vector::Zero(r.system.n);
    if (!flags.x0.empty()) {
        const std::vector<std::string> parts = split(flags.x0, ',');
        if (static_cast<Eigen::Index>(parts.size()) != r.system.n) {
            throw Error(ErrorKind::InvalidArgument, "x0 needs " + std::to_string(r.system.n) + " entries");
        }
        for (std::size_t i = 0; i < parts.size(); ++i) x0(static_cast<Eigen::Index>(i)) = to_double(parts[i], "x0");
    }
    const Eigen::Index m = r.system.m;
    Signal u;
    if (flags.input == "zero") u = zero_signal(m);
    else if (flags.input == "step") u = constant_signal(Vector::Constant(m, flags.amplitude));
    else if (flags.input == "sine") u = sine_signal(Vector::Constant(m, flags.amplitude), flags.omega, Vector::Zero(m));
    else throw Error(ErrorKind::InvalidArgument, "input must be zero, step or sine");
    const Trajectory traj = simulate(r.system, x0, u, config.horizon.value_or(20.0), config.dt.value_or(1e-3));
    CommandResult result;
    result.files["trajectory.csv"] = to_csv(traj);
    std::ostringstream rep;
    rep << "simulated " << r.system.name << " for " << traj.size() << " samples, final |x| "
        << num(traj.states.back().norm()) << '\n';
    result.report = rep.str();
    return result;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Negative-imaginary system audits"};
    app.require_subcommand(1);
    RunConfig config;
    std::string grid_text, box_text;
    double tol = 0.0, horizon = 0.0, dt = 0.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--out", config.out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", config.seed, "random seed")->capture_default_str();
        sub->add_option("--tol", tol, "tolerance");
        sub->add_option("--grid", grid_text, "grid a:b:n");
        sub->add_option("--box", box_text, "box a:b");
        sub->add_option("--T", horizon, "horizon");
        sub->add_option("--dt", dt, "time step");
        sub->add_option("--threads", config.threads, "worker threads, 0 = all cores")->capture_default_str();
    };

    std::string file1, file2, property = "ni";
    auto* verify_lti = app.add_subcommand("verify-lti", "frequency, certificate and time-domain checks");
    verify_lti->add_option("system", file1)->required();
    verify_lti->add_option("--property", property)->check(CLI::IsMember({"ni", "sni", "pr"}))->capture_default_str();
    common(verify_lti);

    auto* verify_nni = app.add_subcommand("verify-nni", "dissipation inequality for a system and its storage");
    verify_nni->add_option("system", file1)->required();
    common(verify_nni);

    AuditFlags audit_flags;
    auto* audit = app.add_subcommand("audit-interconnection", "steady-state assumptions and closed loop");
    audit->add_option("plant", file1)->required();
    audit->add_option("controller", file2)->required();
    audit->add_option("--ics", audit_flags.n_ics, "number of initial states")->capture_default_str();
    audit->add_option("--margin", audit_flags.margin, "sector margin")->capture_default_str();
    audit->add_option("--samples", audit_flags.n_samples, "positivity samples")->capture_default_str();
    common(audit);

    std::size_t fm_samples = 10000;
    auto* free_motion = app.add_subcommand("free-motion", "conditions and storage for a cascade with an integrator");
    free_motion->add_option("system", file1)->required();
    free_motion->add_option("--samples", fm_samples)->capture_default_str();
    common(free_motion);

    DemoFlags demo_flags;
    auto* demo = app.add_subcommand("msd-demo", "mass-spring-damper with an integral resonant controller");
    demo->add_option("--gamma", demo_flags.gamma)->capture_default_str();
    demo->add_option("--phi", demo_flags.phi)->capture_default_str();
    demo->add_option("--ics", demo_flags.n_ics)->capture_default_str();
    demo->add_option("--samples", demo_flags.n_samples)->capture_default_str();
    common(demo);

    double phi = kIrcPhi, k = kMsdStiffness;
    auto* sector = app.add_subcommand("sector-scan", "steady-state sector gain");
    sector->add_option("plant", file1);
    sector->add_option("controller", file2);
    sector->add_option("--phi", phi)->capture_default_str();
    sector->add_option("--k", k)->capture_default_str();
    common(sector);

    SimulateFlags sim_flags;
    auto* simulate_cmd = app.add_subcommand("simulate", "RK4 simulation to CSV");
    simulate_cmd->add_option("system", file1)->required();
    simulate_cmd->add_option("--input", sim_flags.input)->check(CLI::IsMember({"zero", "step", "sine"}))
        ->capture_default_str();
    simulate_cmd->add_option("--amplitude", sim_flags.amplitude)->capture_default_str();
    simulate_cmd->add_option("--omega", sim_flags.omega)->capture_default_str();
    simulate_cmd->add_option("--x0", sim_flags.x0, "comma-separated initial state");
    common(simulate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPassed;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kPassed;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }

    CommandResult result;
    try {
        CLI::App* sub = app.get_subcommands().front();
        if (sub->count("--tol")) config.tol = tol;
        if (sub->count("--T")) config.horizon = horizon;
        if (sub->count("--dt")) config.dt = dt;
        if (!grid_text.empty()) config.grid = parse_grid(grid_text);
        if (!box_text.empty()) config.box = parse_box(box_text);
        if (sub == verify_lti) result = cmd_verify_lti(load_description(file1), property, config);
        else if (sub == verify_nni) result = cmd_verify_nni(load_description(file1), config);
        else if (sub == audit)
            result = cmd_audit_interconnection(load_description(file1), load_description(file2), audit_flags, config);
        else if (sub == free_motion) result = cmd_free_motion(load_description(file1), fm_samples, config);
        else if (sub == demo) result = cmd_msd_demo(demo_flags, config);
        else if (sub == sector) {
            std::optional<SystemDescription> p, c;
            if (!file1.empty()) p = load_description(file1);
            if (!file2.empty()) c = load_description(file2);
            result = cmd_sector_scan(p, c, phi, k, config);
        } else result = cmd_simulate(load_description(file1), sim_flags, config);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        const ErrorKind kind = e.kind();
        const bool input = kind == ErrorKind::ParseError || kind == ErrorKind::InvalidArgument ||
                           kind == ErrorKind::DimensionMismatch || kind == ErrorKind::NonSquare;
        return input ? kInputError : kNumericalFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    }

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) {
        err << "error: cannot create '" << config.out_dir << "': " << ec.message() << '\n';
        return kInputError;
    }
    result.files["report.txt"] = result.report;
    for (const auto& [name, content] : result.files) {
        std::ofstream f(std::filesystem::path(config.out_dir) / name, std::ios::binary);
        f << content;
        if (!f) {
            err << "error: cannot write " << name << '\n';
            return kNumericalFailure;
        }
    }
    out << result.report;
    log_info("exit code " + std::to_string(result.exit_code));
    return result.exit_code;
}

}  // namespace niaudit::cli
