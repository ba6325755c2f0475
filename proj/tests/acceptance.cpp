// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "niaudit/builtin_systems.hpp"
#include "niaudit/errors.hpp"
#include "niaudit/free_motion.hpp"
#include "niaudit/interconnection.hpp"
#include "niaudit/lti.hpp"
#include "niaudit/matrix_kernel.hpp"
#include "niaudit/msd_case_study.hpp"
#include "niaudit/ode.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#ifndef NIAUDIT_CLI_PATH
#error "NIAUDIT_CLI_PATH must point at the command-line binary"
#endif

using namespace niaudit;
namespace fs = std::filesystem;

namespace {

// tolerances
constexpr double kCardanoNewtonTol = 1e-9;
constexpr double kCardanoExactTol = 1e-12;
constexpr double kCardanoSeconds = 1.0;
constexpr double kSectorSeconds = 5.0;
constexpr double kDemoSeconds = 30.0;
constexpr double kFinalNormTol = 1e-3;
constexpr double kMonotoneTol = 1e-5;
constexpr double kDissipationTol = 1e-5;
constexpr double kLtiTimeTol = 1e-6;
constexpr double kLmiTol = 1e-7;
constexpr double kRoundTripTol = 1e-8;
constexpr double kContractionSlack = 1e-6;
constexpr std::size_t kMinContractionSteps = 10;
constexpr double kConditionTol = 1e-12;
constexpr double kLocusTol = 1e-9;
constexpr double kZeroLineTol = 1e-6;

struct Outcome {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

StateSpace second_order(double beta, double k) {
    Matrix a(2, 2), b(2, 1), c(1, 2);
    a << 0, 1, -k, -beta;
    b << 0, 1;
    c << 1, 0;
    return StateSpace::make(a, b, c, Matrix::Zero(1, 1));
}

StateSpace pr_example() {
    Matrix a(2, 2), b(2, 1), c(1, 2);
    a << -1, -1, 1, 0;
    b << 1, 0;
    c << 1, 1;
    return StateSpace::make(a, b, c, Matrix::Zero(1, 1));
}

FeedbackSystem msd_irc(double phi) {
    IrcController irc;
    irc.phi = phi;
    return FeedbackSystem{make_msd(kMsdMass, kMsdDamping, kMsdStiffness).system.to_nonlinear(), irc.system()};
}

Outcome cardano_vs_newton() {
    const auto t0 = Clock::now();
    const NonlinearSystem msd = make_msd(kMsdMass, kMsdDamping, kMsdStiffness).system.to_nonlinear();
    double worst = 0.0;
    Vector guess = Vector::Zero(2);
    for (const Vector& u : scalar_grid(-16.0, 16.0, 401)) {
        const SteadyState ss = solve_steady_state(msd, u, guess);
        guess = ss.x_bar;
        worst = std::max(worst, std::abs(ss.x_bar(0) - cardano_steady_state(u(0), kMsdStiffness).root));
    }
    const CardanoResult four = cardano_steady_state(4.0, kMsdStiffness);
    const double exact_gap = std::abs(four.root - 1.0);
    const double substituted = std::abs(four.root * four.root * four.root + four.root - 2.0);
    const double secs = seconds_since(t0);
    return {worst <= kCardanoNewtonTol && exact_gap <= kCardanoExactTol && substituted <= kCardanoExactTol &&
                secs < kCardanoSeconds,
            "max |cardano - newton| " + fmt(worst) + ", |root(4) - 1| " + fmt(exact_gap) + ", " + fmt(secs) + " s"};
}

Outcome sector_plot() {
    const auto t0 = Clock::now();
    const SectorPlotData good = sector_plot_data(2.0, kMsdStiffness, -16.0, 16.0, 401);
    const SectorPlotData bad = sector_plot_data(0.4, kMsdStiffness, -16.0, 16.0, 401);
    AuditOptions opts;
    opts.n_samples = 500;
    opts.n_ics = 1;
    opts.closed_loop.horizon = 1.0;
    IrcController irc;
    irc.phi = 0.4;
    const InterconnectionAudit audit =
        audit_interconnection(msd_irc(0.4), make_msd(kMsdMass, kMsdDamping, kMsdStiffness).storage, irc.storage(), opts);
    const CheckResult* sector = audit.find("sector_bound");
    const bool audit_fails = sector != nullptr && !sector->passed && !audit.passed;
    const double secs = seconds_since(t0);
    return {good.satisfied && good.gamma_hat < 1.0 && bad.limit_ratio > 1.0 && audit_fails && secs < kSectorSeconds,
            "phi 2 gamma_hat " + fmt(good.gamma_hat) + ", phi 0.4 slope ratio " + fmt(bad.limit_ratio) +
                (audit_fails ? ", audit fails sector_bound" : ", audit did not fail") + ", " + fmt(secs) + " s"};
}

Outcome closed_loop_demo() {
    const auto t0 = Clock::now();
    const FeedbackSystem fb = msd_irc(kIrcPhi);
    IrcController irc;
    const StorageFunction w =
        composite_lyapunov(fb, make_msd(kMsdMass, kMsdDamping, kMsdStiffness).storage, irc.storage());
    ClosedLoopOptions opts;
    opts.horizon = 60.0;
    opts.monotone_tol = kMonotoneTol;
    opts.delta = kFinalNormTol;
    const ClosedLoopReport r = closed_loop_experiment(fb, w, random_initial_states(fb.states(), 20, -1.0, 1.0, 42), opts);
    const double secs = seconds_since(t0);
    return {r.runs.size() == 20 && r.all_converged && r.worst_final_norm < kFinalNormTol && r.worst_dw <= kMonotoneTol &&
                secs < kDemoSeconds,
            "20 runs, worst |z(60)| " + fmt(r.worst_final_norm) + ", worst W increase " + fmt(r.worst_dw) + ", " +
                fmt(secs) + " s"};
}

Outcome dissipativity_suites() {
    std::vector<SystemWithStorage> suites{make_msd(), make_harmonic_oscillator(), make_hamiltonian_pendulum(),
                                          make_euler_lagrange_pendulum2()};
    const CascadeIntegratorSystem cascade = make_first_order_cascade();
    std::vector<std::pair<NonlinearSystem, StorageFunction>> pairs;
    for (const SystemWithStorage& s : suites) pairs.emplace_back(s.system.to_nonlinear(), s.storage);
    pairs.emplace_back(cascade.to_nonlinear(), free_motion_storage(cascade).expanded);
    std::mt19937_64 rng(42);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [sys, storage] : pairs) {
        for (int trial = 0; trial < 10; ++trial) {
            const Trajectory t = simulate(sys, Vector::Zero(sys.n), random_smooth_signal(sys.m, 1.0, rng), 20.0, 1e-3);
            const DissipativityReport r = dissipativity_check(sys, storage, t, kDissipationTol);
            if (r.max_violation >= worst) {
                worst = r.max_violation;
                worst_name = sys.name;
            }
        }
    }
    return {worst <= kDissipationTol,
            std::to_string(pairs.size()) + " systems x 10 inputs, worst violation " + fmt(worst) + " (" + worst_name + ")"};
}

Outcome lti_cross_validation() {
    Matrix s(2, 2);
    s << 2, 0.5, 0.5, 1;
    const std::vector<std::pair<std::string, StateSpace>> stable{
        {"lag", StateSpace::siso(-1, 1, 1)},
        {"irc", IrcController{}.realization()},
        {"msd_linear", second_order(1.0, 2.0)},
        {"light_damping", second_order(0.1, 4.0)},
        {"mimo_symmetric", StateSpace::make(-s, Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Zero(2, 2))},
    };
    const FrequencyGrid grid = FrequencyGrid::standard();
    std::mt19937_64 rng(42);
    int disagreements = 0, checked = 0;
    std::string failed;
    auto note = [&](bool agree, const std::string& name) {
        ++checked;
        if (!agree) {
            ++disagreements;
            failed += " " + name;
        }
    };
    for (const auto& [name, sys] : stable) {
        const bool freq = ni_frequency_test(sys, grid).is_ni;
        const auto cert = search_certificate(sys);
        bool time_ok = false;
        if (cert && cert->storage) {
            const TimeDomainNiReport td =
                time_domain_ni_check(sys, *cert->storage, random_smooth_signal(sys.inputs(), 1.0, rng), 20.0, 1e-3);
            time_ok = td.max_violation <= kLtiTimeTol && td.max_integral_violation <= kLtiTimeTol;
        }
        note(freq && cert && cert->lambda_max_storage_lmi <= kLmiTol && time_ok, name);
    }
    {
        // pole at the origin: storage-form certificate, semidefinite allowed
        const StateSpace r = ni_from_pr(pr_example());
        const bool freq = ni_frequency_test(r, grid, 1e-9, OriginPolePolicy::FreeMotion).is_ni;
        const auto cert = search_storage_certificate(r, true);
        bool time_ok = false;
        if (cert) {
            const TimeDomainNiReport td =
                time_domain_ni_check(r, cert->X, random_smooth_signal(1, 1.0, rng), 20.0, 1e-3);
            time_ok = td.max_violation <= kLtiTimeTol && td.max_integral_violation <= kLtiTimeTol;
        }
        note(freq && cert && cert->lambda_max_lmi <= kLmiTol && time_ok, "pr_divided_by_s");
    }
    {
        const StateSpace neg = StateSpace::siso(-1, 1, -1);
        note(!ni_frequency_test(neg, grid).is_ni && !search_certificate(neg), "negated_lag");
    }
    double worst_rt = 0.0;
    for (const StateSpace& g : {pr_example(), second_order(1.0, 2.0), StateSpace::siso(-2.0, 1.5, 0.8, 0.3)}) {
        const StateSpace forth = pr_from_ni(ni_from_pr(g));
        for (double w : grid.omegas) {
            const Complex target = freq_response(g, w)(0, 0);
            worst_rt = std::max(worst_rt, std::abs(freq_response(forth, w)(0, 0) - target) / std::abs(target));
        }
    }
    return {disagreements == 0 && worst_rt <= kRoundTripTol,
            std::to_string(checked) + " systems, " + std::to_string(disagreements) + " disagreements" +
                (failed.empty() ? "" : " (" + failed + " )") + ", round-trip relative error " + fmt(worst_rt)};
}

Outcome block_matrix_property() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pos(0.1, 3.0);
    std::uniform_real_distribution<double> feed(0.0, 1.0);
    std::bernoulli_distribution flip(0.5);
    int compared = 0, disagreements = 0, pd_count = 0;
    while (compared < 100) {
        const double s1 = flip(rng) ? 1.0 : -1.0, s2 = flip(rng) ? 1.0 : -1.0;
        const double a1 = -pos(rng), b1 = s1 * pos(rng), c1 = s1 * pos(rng);
        const double a2 = -pos(rng), b2 = s2 * pos(rng), c2 = s2 * pos(rng);
        const StateSpace g = StateSpace::siso(a1, b1, c1);
        const StateSpace h = StateSpace::siso(a2, b2, c2, feed(rng));
        const NiCertificate cg = verify_certificate(g, Matrix::Constant(1, 1, -b1 / (a1 * c1)));
        const NiCertificate ch = verify_certificate(h, Matrix::Constant(1, 1, -b2 / (a2 * c2)));
        if (!cg.valid || !ch.valid) return {false, "hand certificate rejected"};
        const DcGainReport dc = dc_gain_condition(g, h);
        if (std::abs(dc.lambda_max - 1.0) < 1e-6) continue;
        const Matrix m = block_lyapunov_matrix(g, *cg.storage, h, *ch.storage);
        const bool pd = sym_eig(m).eigenvalues.minCoeff() > 0.0;
        pd_count += pd ? 1 : 0;
        if (pd != dc.satisfied) ++disagreements;
        ++compared;
    }
    return {disagreements == 0, "100 pairs (" + std::to_string(pd_count) + " PD), " + std::to_string(disagreements) +
                                    " disagreements"};
}

Outcome contraction() {
    const FeedbackSystem fb = msd_irc(kIrcPhi);
    const SectorScan scan = sector_scan(fb, scalar_grid(-16.0, 16.0, 401));
    IrcController irc;
    const LowerBoundIteration r = lower_bound_iteration(fb, make_msd().storage, irc.storage(), vec({1.0, 0.0}),
                                                        vec({0.5}), scan.gamma_hat, 15);
    const double bound = std::sqrt(scan.gamma_hat) + kContractionSlack;
    double worst = 0.0;
    for (double q : r.contraction_ratios) worst = std::max(worst, q);
    return {scan.satisfied && r.contraction_ratios.size() >= kMinContractionSteps && worst <= bound,
            std::to_string(r.contraction_ratios.size()) + " steps, worst ratio " + fmt(worst) + " vs sqrt(gamma_hat) " +
                fmt(std::sqrt(scan.gamma_hat))};
}

Outcome free_motion_audits() {
    const Box box = Box::cube(2, -2.0, 2.0);
    const FreeMotionConditions cubic = check_free_motion_conditions(make_cubic_damped_cascade(), box);
    const FreeMotionConditions pr2 = check_free_motion_conditions(make_pr2_cascade(), box);
    bool values = true;
    for (const FreeMotionConditions* c : {&cubic, &pr2}) {
        values = values && std::abs(c->cond1.constant_value - 1.0) <= kConditionTol &&
                 std::abs(c->cond2.max_value + 1.0) <= kConditionTol && !c->cond3.holds &&
                 !c->cond3.zero_locus_samples.empty();
    }
    double locus_gap = 0.0;
    for (const Vector& e : cubic.cond3.zero_locus_samples) locus_gap = std::max(locus_gap, std::abs(e(1) + std::pow(e(0), 3)));
    for (const Vector& e : pr2.cond3.zero_locus_samples) locus_gap = std::max(locus_gap, std::abs(e(1)));

    const CascadeIntegratorSystem first = make_first_order_cascade();
    const StoragePositivityReport pos = audit_storage_positivity(first, free_motion_storage(first).expanded, box, 4000);
    double line_gap = 0.0;
    for (const Vector& z : pos.semidefinite_directions) line_gap = std::max(line_gap, std::abs(z(1) - z(0)));
    const bool zero_line = !pos.positive_definite_evidence && !pos.semidefinite_directions.empty() &&
                           pos.min_off_origin < kZeroLineTol && pos.min_off_zero_set > 0.0 && line_gap <= kLocusTol;
    return {values && locus_gap <= kLocusTol && zero_line,
            "cond1 " + fmt(cubic.cond1.constant_value) + "/" + fmt(pr2.cond1.constant_value) + ", cond2 " +
                fmt(cubic.cond2.max_value) + "/" + fmt(pr2.cond2.max_value) + ", locus points " +
                std::to_string(cubic.cond3.zero_locus_samples.size()) + "/" +
                std::to_string(pr2.cond3.zero_locus_samples.size()) + " off by " + fmt(locus_gap) +
                ", zero line min " + fmt(pos.min_off_origin) + ", off-line min " + fmt(pos.min_off_zero_set)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "niaudit_acceptance_determinism";
    fs::remove_all(root);
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + NIAUDIT_CLI_PATH + "\" msd-demo --seed 42 --ics 4 --samples 1000 --T 20 --out \"" +
                                (root / run).string() + "\" > /dev/null";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) return {false, "cli exited with status " + std::to_string(rc)};
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        if (entry.path().extension() != ".csv") continue;
        const fs::path other = root / "b" / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
            return {false, entry.path().filename().string() + " differs"};
        }
        ++compared;
    }
    return {compared > 0, std::to_string(compared) + " csv files byte-identical"};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{
        cardano_vs_newton, sector_plot, closed_loop_demo, dissipativity_suites, lti_cross_validation,
        block_matrix_property, contraction, free_motion_audits, determinism,
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += o.passed ? 0 : 1;
        std::cout << "criterion " << (i + 1) << ' ' << (o.passed ? "PASS" : "FAIL") << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
