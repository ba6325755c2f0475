#include "niaudit/builtin_systems.hpp"
#include "niaudit/errors.hpp"
#include "niaudit/free_motion.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace niaudit;
using Catch::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// oracle for the first-order cascade storage: 1/2 (c a^2 / b) eta^2 + c a eta xi + 1/2 c b xi^2
double first_order_storage(double a, double b, double c, double eta, double xi) {
    return 0.5 * c * a * a / b * eta * eta + c * a * eta * xi + 0.5 * c * b * xi * xi;
}

}  // namespace

TEST_CASE("cascade wiring and validation") {
    const CascadeIntegratorSystem s = make_cubic_damped_cascade();
    const NonlinearSystem ns = s.to_nonlinear();
    CHECK(ns.n == 3);
    CHECK(ns.m == 1);
    const Vector dx = ns.dynamics(vec({1.0, 2.0, 3.0}), vec({0.5}));
    CHECK(dx(0) == 2.0);
    CHECK(dx(1) == Approx(-1.0 - 2.0 + 3.0));
    CHECK(dx(2) == 0.5);
    CHECK(ns.output(vec({1.0, 2.0, 3.0}))(0) == 2.0);

    CascadeIntegratorSystem shifted = s;
    shifted.f = [](const Vector& eta) -> Vector { return eta + Vector::Ones(2); };
    CHECK_THROWS_AS(shifted.validate(), Error);
}

TEST_CASE("finite-difference fallbacks match analytic gradients") {
    CascadeIntegratorSystem analytic = make_cubic_damped_cascade();
    CascadeIntegratorSystem numeric = analytic;
    numeric.grad_h = nullptr;
    numeric.grad_hf = nullptr;
    numeric.grad_hg = nullptr;
    const Vector eta = vec({0.7, -1.2});
    CHECK((analytic.grad_hf_at(eta) - numeric.grad_hf_at(eta)).norm() < 1e-6);
    CHECK(numeric.hg(eta) == Approx(1.0).margin(1e-9));
}

TEST_CASE("conditions for the cubic damped cascade") {
    const FreeMotionConditions r = check_free_motion_conditions(make_cubic_damped_cascade(), Box::cube(2, -2.0, 2.0));
    CHECK(r.cond1.constant_value == Approx(1.0).margin(1e-12));
    CHECK(r.cond1.positive);
    CHECK(r.cond2.max_value == Approx(-1.0).margin(1e-12));
    CHECK(r.cond2.holds);
    CHECK_FALSE(r.cond3.holds);
    CHECK_FALSE(r.overall);
    REQUIRE_FALSE(r.cond3.zero_locus_samples.empty());
    // every reported point lies on eta2 = -eta1^3 away from the origin
    for (const Vector& eta : r.cond3.zero_locus_samples) {
        CHECK(std::abs(eta(1) + eta(0) * eta(0) * eta(0)) < 1e-9);
        CHECK(eta.norm() > 1e-3);
    }
    // hand-evaluated point of the locus
    CHECK(make_cubic_damped_cascade().hf(vec({1.0, -1.0})) == 0.0);

    std::ostringstream csv;
    r.write_zero_locus_csv(csv, make_cubic_damped_cascade());
    CHECK(csv.str().rfind("eta_1,eta_2,hf\n", 0) == 0);
}

TEST_CASE("conditions for the second-order PR cascade") {
    const FreeMotionConditions r = check_free_motion_conditions(make_pr2_cascade(), Box::cube(2, -2.0, 2.0));
    CHECK(r.cond1.constant_value == Approx(1.0).margin(1e-12));
    CHECK(r.cond1.positive);
    CHECK(r.cond2.max_value == Approx(-1.0).margin(1e-12));
    CHECK_FALSE(r.cond3.holds);
    REQUIRE_FALSE(r.cond3.zero_locus_samples.empty());
    for (const Vector& eta : r.cond3.zero_locus_samples) {
        CHECK(std::abs(eta(1)) < 1e-9);
        CHECK(std::abs(eta(0)) > 1e-3);
    }
}

TEST_CASE("first-order cascade passes all conditions for random stable parameters") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mag(0.1, 3.0);
    std::bernoulli_distribution flip(0.5);
    for (int k = 0; k < 50; ++k) {
        const double a = -mag(rng);
        const double sign = flip(rng) ? 1.0 : -1.0;
        const double b = sign * mag(rng), c = sign * mag(rng);
        const FreeMotionConditions r = check_free_motion_conditions(make_first_order_cascade(a, b, c),
                                                                    Box::cube(1, -2.0, 2.0), 500);
        CHECK(r.overall);
        CHECK(r.cond1.constant_value == Approx(c * b).epsilon(1e-12));
        CHECK(r.cond2.max_value == Approx(c * c * a).epsilon(1e-12));
    }
}

TEST_CASE("unit first-order cascade condition values") {
    const FreeMotionConditions r = check_free_motion_conditions(make_first_order_cascade(), Box::cube(1, -2.0, 2.0));
    CHECK(r.cond1.constant_value == 1.0);
    CHECK(r.cond2.max_value == -1.0);
    CHECK(r.cond3.min_abs_off_origin > 1e-3 - 1e-12);
    CHECK(r.overall);
}

TEST_CASE("storage matches the closed form and the factored form") {
    const double a = -1.0, b = 1.0, c = 1.0;
    const FreeMotionStorage st = free_motion_storage(make_first_order_cascade(a, b, c));
    CHECK(st.hg == 1.0);
    CHECK(st.expanded.value(vec({0.0, 0.0})) == 0.0);
    CHECK(st.expanded.value(vec({1.0, 0.0})) == Approx(0.5));
    CHECK(st.expanded.value(vec({1.0, 1.0})) == Approx(0.0).margin(1e-15));
    CHECK(st.expanded.value(vec({0.3, -0.8})) == Approx(first_order_storage(a, b, c, 0.3, -0.8)).epsilon(1e-14));

    for (const CascadeIntegratorSystem& sys : {make_cubic_damped_cascade(), make_pr2_cascade()}) {
        const FreeMotionStorage s = free_motion_storage(sys);
        const std::vector<Vector> pts = sobol_points(Box::cube(3, -2.0, 2.0), 10000);
        double worst = 0.0, worst_grad = 0.0;
        for (const Vector& p : pts) {
            worst = std::max(worst, std::abs(s.expanded.value(p) - s.factored.value(p)));
        }
        for (std::size_t k = 0; k < 200; ++k) {
            worst_grad = std::max(worst_grad, (s.expanded.gradient_at(pts[k]) - fd_gradient(s.expanded.value, pts[k])).norm());
        }
        CHECK(worst < 1e-12 * 100.0);  // values reach ~50 on the box
        CHECK(worst_grad < 1e-6);
    }
}

TEST_CASE("storage vanishes on the zero line") {
    const CascadeIntegratorSystem sys = make_cubic_damped_cascade();
    const FreeMotionStorage s = free_motion_storage(sys);
    const Vector eta = vec({0.6, 0.4});
    const double xi = -sys.hf(eta) / sys.hg(eta);
    CHECK(std::abs(s.expanded.value(vec({eta(0), eta(1), xi}))) < 1e-15);
}

TEST_CASE("storage refuses a vanishing grad_h.g") {
    CascadeIntegratorSystem s;
    s.n = 2;
    s.name = "velocity_free";
    s.f = [](const Vector& eta) -> Vector { return vec({eta(1), -eta(1)}); };
    s.g = [](const Vector&) -> Vector { return vec({0.0, 1.0}); };
    s.h = [](const Vector& eta) { return eta(0); };
    try {
        (void)free_motion_storage(s);
        FAIL("expected Cond1Violated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Cond1Violated);
    }
}

TEST_CASE("residual equals dV/dt - y' u from the chain rule") {
    for (const CascadeIntegratorSystem& sys : {make_first_order_cascade(-0.7, 2.0, 0.5), make_cubic_damped_cascade(),
                                               make_pr2_cascade()}) {
        const FreeMotionStorage s = free_motion_storage(sys);
        const NonlinearSystem ns = sys.to_nonlinear();
        for (const Vector& p : sobol_points(Box::cube(ns.n, -1.5, 1.5), 200)) {
            const Vector u = vec({0.37});
            const Vector dx = ns.dynamics(p, u);
            const double vdot = fd_gradient(s.expanded.value, p).dot(dx);
            const double ydot = (ns.output_jacobian_at(p) * dx)(0);
            CHECK(free_motion_residual(sys, p.head(sys.n), p(sys.n)) == Approx(vdot - ydot * u(0)).margin(1e-6));
        }
    }
}

TEST_CASE("first-order cascade satisfies the dissipation inequality") {
    const CascadeIntegratorSystem sys = make_first_order_cascade();
    const FreeMotionStorage s = free_motion_storage(sys);
    const FreeMotionNniReport r = verify_free_motion_nni(sys, s.expanded, {sine_signal(1.0, 1.0)}, 20.0, 1e-3,
                                                         Vector(), Box::cube(2, -2.0, 2.0), 4000);
    CHECK(r.passed);
    CHECK(r.max_violation <= 1e-5);
    CHECK(r.residual.positive == 0);
    CHECK(r.residual.max_value <= 1e-12);
}

TEST_CASE("zero input from the origin stays at zero") {
    const CascadeIntegratorSystem sys = make_first_order_cascade();
    const FreeMotionStorage s = free_motion_storage(sys);
    const Trajectory traj = simulate(sys.to_nonlinear(), Vector::Zero(2), zero_signal(1), 5.0, 1e-2);
    for (const Vector& x : traj.states) CHECK(x.norm() == 0.0);
    const FreeMotionNniReport r =
        verify_free_motion_nni(sys, s.expanded, {zero_signal(1)}, 5.0, 1e-2, Vector(), Box::cube(2, -1.0, 1.0), 100);
    CHECK(r.max_violation == 0.0);
}

TEST_CASE("cascades failing the third condition violate the inequality somewhere") {
    for (const CascadeIntegratorSystem& sys : {make_cubic_damped_cascade(), make_pr2_cascade()}) {
        const FreeMotionStorage s = free_motion_storage(sys);
        std::mt19937_64 rng(5);
        std::vector<Signal> inputs;
        for (int k = 0; k < 3; ++k) inputs.push_back(random_smooth_signal(1, 1.0, rng));
        const FreeMotionNniReport r = verify_free_motion_nni(sys, s.expanded, inputs, 10.0, 1e-3, Vector(),
                                                             Box::cube(3, -2.0, 2.0), 4000);
        INFO(sys.name);
        CHECK(r.residual.positive > 0);
        CHECK(r.residual.max_value > 1e-3);
        CHECK(r.residual.worst_point.size() == 3);
    }
}

TEST_CASE("storage is only semidefinite for the first-order cascade") {
    const CascadeIntegratorSystem sys = make_first_order_cascade();
    const FreeMotionStorage s = free_motion_storage(sys);
    const StoragePositivityReport r = audit_storage_positivity(sys, s.expanded, Box::cube(2, -2.0, 2.0), 4000);
    CHECK_FALSE(r.positive_definite_evidence);
    CHECK(r.min_off_origin < 1e-6);
    CHECK(r.min_off_origin >= -1e-15);
    CHECK(r.min_sampled >= 0.0);
    CHECK(r.min_off_zero_set > 0.0);
    REQUIRE_FALSE(r.semidefinite_directions.empty());
    for (const Vector& z : r.semidefinite_directions) CHECK(z(1) == Approx(z(0)).margin(1e-14));
    CHECK(r.max_abs_on_zero_set < 1e-14);

    // a small definite perturbation removes the zero line
    StorageFunction perturbed;
    perturbed.value = [v = s.expanded](const Vector& x) { return v.value(x) + 1e-3 * x.squaredNorm(); };
    const StoragePositivityReport p = audit_storage_positivity(sys, perturbed, Box::cube(2, -2.0, 2.0), 4000);
    CHECK(p.positive_definite_evidence);
}

TEST_CASE("zero line of a general linear cascade") {
    // hf = c a eta, so the zero set is xi = -c a eta / (c b)
    const CascadeIntegratorSystem sys = make_first_order_cascade(-2.0, 0.5, 3.0);
    const FreeMotionStorage s = free_motion_storage(sys);
    const StoragePositivityReport r = audit_storage_positivity(sys, s.expanded, Box::cube(2, -2.0, 2.0), 1000);
    for (const Vector& z : r.semidefinite_directions) CHECK(z(1) == Approx(4.0 * z(0)).margin(1e-13));
}

TEST_CASE("closed loop with an integrator plant") {
    const CascadeIntegratorSystem plant = make_first_order_cascade();
    const StorageFunction v1 = free_motion_storage(plant).expanded;
    const StorageFunction v2 = quadratic_storage(Matrix::Constant(1, 1, 2.0));
    const auto ics = random_initial_states(3, 10, -1.0, 1.0, 42);
    ClosedLoopOptions opts;
    opts.horizon = 60.0;

    // positive IRC feedback: s^3 + 3 s^2 + 2 s - 1 has a root in the right half plane
    const NonlinearSystem irc = to_nonlinear(StateSpace::siso(-2.0, 1.0, 1.0), "irc");
    const ClosedLoopReport bad = free_motion_closed_loop(plant, irc, v1, v2, ics, opts);
    CHECK_FALSE(bad.all_converged);

    // sign-reversed IRC: s^3 + 3 s^2 + 2 s + 1 is Hurwitz
    const NonlinearSystem neg = to_nonlinear(StateSpace::siso(-2.0, 1.0, -1.0), "irc_negated");
    const ClosedLoopReport good = free_motion_closed_loop(plant, neg, v1, v2, ics, opts);
    CHECK(good.all_converged);

    const ClosedLoopReport origin = free_motion_closed_loop(plant, neg, v1, v2, {Vector::Zero(3)}, opts);
    CHECK(origin.runs[0].final_norm == 0.0);
}
