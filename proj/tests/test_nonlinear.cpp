#include "niaudit/builtin_systems.hpp"
#include "niaudit/errors.hpp"
#include "niaudit/nonlinear.hpp"
#include "niaudit/sampling.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace niaudit;
using Catch::Approx;

namespace {

NonlinearSystem scalar_system(std::function<double(double)> f, double input_gain = 1.0) {
    NonlinearSystem s;
    s.n = 1;
    s.m = 1;
    s.name = "scalar";
    s.dynamics = [f, input_gain](const Vector& x, const Vector& u) -> Vector {
        return Vector::Constant(1, f(x(0)) + input_gain * u(0));
    };
    s.output = [](const Vector& x) -> Vector { return x; };
    s.output_jacobian = [](const Vector&) -> Matrix { return Matrix::Ones(1, 1); };
    return s;
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

std::vector<SystemWithStorage> builtins() {
    return {make_msd(), make_harmonic_oscillator(), make_hamiltonian_pendulum(), make_euler_lagrange_pendulum2()};
}

}  // namespace

TEST_CASE("RK4 reproduces exponential decay") {
    const Trajectory t = simulate(scalar_system([](double x) { return -x; }), Vector::Ones(1), zero_signal(1), 1.0, 1e-3);
    CHECK(std::abs(t.states.back()(0) - std::exp(-1.0)) <= 1e-8);
    CHECK(t.times.back() == Approx(1.0));
    CHECK(t.size() == 1001);
}

TEST_CASE("equilibrium trajectory stays at zero") {
    const SystemWithStorage msd = make_msd();
    const Trajectory t = simulate(msd.system.to_nonlinear(), Vector::Zero(2), zero_signal(1), 5.0, 1e-2);
    for (const Vector& x : t.states) CHECK(x.norm() == 0.0);
}

TEST_CASE("RK4 is fourth order") {
    const NonlinearSystem sys = scalar_system([](double x) { return -x; });
    auto error = [&](double dt) {
        return std::abs(simulate(sys, Vector::Ones(1), zero_signal(1), 1.0, dt).states.back()(0) - std::exp(-1.0));
    };
    const double ratio = error(0.1) / error(0.05);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("blow-up is reported with its time") {
    const NonlinearSystem sys = scalar_system([](double x) { return x * x; });
    try {
        (void)simulate(sys, Vector::Ones(1), zero_signal(1), 5.0, 1e-3);
        FAIL("expected blow-up");
    } catch (const BlowUp& e) {
        // x(t) = 1 / (1 - t) escapes at t = 1
        CHECK(e.time() > 0.9);
        CHECK(e.time() < 1.1);
    }
}

TEST_CASE("mass-spring-damper constructor") {
    const SystemWithStorage msd = make_msd();
    CHECK(msd.storage.value(Vector::Zero(2)) == 0.0);
    CHECK(msd.storage.value(vec2(1, 0)) == Approx(1.5));
    const Vector f = msd.system.to_nonlinear().dynamics(vec2(1, 0), Vector::Zero(1));
    CHECK(f(0) == 0.0);
    CHECK(f(1) == Approx(-4.0));
    CHECK_THROWS_AS(make_msd(0.0, 1.0, 2.0), Error);
    CHECK_THROWS_AS(make_msd(1.0, -1.0, 2.0), Error);
    msd.system.to_nonlinear().validate();
    CHECK(std::isfinite(lipschitz_estimate(msd.system.to_nonlinear(), Box::cube(2, -2, 2), 500)));
}

TEST_CASE("free mass-spring-damper loses energy") {
    const SystemWithStorage msd = make_msd();
    const Trajectory t = simulate(msd.system.to_nonlinear(), vec2(1, 0), zero_signal(1), 20.0, 1e-3);
    double previous = msd.storage.value(t.states.front());
    for (const Vector& x : t.states) {
        const double v = msd.storage.value(x);
        CHECK(v <= previous + 1e-12);
        previous = v;
    }
    CHECK(previous < 1e-3);
}

TEST_CASE("built-in systems satisfy the dissipation inequality along random inputs") {
    std::mt19937_64 rng(42);
    for (const SystemWithStorage& s : builtins()) {
        const NonlinearSystem sys = s.system.to_nonlinear();
        sys.validate();
        for (int trial = 0; trial < 10; ++trial) {
            const Trajectory t = simulate(sys, Vector::Zero(sys.n), random_smooth_signal(sys.m, 1.0, rng), 20.0, 1e-3);
            const DissipativityReport r = dissipativity_check(sys, s.storage, t);
            INFO(sys.name << " trial " << trial);
            CHECK(r.max_violation <= 1e-5);
            CHECK(r.passed);
        }
    }
}

TEST_CASE("output derivative by finite differences when no Jacobian is given") {
    std::mt19937_64 rng(1);
    SystemWithStorage msd = make_msd();
    NonlinearSystem sys = msd.system.to_nonlinear();
    sys.output_jacobian = nullptr;
    const Trajectory t = simulate(sys, vec2(0.5, 0), random_smooth_signal(1, 1.0, rng), 20.0, 1e-3);
    CHECK(dissipativity_check(sys, msd.storage, t).max_violation <= 1e-5);
    StorageFunction numeric{msd.storage.value, nullptr};
    CHECK(dissipativity_check(sys, numeric, t).max_violation <= 1e-5);
}

TEST_CASE("antistable system is refuted") {
    const NonlinearSystem sys = scalar_system([](double x) { return x; });
    const StorageFunction v{[](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) -> Vector { return x; }};
    const Trajectory t = simulate(sys, Vector::Ones(1), zero_signal(1), 1.0, 1e-3);
    const DissipativityReport r = dissipativity_check(sys, v, t);
    CHECK(r.max_violation > 0.5);
    CHECK_FALSE(r.passed);
}

TEST_CASE("pointwise inequality") {
    const SystemWithStorage msd = make_msd();
    const PointwiseReport r = nni_pointwise_check(msd.system, msd.storage, Box::cube(2, -2, 2), Box::cube(1, -2, 2), 10000);
    CHECK(r.passed);
    CHECK(r.samples == 10000);

    for (const SystemWithStorage& h : {make_harmonic_oscillator(), make_hamiltonian_pendulum()}) {
        const PointwiseReport e = nni_pointwise_check(h.system, h.storage, Box::cube(2, -2, 2), Box::cube(1, -2, 2), 2000);
        CHECK(e.max_abs_gap <= 1e-9);
    }

    AffineSystem flipped = msd.system;
    flipped.input_map = [g = msd.system.input_map](const Vector& x) -> Matrix { return -g(x); };
    CHECK_FALSE(nni_pointwise_check(flipped, msd.storage, Box::cube(2, -2, 2), Box::cube(1, -2, 2), 1000).passed);
}

TEST_CASE("Hamiltonian energy is conserved without input") {
    const SystemWithStorage p = make_hamiltonian_pendulum();
    const Trajectory t = simulate(p.system.to_nonlinear(), vec2(1.0, 0.3), zero_signal(1), 20.0, 1e-3);
    const double h0 = p.storage.value(t.states.front());
    for (const Vector& x : t.states) CHECK(std::abs(p.storage.value(x) - h0) <= 1e-9);
}

TEST_CASE("two-link arm structure") {
    const TwoLinkArm arm;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const Vector q = vec2(u(rng), u(rng)), qd = vec2(u(rng), u(rng));
        const Matrix s = arm.mass_matrix_rate_fd(q, qd) - 2.0 * arm.coriolis(q, qd);
        CHECK((s + s.transpose()).norm() <= 1e-9);
        CHECK(definiteness(arm.mass_matrix(q)) == Definiteness::PD);
        // potential gradient against central differences
        const Vector fd = fd_gradient([&](const Vector& x) { return arm.potential(x); }, q);
        CHECK((fd - arm.gravity_torque(q)).norm() <= 1e-7);
    }
    const SystemWithStorage el = make_euler_lagrange_pendulum2();
    CHECK(el.system.to_nonlinear().dynamics(Vector::Zero(4), Vector::Zero(2)).norm() == 0.0);
    CHECK(el.storage.value(Vector::Zero(4)) == 0.0);
    const MinimumProbe probe = probe_minimum(el.storage.value, Box::cube(4, -1, 1), 2000, 1e-3);
    CHECK(probe.min_value > 0.0);
}

TEST_CASE("zero-input convergence probe") {
    const NonlinearSystem cubic = scalar_system([](double x) { return -x * x * x; });
    std::vector<Vector> ics;
    for (double v : {-2.0, -1.0, 1.0, 2.0}) ics.push_back(Vector::Constant(1, v));
    CHECK(gas_probe(cubic, ics, 200.0, 0.1).all_converged);

    const NonlinearSystem osc = make_harmonic_oscillator().system.to_nonlinear();
    CHECK_FALSE(gas_probe(osc, {vec2(1, 0)}, 50.0, 0.1).all_converged);

    std::vector<Vector> box_ics = sobol_points(Box::cube(2, -1, 1), 20);
    const GasProbeReport msd = gas_probe(make_msd().system.to_nonlinear(), box_ics, 60.0, 1e-3);
    CHECK(msd.all_converged);
    CHECK(msd.final_norms.size() == 20);
}

TEST_CASE("zero-state observability spot check") {
    const std::vector<Vector> ics = sobol_points(Box::cube(2, -1, 1), 10);
    CHECK(zero_state_observability_probe(make_msd().system.to_nonlinear(), ics, 10.0).passed);

    NonlinearSystem hidden;
    hidden.n = 2;
    hidden.m = 1;
    hidden.name = "hidden";
    hidden.dynamics = [](const Vector& x, const Vector& u) -> Vector { return vec2(-x(0) + u(0), -x(1)); };
    hidden.output = [](const Vector& x) -> Vector { return x.head(1); };
    CHECK_FALSE(zero_state_observability_probe(hidden, {vec2(0, 1)}, 10.0).passed);
}

TEST_CASE("parallel connection of dissipative systems") {
    const SystemWithStorage a = make_msd();
    const SystemWithStorage b = make_hamiltonian_pendulum();
    const NonlinearSystem sys = parallel(a.system.to_nonlinear(), b.system.to_nonlinear());
    const StorageFunction v = sum_storage(a.storage, 2, b.storage, 2);
    std::mt19937_64 rng(3);
    const Trajectory t = simulate(sys, Vector::Zero(4), random_smooth_signal(1, 1.0, rng), 20.0, 1e-3);
    CHECK(dissipativity_check(sys, v, t).max_violation <= 1e-5);
    const AffineSystem affine = parallel(a.system, b.system);
    CHECK(nni_pointwise_check(affine, v, Box::cube(4, -2, 2), Box::cube(1, -2, 2), 2000).passed);
}

TEST_CASE("Sobol points and minimum probe") {
    const Box box = Box::cube(3, -1, 1);
    const std::vector<Vector> pts = sobol_points(box, 64);
    CHECK(pts.size() == 64);
    for (const Vector& p : pts) CHECK(box.contains(p));
    CHECK(pts.front().norm() < 1e-12);  // centre of the box after the skipped corner
    CHECK(sobol_points(box, 64) == pts);

    const auto f = [](const Vector& x) { return (x - Vector::Constant(3, 0.3)).squaredNorm() + 1.0; };
    const MinimumProbe probe = probe_minimum(f, box, 256, 0.0);
    CHECK(probe.min_value == Approx(1.0).margin(1e-8));
    CHECK((probe.argmin - Vector::Constant(3, 0.3)).norm() <= 1e-3);
}

TEST_CASE("trajectory CSV layout") {
    const Trajectory t = simulate(make_msd().system.to_nonlinear(), vec2(1, 0), zero_signal(1), 0.02, 0.01);
    std::ostringstream os;
    t.write_csv(os);
    const std::string csv = os.str();
    CHECK(csv.rfind("t,x1,x2,u1,y1\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
