#include "niaudit/ode.hpp"

#include "niaudit/errors.hpp"

#include <cmath>
#include <numbers>

namespace niaudit {

Signal zero_signal(Eigen::Index m) {
    return [m](double) { return Vector::Zero(m).eval(); };
}

Signal constant_signal(const Vector& value) {
    return [value](double) { return value; };
}

Signal sine_signal(const Vector& amplitude, double omega, const Vector& phase) {
    if (amplitude.size() != phase.size()) {
        throw Error(ErrorKind::DimensionMismatch, "sine_signal: amplitude and phase sizes differ");
    }
    return [amplitude, omega, phase](double t) {
        Vector u(amplitude.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = amplitude(i) * std::sin(omega * t + phase(i));
        return u;
    };
}

Signal sine_signal(double amplitude, double omega) {
    return sine_signal(Vector::Constant(1, amplitude), omega, Vector::Zero(1));
}

Signal random_smooth_signal(Eigen::Index m, double bound, std::mt19937_64& rng) {
    constexpr int terms = 3;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> freq(0.1, 3.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    Matrix amp(m, terms), om(m, terms), ph(m, terms);
    for (Eigen::Index i = 0; i < m; ++i) {
        double total = 0.0;
        for (int j = 0; j < terms; ++j) {
            amp(i, j) = 0.2 + unit(rng);
            om(i, j) = freq(rng);
            ph(i, j) = phase(rng);
            total += amp(i, j);
        }
        amp.row(i) *= bound / total;
    }
    return [amp, om, ph](double t) {
        Vector u = Vector::Zero(amp.rows());
        for (Eigen::Index i = 0; i < amp.rows(); ++i) {
            for (Eigen::Index j = 0; j < amp.cols(); ++j) u(i) += amp(i, j) * std::sin(om(i, j) * t + ph(i, j));
        }
        return u;
    };
}

std::size_t step_count(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon >= dt) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::InvalidArgument, "need horizon >= dt > 0");
    }
    return static_cast<std::size_t>(std::llround(horizon / dt));
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& values, double dt) {
    std::vector<double> out(values.size(), 0.0);
    for (std::size_t i = 1; i < values.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (values[i - 1] + values[i]);
    return out;
}

}  // namespace niaudit
