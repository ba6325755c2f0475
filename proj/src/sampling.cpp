#include "niaudit/sampling.hpp"

#include "niaudit/errors.hpp"

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace niaudit {

Box Box::cube(Eigen::Index dim, double lo, double hi) {
    Box b{Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
    b.validate();
    return b;
}

bool Box::contains(const Vector& x) const {
    return x.size() == dim() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

void Box::validate() const {
    if (lo.size() != hi.size() || lo.size() == 0) throw Error(ErrorKind::DimensionMismatch, "box bounds differ in size");
    if (!all_finite(lo) || !all_finite(hi) || !(hi.array() > lo.array()).all()) {
        throw Error(ErrorKind::InvalidArgument, "box needs finite lo < hi in every coordinate");
    }
}

std::vector<Vector> sobol_points(const Box& box, std::size_t n) {
    box.validate();
    const auto dim = static_cast<std::size_t>(box.dim());
    boost::random::sobol engine(dim);
    const double scale = std::ldexp(1.0, -64);
    std::vector<Vector> out;
    out.reserve(n);
    const Vector width = box.hi - box.lo;
    for (std::size_t i = 0; i < n; ++i) {
        Vector x(box.dim());
        for (std::size_t j = 0; j < dim; ++j) {
            const double unit = static_cast<double>(engine()) * scale;
            x(static_cast<Eigen::Index>(j)) = box.lo(static_cast<Eigen::Index>(j)) + unit * width(static_cast<Eigen::Index>(j));
        }
        out.push_back(std::move(x));
    }
    return out;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    Vector g(x.size());
    Vector xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return g;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
    const Vector f0 = f(x);
    Matrix jac(f0.size(), x.size());
    Vector xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        jac.col(i) = (f(xp) - f(xm)) / (2.0 * h);
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return jac;
}

namespace {

// Projected gradient descent with backtracking; the feasible set is the box
// minus the excluded ball.
Vector descend(const std::function<double(const Vector&)>& f, const Box& box, double exclude_radius, Vector x,
               std::size_t& evaluated) {
    auto admissible = [&](const Vector& y) { return y.norm() > exclude_radius; };
    double fx = f(x);
    double step = 0.1 * (box.hi - box.lo).maxCoeff();
    for (int it = 0; it < 200 && step > 1e-12; ++it) {
        const Vector g = fd_gradient(f, x, 1e-7);
        evaluated += 2 * static_cast<std::size_t>(x.size());
        const double gn = g.norm();
        if (!(gn > 0.0) || !std::isfinite(gn)) break;
        bool moved = false;
        while (step > 1e-12) {
            const Vector y = box.clamp(x - step * g / gn);
            if (admissible(y)) {
                const double fy = f(y);
                ++evaluated;
                if (fy < fx) {
                    x = y;
                    fx = fy;
                    moved = true;
                    step *= 1.5;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return x;
}

}  // namespace

MinimumProbe probe_minimum(const std::function<double(const Vector&)>& f, const Box& box, std::size_t n_samples,
                           double exclude_radius, std::size_t polish_starts) {
    const std::vector<Vector> points = sobol_points(box, n_samples);
    std::vector<std::pair<double, std::size_t>> values;
    values.reserve(points.size());
    MinimumProbe probe;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].norm() <= exclude_radius) continue;
        values.emplace_back(f(points[i]), i);
        ++probe.evaluated;
    }
    if (values.empty()) throw Error(ErrorKind::InvalidArgument, "no samples outside the excluded ball");
    const std::size_t k = std::min(polish_starts, values.size());
    std::partial_sort(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    probe.min_value = values.front().first;
    probe.argmin = points[values.front().second];
    for (std::size_t i = 0; i < k; ++i) {
        const Vector x = descend(f, box, exclude_radius, points[values[i].second], probe.evaluated);
        const double fx = f(x);
        if (fx < probe.min_value) {
            probe.min_value = fx;
            probe.argmin = x;
        }
    }
    return probe;
}

}  // namespace niaudit
