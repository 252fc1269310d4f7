#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "glvred/errors.hpp"
#include "glvred/io.hpp"
#include "glvred/model.hpp"

namespace glvred {

/// Uniform-grid solution samples with stored derivatives for dense output.
///
/// t[k] = k*dt; dx[k] is the RHS evaluated at x[k], which makes cubic
/// Hermite interpolation between nodes cheap and grid values exact.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<StateVector> x;
    std::vector<StateVector> dx;
    std::vector<std::string> labels;

    [[nodiscard]] std::size_t size() const { return t.size(); }
    [[nodiscard]] double t_end() const { return t.empty() ? 0.0 : t.back(); }
    [[nodiscard]] int dimension() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
};

namespace detail {

inline void check_state(const StateVector& x, double t, bool require_positive) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]))
            throw PositivityError("non-finite value for species " + std::to_string(i + 1) +
                                      " at t=" + double_to_string(t),
                                  t, static_cast<int>(i) + 1);
        if (require_positive && x[i] <= 0.0)
            throw PositivityError("concentration of species " + std::to_string(i + 1) +
                                      " reached " + double_to_string(x[i]) +
                                      " at t=" + double_to_string(t),
                                  t, static_cast<int>(i) + 1);
    }
}

inline long step_count(double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw ContractViolation("t_end and dt must be positive");
    if (dt > t_end) throw ContractViolation("dt exceeds t_end");
    long n = std::lround(t_end / dt);
    return n < 1 ? 1 : n;
}

}  // namespace detail

/// Classical fixed-step RK4 over t in [0, N*dt], N = round(t_end/dt).
/// `rhs` is called as rhs(t, x); every stage state is checked finite (and
/// positive when `require_positive`), aborting on the first breach.
template <class Rhs>
[[nodiscard]] Trajectory rk4_fixed(Rhs&& rhs, const StateVector& x0, double t_end, double dt,
                                   bool require_positive) {
    const long n_steps = detail::step_count(t_end, dt);
    const std::size_t dim = x0.size();

    Trajectory traj;
    traj.dt = dt;
    traj.t.reserve(n_steps + 1);
    traj.x.reserve(n_steps + 1);
    traj.dx.reserve(n_steps + 1);

    StateVector x = x0;
    detail::check_state(x, 0.0, require_positive);
    StateVector k1 = rhs(0.0, x);

    StateVector stage(dim), k2(dim), k3(dim), k4(dim), next(dim);
    for (long n = 0;; ++n) {
        const double t = static_cast<double>(n) * dt;
        traj.t.push_back(t);
        traj.x.push_back(x);
        traj.dx.push_back(k1);
        if (n == n_steps) break;

        const double h = dt;
        for (std::size_t i = 0; i < dim; ++i) stage[i] = x[i] + 0.5 * h * k1[i];
        detail::check_state(stage, t + 0.5 * h, require_positive);
        k2 = rhs(t + 0.5 * h, stage);

        for (std::size_t i = 0; i < dim; ++i) stage[i] = x[i] + 0.5 * h * k2[i];
        detail::check_state(stage, t + 0.5 * h, require_positive);
        k3 = rhs(t + 0.5 * h, stage);

        for (std::size_t i = 0; i < dim; ++i) stage[i] = x[i] + h * k3[i];
        detail::check_state(stage, t + h, require_positive);
        k4 = rhs(t + h, stage);

        for (std::size_t i = 0; i < dim; ++i)
            next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        detail::check_state(next, t + h, require_positive);
        x = next;
        k1 = rhs(t + h, x);
    }
    return traj;
}

/// Integrates the detailed GLV system from its initial state. Aborts (rather
/// than clamps) if any stage concentration leaves the positive orthant: the
/// reduction formulas divide by concentrations, so positivity is load-bearing.
[[nodiscard]] inline Trajectory integrate_fixed(const GlvModel& model, double t_end, double dt) {
    require_valid(model);
    auto traj = rk4_fixed([&model](double, const StateVector& x) { return rhs(model, x); },
                          model.initial_state, t_end, dt, /*require_positive=*/true);
    traj.labels.reserve(model.dimension());
    for (int i = 0; i < model.dimension(); ++i) traj.labels.push_back(model.label(i));
    return traj;
}

/// Dense output: cubic Hermite on the bracketing interval from stored states
/// and derivatives. Exact (bit-identical) at grid points.
[[nodiscard]] inline StateVector sample(const Trajectory& traj, double t) {
    if (traj.size() == 0) throw ContractViolation("sample: empty trajectory");
    if (t < 0.0 || t > traj.t_end())
        throw RangeError("sample: t=" + double_to_string(t) + " outside [0, " +
                         double_to_string(traj.t_end()) + "]");
    std::size_t k = static_cast<std::size_t>(t / traj.dt);
    if (k >= traj.size() - 1) k = traj.size() - 2;
    if (t == traj.t[k]) return traj.x[k];
    if (t == traj.t[k + 1]) return traj.x[k + 1];

    const double h = traj.t[k + 1] - traj.t[k];
    const double u = (t - traj.t[k]) / h;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;

    const auto& x0 = traj.x[k];
    const auto& x1 = traj.x[k + 1];
    const auto& d0 = traj.dx[k];
    const auto& d1 = traj.dx[k + 1];
    StateVector out(x0.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * x0[i] + h10 * h * d0[i] + h01 * x1[i] + h11 * h * d1[i];
    return out;
}

/// Closed-form solution of the scalar logistic-type equation
/// xdot = x (b + a x) with b > 0, a < 0, x0 > 0:
///
///     x(t) = b x0 e^{bt} / (b - a x0 (e^{bt} - 1)).
///
/// Used as an independent oracle for the integrator.
[[nodiscard]] inline double logistic_exact(double b, double a, double x0, double t) {
    if (!(b > 0.0) || !(a < 0.0) || !(x0 > 0.0))
        throw ContractViolation("logistic_exact requires b > 0, a < 0, x0 > 0");
    const double e = std::exp(b * t);
    return b * x0 * e / (b - a * x0 * (e - 1.0));
}

/// CSV export, header "t,<label_1>,...,<label_S>", shortest round-trip decimals.
[[nodiscard]] inline std::string trajectory_to_csv(const Trajectory& traj) {
    std::string out = "t";
    const int S = traj.dimension();
    for (int i = 0; i < S; ++i) {
        out += ',';
        out += i < static_cast<int>(traj.labels.size()) ? traj.labels[i] : "x" + std::to_string(i + 1);
    }
    out += '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out += double_to_string(traj.t[k]);
        for (int i = 0; i < S; ++i) {
            out += ',';
            out += double_to_string(traj.x[k][i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace glvred
