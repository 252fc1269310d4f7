#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glvred/errors.hpp"
#include "glvred/model.hpp"
#include "glvred/reduction_memory.hpp"  // CoeffRef

namespace glvred {

/// State with derivatives along the flow, through second (GLV) or third
/// (Lorenz) order.
struct DerivativeJet {
    StateVector x;
    StateVector d1;
    StateVector d2;
    std::optional<StateVector> d3;
};

/// Exact derivatives of the 2-species GLV flow at a state: d1 is the RHS and
/// d2_i = d1_i (b_i + sum_j a_ij x_j) + x_i (sum_j a_ij d1_j).
[[nodiscard]] inline DerivativeJet analytic_jet(const GlvModel& model, const StateVector& x) {
    if (model.dimension() != 2)
        throw ContractViolation("analytic_jet is defined for 2-species models");
    DerivativeJet jet;
    jet.x = x;
    jet.d1 = rhs(model, x);
    jet.d2.resize(2);
    for (int i = 0; i < 2; ++i) {
        double u = model.growth[i];
        double du = 0.0;
        for (int j = 0; j < 2; ++j) {
            u += model.a(i, j) * x[j];
            du += model.a(i, j) * jet.d1[j];
        }
        jet.d2[i] = jet.d1[i] * u + x[i] * du;
    }
    return jet;
}

/// Pieces of the second-order single-variable residual for S=2: the second
/// dynamic equation evaluated on the rearrangement y of the first.
struct AlgebraicResidual {
    double y = 0.0;      // x2 expressed through (x1, x1dot)
    double ydot = 0.0;   // its derivative through (x1, x1dot, x1ddot)
    double residual = 0.0;  // ydot - [b2 y + (a21 x1 + a22 y) y]
    double scale = 0.0;     // largest |additive term| of the residual sum
};

/// Evaluates the algebraic-method identity for a 2-species model: along the
/// exact flow the returned residual vanishes. The final equation consumes
/// the second row's constants (b2, a21, a22); the embedded rearrangement y
/// consumes the first row's.
[[nodiscard]] inline AlgebraicResidual algebraic_residual_2(const GlvModel& model,
                                                            const DerivativeJet& jet) {
    if (model.dimension() != 2)
        throw ContractViolation("algebraic_residual_2 is defined for 2-species models");
    const double a12 = model.a(0, 1);
    if (a12 == 0.0)
        throw InfeasibleError("a12 is zero: x2 cannot be rearranged out of the first equation", 1, 2);
    const double x1 = jet.x[0];
    if (!(x1 > 0.0)) throw SingularityError("x1 must be positive", 1);
    const double d1 = jet.d1[0];
    const double d2 = jet.d2[0];
    const double b1 = model.growth[0], a11 = model.a(0, 0);
    const double b2 = model.growth[1], a21 = model.a(1, 0), a22 = model.a(1, 1);

    AlgebraicResidual out;
    out.y = ((d1 - b1 * x1) / x1 - a11 * x1) / a12;
    out.ydot = (-d1 / (x1 * x1) * (d1 - b1 * x1) + (d2 - b1 * d1) / x1 - a11 * d1) / a12;
    const double growth_term = b2 * out.y;
    const double interaction_term = (a21 * x1 + a22 * out.y) * out.y;
    out.residual = out.ydot - growth_term - interaction_term;
    out.scale = std::max({std::abs(out.ydot), std::abs(growth_term), std::abs(interaction_term)});
    return out;
}

/// Coefficients consumed by the algebraic method's final (second-order)
/// equation for S=2: exactly the second row, in original coordinates.
[[nodiscard]] inline std::vector<CoeffRef> algebraic_final_equation_provenance(
    const GlvModel& model) {
    if (model.dimension() != 2)
        throw ContractViolation("algebraic provenance is defined for 2-species models");
    std::vector<CoeffRef> refs;
    refs.push_back({true, 1, 0});
    for (int j = 0; j < 2; ++j) refs.push_back({false, 1, j});
    std::sort(refs.begin(), refs.end());
    return refs;
}

// --- Lorenz third-order reduction ---------------------------------------

struct LorenzParams {
    double alpha = 10.0;
    double beta = 28.0;
    double gamma = 8.0 / 3.0;
};

[[nodiscard]] inline StateVector lorenz_rhs(const LorenzParams& p, const StateVector& state) {
    const double x = state[0], y = state[1], z = state[2];
    return {p.alpha * (y - x), x * (p.beta - z) - y, x * y - p.gamma * z};
}

/// Derivatives of the Lorenz flow through third order by chain rule.
[[nodiscard]] inline DerivativeJet lorenz_jet(const LorenzParams& p, const StateVector& state) {
    if (state.size() != 3) throw ContractViolation("lorenz_jet expects a 3-component state");
    DerivativeJet jet;
    jet.x = state;
    const double x = state[0], y = state[1], z = state[2];
    jet.d1 = lorenz_rhs(p, state);
    const double dx = jet.d1[0], dy = jet.d1[1], dz = jet.d1[2];
    jet.d2 = {p.alpha * (dy - dx),
              dx * (p.beta - z) - x * dz - dy,
              dx * y + x * dy - p.gamma * dz};
    const double ddx = jet.d2[0], ddy = jet.d2[1], ddz = jet.d2[2];
    jet.d3 = StateVector{p.alpha * (ddy - ddx),
                         ddx * (p.beta - z) - 2.0 * dx * dz - x * ddz - ddy,
                         ddx * y + 2.0 * dx * dy + x * ddy - p.gamma * ddz};
    return jet;
}

/// Both evaluations of the single third-order Lorenz equation.
struct LorenzResidual {
    double rederived = 0.0;  // from substituting y, then z, into the z equation
    double printed = 0.0;    // direct transcription of the operator form
    double scale = 0.0;      // largest |additive term| of the rederived sum
};

/// Evaluates the third-order single-variable Lorenz equation two ways: once
/// re-derived from scratch (solve the x equation for y, substitute into the
/// y equation for z, then check the z equation) and once transcribing the
/// operator form (d/dt + gamma)(beta - (xddot + (1+alpha) xdot + alpha x)
/// / (alpha x)) - x (xdot/alpha + x). Both vanish along the exact flow.
[[nodiscard]] inline LorenzResidual lorenz_residual_3rd(const LorenzParams& p,
                                                        const DerivativeJet& jet) {
    const double x = jet.x[0];
    if (x == 0.0) throw SingularityError("lorenz residual is singular at x = 0", 1);
    if (!jet.d3) throw ContractViolation("lorenz residual needs third derivatives");
    const double dx = jet.d1[0], ddx = jet.d2[0], dddx = (*jet.d3)[0];

    LorenzResidual out;
    // Re-derivation: y = x + xdot/alpha, z = beta - (ydot + y)/x, then the
    // z equation zdot = x y - gamma z must hold.
    {
        const double y = x + dx / p.alpha;
        const double ydot = dx + ddx / p.alpha;
        const double yddot = ddx + dddx / p.alpha;
        const double z = p.beta - (ydot + y) / x;
        const double zdot = -((yddot + ydot) * x - (ydot + y) * dx) / (x * x);
        const double coupling = x * y;
        const double damping = p.gamma * z;
        out.rederived = zdot - coupling + damping;
        out.scale = std::max({std::abs(zdot), std::abs(coupling), std::abs(damping)});
    }
    // Printed operator form, expanded term by term.
    {
        const double numer = ddx + (1.0 + p.alpha) * dx + p.alpha * x;
        const double numer_dot = dddx + (1.0 + p.alpha) * ddx + p.alpha * dx;
        const double w = numer / (p.alpha * x);
        const double wdot = numer_dot / (p.alpha * x) - numer * dx / (p.alpha * x * x);
        out.printed = (-wdot + p.gamma * (p.beta - w)) - x * (dx / p.alpha + x);
    }
    return out;
}

// --- Residual report -----------------------------------------------------

/// One evaluation point of a residual sweep.
struct ResidualSample {
    double t = 0.0;
    StateVector state;
    double residual_rederived = 0.0;
    std::optional<double> residual_printed;  // absent for the GLV mode
    double relative_scale = 0.0;             // largest |additive term|
};

struct ResidualReport {
    std::vector<ResidualSample> samples;
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::size_t n_states = 0;

    void add(ResidualSample sample) {
        const double abs_res = std::abs(sample.residual_rederived);
        max_abs = std::max(max_abs, abs_res);
        if (sample.relative_scale > 0.0) max_rel = std::max(max_rel, abs_res / sample.relative_scale);
        ++n_states;
        samples.push_back(std::move(sample));
    }
};

[[nodiscard]] inline nlohmann::ordered_json residual_report_to_json(const ResidualReport& report) {
    nlohmann::ordered_json j;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& s : report.samples) {
        nlohmann::ordered_json e;
        e["t"] = s.t;
        e["state"] = s.state;
        e["residual_rederived"] = s.residual_rederived;
        if (s.residual_printed) e["residual_printed"] = *s.residual_printed;
        else e["residual_printed"] = nullptr;
        e["relative_scale"] = s.relative_scale;
        entries.push_back(std::move(e));
    }
    j["entries"] = std::move(entries);
    j["summary"] = {{"max_abs", report.max_abs},
                    {"max_rel", report.max_rel},
                    {"n_states", report.n_states}};
    return j;
}

}  // namespace glvred
