#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glvred/errors.hpp"
#include "glvred/integrate.hpp"
#include "glvred/model.hpp"
#include "glvred/reducibility.hpp"

namespace glvred {

/// How an operand slot of a Y or chi expression is resolved at evaluation
/// time. Retained species stay as plain states; a species eliminated in a
/// later step is referenced through its Y rearrangement; a species eliminated
/// in an earlier step is referenced through its chi accumulator value.
enum class OperandKind { retained_state, y_value, chi_value };

struct Operand {
    OperandKind kind = OperandKind::retained_state;
    int position = 0;   // 0-based permuted position of the referenced species
    double coeff = 0.0; // interaction coefficient multiplying the operand
    friend bool operator==(const Operand&, const Operand&) = default;
};

/// Rearrangement of the pivot row p = m-1 that expresses the eliminated
/// species at position m through the pivot's state and derivative:
///
///   y_m = ( (xdot_p - b_p x_p)/x_p - sum_{j != m} a_pj * op_j ) / a_pm.
///
/// When the pivot species is itself eliminated (every step but the last),
/// its state resolves to that step's Y value and its derivative to that
/// step's chi integrand.
struct YTerm {
    int eliminated = 0;          // position m
    int pivot = 0;               // position p = m-1
    bool pivot_retained = false; // p < s
    double pivot_coeff = 0.0;    // a_pm, nonzero
    double pivot_growth = 0.0;   // b_p
    std::vector<Operand> operands;
    friend bool operator==(const YTerm&, const YTerm&) = default;
};

/// Integral reconstruction of the eliminated species at position m:
///
///   chi_m(t) = x_m(0) + Int_0^t y_m (b_m + sum_j a_mj * op_j) dtau,
///
/// where the slot for x_m itself resolves to y_m. The additive initial value
/// makes chi_m(0) = x_m(0) hold for nonzero initial concentrations.
struct ChiTerm {
    int eliminated = 0;
    double initial_value = 0.0;
    double growth = 0.0;  // b_m
    std::vector<Operand> operands;
    friend bool operator==(const ChiTerm&, const ChiTerm&) = default;
};

struct EliminationStep {
    YTerm y;
    ChiTerm chi;
    std::vector<IndexPair> zero_requirements;  // permuted 1-based, pivot-row entries past column m
    friend bool operator==(const EliminationStep&, const EliminationStep&) = default;
};

/// Provenance of one scalar coefficient consumed from the original model.
struct CoeffRef {
    bool is_growth = false;
    int row = 0;  // 0-based original species index
    int col = 0;  // 0-based; unused for growth entries
    friend bool operator==(const CoeffRef&, const CoeffRef&) = default;
    friend auto operator<=>(const CoeffRef&, const CoeffRef&) = default;
};

/// The memory-method reduction of a model under one elimination plan.
/// Retained species keep their original dynamics with eliminated states
/// replaced by chi accumulators; each elimination step carries the Y and chi
/// expressions built from the permuted coefficient arrays.
struct ReducedSystem {
    GlvModel model;         // original (unpermuted) model
    EliminationPlan plan;   // feasible plan the system was built from
    std::vector<double> pb;   // permuted growth vector
    std::vector<double> pA;   // permuted interaction matrix, row-major
    std::vector<double> px0;  // permuted initial state
    std::vector<EliminationStep> steps;  // construction order: positions S-1 down to s

    [[nodiscard]] int dimension() const { return plan.dimension; }
    [[nodiscard]] int retained_count() const { return plan.retained_count; }
    [[nodiscard]] int eliminated_count() const { return plan.eliminated_count(); }
    [[nodiscard]] double pa(int i, int j) const {
        return pA[static_cast<std::size_t>(i) * plan.dimension + j];
    }
    [[nodiscard]] int original_at(int pos0) const { return plan.ordering[pos0]; }
    [[nodiscard]] std::string label_at(int pos0) const { return model.label(original_at(pos0)); }
    /// Step index that eliminates permuted position m (construction order).
    [[nodiscard]] int step_index_for(int m) const { return dimension() - 1 - m; }
};

/// Coefficients consumed by the substituted dynamic equation of one retained
/// position: the full original row (growth entry plus every interaction
/// entry), reported in original coordinates and sorted.
[[nodiscard]] inline std::vector<CoeffRef> retained_equation_provenance(const ReducedSystem& rs,
                                                                        int position) {
    if (position < 0 || position >= rs.retained_count())
        throw ContractViolation("not a retained position");
    const int orig = rs.original_at(position);
    std::vector<CoeffRef> refs;
    refs.push_back({true, orig, 0});
    for (int j = 0; j < rs.dimension(); ++j) refs.push_back({false, orig, j});
    std::sort(refs.begin(), refs.end());
    return refs;
}

/// Builds the reduction for a plan, validating the plan's exact-zero
/// requirements and pivots against the model first.
[[nodiscard]] inline ReducedSystem build_reduced_system(const GlvModel& model,
                                                        const EliminationPlan& plan) {
    require_valid(model);
    const int S = plan.dimension;
    const int s = plan.retained_count;
    if (model.dimension() != S) throw ContractViolation("plan dimension does not match model");
    if (s < 1 || s > S) throw ContractViolation("plan retains an invalid species count");
    if (static_cast<int>(plan.ordering.size()) != S)
        throw ContractViolation("plan ordering has wrong length");

    auto violations = evaluate_plan(model, plan);
    if (!violations.empty()) {
        const auto& v = violations.front();
        if (v.kind == PlanViolation::Kind::nonzero_required)
            throw InfeasibleError("required zero entry A[" + std::to_string(v.original.row) + "][" +
                                      std::to_string(v.original.col) + "] is " +
                                      double_to_string(v.value),
                                  v.original.row, v.original.col);
        throw InfeasibleError("pivot entry A[" + std::to_string(v.original.row) + "][" +
                                  std::to_string(v.original.col) + "] is zero",
                              v.original.row, v.original.col);
    }

    ReducedSystem rs;
    rs.model = model;
    rs.plan = plan;
    rs.plan.feasible = true;
    rs.plan.violations.clear();
    rs.pb.resize(S);
    rs.px0.resize(S);
    rs.pA.resize(static_cast<std::size_t>(S) * S);
    for (int i = 0; i < S; ++i) {
        rs.pb[i] = model.growth[plan.ordering[i]];
        rs.px0[i] = model.initial_state[plan.ordering[i]];
        for (int j = 0; j < S; ++j)
            rs.pA[static_cast<std::size_t>(i) * S + j] = model.a(plan.ordering[i], plan.ordering[j]);
    }

    // Steps in construction order: eliminate position S-1 first, then S-2, ...
    // Operand kinds encode the final substitution pattern: rows reference
    // earlier-eliminated species through chi, built expressions reference
    // later-eliminated species through y.
    for (int m = S - 1; m >= s; --m) {
        EliminationStep step;
        const int p = m - 1;

        step.y.eliminated = m;
        step.y.pivot = p;
        step.y.pivot_retained = p < s;
        step.y.pivot_coeff = rs.pa(p, m);
        step.y.pivot_growth = rs.pb[p];
        for (int j = 0; j < S; ++j) {
            if (j == m || rs.pa(p, j) == 0.0) continue;
            Operand op;
            op.position = j;
            op.coeff = rs.pa(p, j);
            op.kind = j < s ? OperandKind::retained_state : OperandKind::y_value;
            step.y.operands.push_back(op);
        }

        step.chi.eliminated = m;
        step.chi.initial_value = rs.px0[m];
        step.chi.growth = rs.pb[m];
        for (int j = 0; j < S; ++j) {
            if (rs.pa(m, j) == 0.0) continue;
            Operand op;
            op.position = j;
            op.coeff = rs.pa(m, j);
            if (j < s) op.kind = OperandKind::retained_state;
            else if (j <= m) op.kind = OperandKind::y_value;   // self slot resolves to y_m
            else op.kind = OperandKind::chi_value;
            step.chi.operands.push_back(op);
        }

        for (int j = m + 1; j <= S - 1; ++j) step.zero_requirements.push_back({p + 1, j + 1});
        rs.steps.push_back(std::move(step));
    }
    return rs;
}

/// Instantaneous Y values and chi integrands at one evaluation point.
struct TermValues {
    std::vector<double> y;          // indexed by m - s
    std::vector<double> integrand;  // d(chi_m)/dt, same indexing
};

/// Evaluates every step's Y value and chi integrand from retained states,
/// retained derivatives, and current chi accumulator values. Evaluation runs
/// in ascending position order so each pivot's Y/integrand pair is available
/// before it is consumed; the instantaneous dependency graph is acyclic.
///
/// Feeding detailed states/derivatives (with chi slots bound to the detailed
/// eliminated states) reproduces each eliminated species exactly: the Y
/// rearrangements are algebraic identities along the flow.
[[nodiscard]] inline TermValues evaluate_terms(const ReducedSystem& rs,
                                               const std::vector<double>& retained_state,
                                               const std::vector<double>& retained_derivative,
                                               const std::vector<double>& chi_values) {
    const int s = rs.retained_count();
    const int k = rs.eliminated_count();
    if (static_cast<int>(retained_state.size()) != s ||
        static_cast<int>(retained_derivative.size()) != s ||
        static_cast<int>(chi_values.size()) != k)
        throw ContractViolation("evaluate_terms: input sizes do not match the reduced system");

    TermValues tv;
    tv.y.resize(k);
    tv.integrand.resize(k);

    auto operand_value = [&](const Operand& op, int self_m, double self_y) -> double {
        switch (op.kind) {
            case OperandKind::retained_state: return retained_state[op.position];
            case OperandKind::y_value:
                return op.position == self_m ? self_y : tv.y[op.position - s];
            case OperandKind::chi_value: return chi_values[op.position - s];
        }
        return 0.0;
    };

    for (int m = s; m <= rs.dimension() - 1; ++m) {
        const auto& step = rs.steps[rs.step_index_for(m)];
        const int e = m - s;

        double xp, dxp;
        if (step.y.pivot_retained) {
            xp = retained_state[step.y.pivot];
            dxp = retained_derivative[step.y.pivot];
        } else {
            xp = tv.y[step.y.pivot - s];
            dxp = tv.integrand[step.y.pivot - s];
        }
        if (!(xp > 0.0))
            throw SingularityError("pivot concentration of species " +
                                       std::to_string(rs.original_at(step.y.pivot) + 1) +
                                       " is not positive",
                                   rs.original_at(step.y.pivot) + 1);
        double sum = 0.0;
        for (const auto& op : step.y.operands) sum += op.coeff * operand_value(op, -1, 0.0);
        tv.y[e] = ((dxp - step.y.pivot_growth * xp) / xp - sum) / step.y.pivot_coeff;

        double acc = step.chi.growth;
        for (const auto& op : step.chi.operands) acc += op.coeff * operand_value(op, m, tv.y[e]);
        tv.integrand[e] = tv.y[e] * acc;
    }
    return tv;
}

/// Y value of the step eliminating permuted position m; operands and the
/// pivot pair resolve recursively through evaluate_terms.
[[nodiscard]] inline double evaluate_y(const ReducedSystem& rs, int m,
                                       const std::vector<double>& retained_state,
                                       const std::vector<double>& retained_derivative,
                                       const std::vector<double>& chi_values) {
    if (m < rs.retained_count() || m >= rs.dimension())
        throw ContractViolation("evaluate_y: position is not eliminated");
    return evaluate_terms(rs, retained_state, retained_derivative, chi_values).y[m - rs.retained_count()];
}

struct FixedPointOptions {
    double tolerance = 1e-12;  // absolute, on chi values
    int max_iterations = 50;
};

/// Solution of the reduced integro-differential system on a uniform grid.
struct ReducedTrajectory {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<StateVector> x;          // retained states by position
    std::vector<StateVector> dx;         // retained derivatives
    std::vector<StateVector> chi;        // chi accumulators by elimination offset
    std::vector<StateVector> integrand;  // stored chi integrand samples
    int max_fp_iterations = 0;
    std::uint64_t total_fp_iterations = 0;

    [[nodiscard]] std::size_t size() const { return t.size(); }
};

namespace detail {

/// RHS of a retained row: x_i (b_i + sum_j a_ij * (x_j or chi_j)).
inline void reduced_rhs(const ReducedSystem& rs, const std::vector<double>& x,
                        const std::vector<double>& chi, std::vector<double>& out) {
    const int s = rs.retained_count();
    const int S = rs.dimension();
    for (int i = 0; i < s; ++i) {
        double acc = rs.pb[i];
        for (int j = 0; j < s; ++j) acc += rs.pa(i, j) * x[j];
        for (int m = s; m < S; ++m) acc += rs.pa(i, m) * chi[m - s];
        out[i] = x[i] * acc;
    }
}

inline void check_reduced_node(const ReducedSystem& rs, double t, const std::vector<double>& x,
                               const std::vector<double>& chi) {
    const int s = rs.retained_count();
    for (int i = 0; i < s; ++i) {
        if (!std::isfinite(x[i]) || x[i] <= 0.0)
            throw PositivityError("retained species " + std::to_string(rs.original_at(i) + 1) +
                                      " reached " + double_to_string(x[i]) + " at t=" +
                                      double_to_string(t),
                                  t, rs.original_at(i) + 1);
    }
    for (std::size_t e = 0; e < chi.size(); ++e) {
        const int orig = rs.original_at(s + static_cast<int>(e)) + 1;
        if (!std::isfinite(chi[e]) || chi[e] <= 0.0)
            throw PositivityError("reconstructed species " + std::to_string(orig) + " reached " +
                                      double_to_string(chi[e]) + " at t=" + double_to_string(t),
                                  t, orig);
    }
}

}  // namespace detail

/// Advances the retained species with RK4 while resolving the chi memory
/// integrals by trapezoidal quadrature over the stored integrand history.
///
/// The current node's integrand depends on the current retained derivatives,
/// which depend on the current chi values; each node therefore resolves a
/// fixed point on (chi values, retained derivatives), seeded with the
/// previous node's values. Within a step the stage evaluations advance chi
/// linearly along the node-resolved integrand, which keeps the overall
/// scheme at the trapezoidal quadrature order.
[[nodiscard]] inline ReducedTrajectory solve_reduced(const ReducedSystem& rs, double t_end,
                                                     double dt,
                                                     const FixedPointOptions& fp = {}) {
    if (!(fp.tolerance > 0.0) || fp.max_iterations < 1)
        throw ContractViolation("fixed-point tolerance and iteration budget must be positive");
    const long n_steps = detail::step_count(t_end, dt);
    const int s = rs.retained_count();
    const int S = rs.dimension();
    const int k = rs.eliminated_count();

    ReducedTrajectory rt;
    rt.dt = dt;
    rt.t.reserve(n_steps + 1);
    rt.x.reserve(n_steps + 1);
    rt.dx.reserve(n_steps + 1);
    rt.chi.reserve(n_steps + 1);
    rt.integrand.reserve(n_steps + 1);

    std::vector<double> x(rs.px0.begin(), rs.px0.begin() + s);
    std::vector<double> chi(rs.px0.begin() + s, rs.px0.end());
    std::vector<double> trapz_acc(k, 0.0);  // accumulated integral through the last node

    std::vector<double> dx(s), g(k);
    // Node 0: chi is pinned to the eliminated initial values.
    detail::check_reduced_node(rs, 0.0, x, chi);
    detail::reduced_rhs(rs, x, chi, dx);
    {
        TermValues tv = evaluate_terms(rs, x, dx, chi);
        g = tv.integrand;
    }
    rt.max_fp_iterations = 1;
    rt.total_fp_iterations = 1;
    rt.t.push_back(0.0);
    rt.x.push_back(x);
    rt.dx.push_back(dx);
    rt.chi.push_back(chi);
    rt.integrand.push_back(g);

    std::vector<double> stage(s), k1(s), k2(s), k3(s), k4(s);
    std::vector<double> chi_stage(k), chi_cur(k), chi_next(k), dx_cur(s), g_cur(k);
    for (long n = 1; n <= n_steps; ++n) {
        const double t_prev = static_cast<double>(n - 1) * dt;
        const double t_node = static_cast<double>(n) * dt;

        // RK4 stages; chi advances linearly along the node-resolved integrand.
        detail::reduced_rhs(rs, x, chi, k1);
        for (int e = 0; e < k; ++e) chi_stage[e] = chi[e] + 0.5 * dt * g[e];
        for (int i = 0; i < s; ++i) stage[i] = x[i] + 0.5 * dt * k1[i];
        detail::check_reduced_node(rs, t_prev + 0.5 * dt, stage, chi_stage);
        detail::reduced_rhs(rs, stage, chi_stage, k2);
        for (int i = 0; i < s; ++i) stage[i] = x[i] + 0.5 * dt * k2[i];
        detail::check_reduced_node(rs, t_prev + 0.5 * dt, stage, chi_stage);
        detail::reduced_rhs(rs, stage, chi_stage, k3);
        for (int e = 0; e < k; ++e) chi_stage[e] = chi[e] + dt * g[e];
        for (int i = 0; i < s; ++i) stage[i] = x[i] + dt * k3[i];
        detail::check_reduced_node(rs, t_node, stage, chi_stage);
        detail::reduced_rhs(rs, stage, chi_stage, k4);
        for (int i = 0; i < s; ++i)
            x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        // Per-node fixed point on (chi, retained derivatives).
        chi_cur = chi;
        bool converged = k == 0;
        double delta = 0.0;
        int iterations = 0;
        if (k == 0) {
            detail::reduced_rhs(rs, x, chi_cur, dx_cur);
            iterations = 1;
        }
        for (int it = 1; it <= fp.max_iterations && !converged; ++it) {
            iterations = it;
            detail::reduced_rhs(rs, x, chi_cur, dx_cur);
            TermValues tv = evaluate_terms(rs, x, dx_cur, chi_cur);
            g_cur = tv.integrand;
            delta = 0.0;
            for (int e = 0; e < k; ++e) {
                chi_next[e] = rs.px0[s + e] + trapz_acc[e] + 0.5 * dt * (g[e] + g_cur[e]);
                delta = std::max(delta, std::abs(chi_next[e] - chi_cur[e]));
            }
            chi_cur.swap(chi_next);
            if (delta <= fp.tolerance) converged = true;
        }
        if (!converged)
            throw ConvergenceError("fixed point did not converge at step " + std::to_string(n) +
                                       " (t=" + double_to_string(t_node) + "), last residual " +
                                       double_to_string(delta),
                                   n, delta);
        rt.max_fp_iterations = std::max(rt.max_fp_iterations, iterations);
        rt.total_fp_iterations += static_cast<std::uint64_t>(iterations);

        for (int e = 0; e < k; ++e) trapz_acc[e] += 0.5 * dt * (g[e] + g_cur[e]);
        chi = chi_cur;
        if (k > 0) g = g_cur;
        dx = dx_cur;
        detail::check_reduced_node(rs, t_node, x, chi);

        rt.t.push_back(t_node);
        rt.x.push_back(x);
        rt.dx.push_back(dx);
        rt.chi.push_back(chi);
        rt.integrand.push_back(g);
    }
    return rt;
}

/// One reconstructed eliminated species: its chi accumulator series.
struct ReconstructedSeries {
    int species = 0;  // 0-based original index
    std::string label;
    std::vector<double> values;
};

[[nodiscard]] inline std::vector<ReconstructedSeries> reconstruct_eliminated(
    const ReducedSystem& rs, const ReducedTrajectory& rt) {
    const int s = rs.retained_count();
    std::vector<ReconstructedSeries> out;
    for (int e = 0; e < rs.eliminated_count(); ++e) {
        ReconstructedSeries series;
        series.species = rs.original_at(s + e);
        series.label = rs.label_at(s + e);
        series.values.reserve(rt.size());
        for (std::size_t n = 0; n < rt.size(); ++n) series.values.push_back(rt.chi[n][e]);
        out.push_back(std::move(series));
    }
    return out;
}

/// CSV with columns t, retained species (original labels), then one
/// "chi_<label>" column per eliminated species.
[[nodiscard]] inline std::string reduced_trajectory_to_csv(const ReducedSystem& rs,
                                                           const ReducedTrajectory& rt) {
    const int s = rs.retained_count();
    const int k = rs.eliminated_count();
    std::string out = "t";
    for (int i = 0; i < s; ++i) out += "," + rs.label_at(i);
    for (int e = 0; e < k; ++e) out += ",chi_" + rs.label_at(s + e);
    out += '\n';
    for (std::size_t n = 0; n < rt.size(); ++n) {
        out += double_to_string(rt.t[n]);
        for (int i = 0; i < s; ++i) out += "," + double_to_string(rt.x[n][i]);
        for (int e = 0; e < k; ++e) out += "," + double_to_string(rt.chi[n][e]);
        out += '\n';
    }
    return out;
}

// --- ReducedSystem JSON ----------------------------------------------------

namespace detail {

inline const char* operand_kind_name(OperandKind kind) {
    switch (kind) {
        case OperandKind::retained_state: return "state";
        case OperandKind::y_value: return "y";
        case OperandKind::chi_value: return "chi";
    }
    return "?";
}

/// Dependency edges of one step on other steps, by construction index.
/// "y" edges consume another step's Y value, "integrand" edges its chi
/// integrand (pivot derivative), "chi" edges its accumulator value (solver
/// state, exempt from the instantaneous acyclicity requirement).
inline nlohmann::ordered_json step_dependencies(const ReducedSystem& rs,
                                                const EliminationStep& step) {
    std::vector<std::pair<int, std::string>> edges;
    auto add = [&](int position, const char* uses) {
        edges.emplace_back(rs.step_index_for(position), uses);
    };
    if (!step.y.pivot_retained) {
        add(step.y.pivot, "y");
        add(step.y.pivot, "integrand");
    }
    for (const auto& op : step.y.operands)
        if (op.kind == OperandKind::y_value) add(op.position, "y");
    for (const auto& op : step.chi.operands) {
        if (op.kind == OperandKind::y_value && op.position != step.chi.eliminated) add(op.position, "y");
        if (op.kind == OperandKind::chi_value) add(op.position, "chi");
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    auto out = nlohmann::ordered_json::array();
    for (const auto& [idx, uses] : edges) out.push_back({{"step", idx}, {"uses", uses}});
    return out;
}

}  // namespace detail

[[nodiscard]] inline nlohmann::ordered_json reduced_system_to_json(const ReducedSystem& rs) {
    nlohmann::ordered_json j;
    j["model"] = model_to_json(rs.model);
    auto ordering = nlohmann::ordered_json::array();
    for (int species : rs.plan.ordering) ordering.push_back(species + 1);
    j["ordering"] = std::move(ordering);
    j["retained_count"] = rs.retained_count();
    auto retained = nlohmann::ordered_json::array();
    for (int i = 0; i < rs.retained_count(); ++i) retained.push_back(rs.original_at(i) + 1);
    j["retained"] = std::move(retained);

    auto steps = nlohmann::ordered_json::array();
    for (const auto& step : rs.steps) {
        nlohmann::ordered_json sj;
        sj["eliminated"] = rs.original_at(step.y.eliminated) + 1;
        sj["eliminated_position"] = step.y.eliminated + 1;
        sj["pivot"] = rs.original_at(step.y.pivot) + 1;
        sj["pivot_position"] = step.y.pivot + 1;
        auto zeros = nlohmann::ordered_json::array();
        for (const auto& z : step.zero_requirements) {
            zeros.push_back({{"position", {z.row, z.col}},
                             {"species",
                              {rs.original_at(z.row - 1) + 1, rs.original_at(z.col - 1) + 1}}});
        }
        sj["zero_requirements"] = std::move(zeros);

        nlohmann::ordered_json yj;
        yj["pivot_coeff"] = step.y.pivot_coeff;
        yj["pivot_growth"] = step.y.pivot_growth;
        yj["pivot_source"] = step.y.pivot_retained ? "retained" : "step";
        auto yops = nlohmann::ordered_json::array();
        for (const auto& op : step.y.operands)
            yops.push_back({{"position", op.position + 1},
                            {"coeff", op.coeff},
                            {"kind", detail::operand_kind_name(op.kind)}});
        yj["operands"] = std::move(yops);
        sj["y"] = std::move(yj);

        nlohmann::ordered_json cj;
        cj["initial_value"] = step.chi.initial_value;
        cj["growth"] = step.chi.growth;
        auto cops = nlohmann::ordered_json::array();
        for (const auto& op : step.chi.operands)
            cops.push_back({{"position", op.position + 1},
                            {"coeff", op.coeff},
                            {"kind", detail::operand_kind_name(op.kind)}});
        cj["operands"] = std::move(cops);
        sj["chi"] = std::move(cj);

        sj["dependencies"] = detail::step_dependencies(rs, step);
        steps.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps);
    return j;
}

[[nodiscard]] inline std::string save_reduced_system(const ReducedSystem& rs) {
    return reduced_system_to_json(rs).dump(2) + "\n";
}

/// Parses a reduced-system document and verifies its integrity: the ordering
/// must be a permutation, the plan must be feasible for the embedded model,
/// the declared instantaneous dependencies must be acyclic, and every step
/// must match the structure rebuilt from the model. Throws IntegrityError on
/// the first inconsistency.
[[nodiscard]] inline ReducedSystem load_reduced_system(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("reduced-system parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("reduced-system document must be a JSON object");
    for (const char* key : {"model", "ordering", "retained_count", "steps"})
        if (!doc.contains(key))
            throw ParseError(std::string("reduced-system document missing field '") + key + "'");

    GlvModel model = model_from_json(doc.at("model"));
    require_valid(model);
    const int S = model.dimension();

    EliminationPlan plan;
    plan.dimension = S;
    plan.retained_count = doc.at("retained_count").get<int>();
    if (plan.retained_count < 1 || plan.retained_count > S)
        throw IntegrityError("retained_count out of range");
    const auto& ord = doc.at("ordering");
    if (!ord.is_array() || static_cast<int>(ord.size()) != S)
        throw IntegrityError("ordering must list every species exactly once");
    std::vector<bool> seen(S, false);
    for (const auto& e : ord) {
        const int species = e.get<int>() - 1;
        if (species < 0 || species >= S || seen[species])
            throw IntegrityError("ordering must be a permutation of 1.." + std::to_string(S));
        seen[species] = true;
        plan.ordering.push_back(species);
    }
    plan.required_zeros = zero_set(S, plan.retained_count);

    {
        auto violations = evaluate_plan(model, plan);
        if (!violations.empty()) {
            const auto& v = violations.front();
            throw IntegrityError("document's plan is not feasible for its model: entry A[" +
                                 std::to_string(v.original.row) + "][" +
                                 std::to_string(v.original.col) + "]");
        }
    }

    const auto& steps = doc.at("steps");
    const int k = S - plan.retained_count;
    if (!steps.is_array() || static_cast<int>(steps.size()) != k)
        throw IntegrityError("expected " + std::to_string(k) + " elimination steps");

    // Instantaneous ("y"/"integrand") dependency edges must admit a
    // topological order; accumulator ("chi") references are solver state.
    {
        std::vector<std::vector<int>> adj(k);
        for (int i = 0; i < k; ++i) {
            const auto& deps = steps.at(i).contains("dependencies")
                                   ? steps.at(i).at("dependencies")
                                   : nlohmann::json::array();
            for (const auto& d : deps) {
                const int target = d.at("step").get<int>();
                const std::string uses = d.at("uses").get<std::string>();
                if (target < 0 || target >= k)
                    throw IntegrityError("step dependency index out of range");
                if (uses == "y" || uses == "integrand") adj[i].push_back(target);
            }
        }
        std::vector<int> state(k, 0);  // 0 unvisited, 1 on stack, 2 done
        auto dfs = [&](auto&& self, int node) -> void {
            state[node] = 1;
            for (int next : adj[node]) {
                if (state[next] == 1)
                    throw IntegrityError("cyclic dependency between steps " + std::to_string(node) +
                                         " and " + std::to_string(next));
                if (state[next] == 0) self(self, next);
            }
            state[node] = 2;
        };
        for (int i = 0; i < k; ++i)
            if (state[i] == 0) dfs(dfs, i);
    }

    ReducedSystem rebuilt = build_reduced_system(model, plan);
    const auto rebuilt_json = reduced_system_to_json(rebuilt);

    // Every serialized step must match the structure implied by the model.
    for (int i = 0; i < k; ++i) {
        const auto& sj = steps.at(i);
        const auto& expected_json = rebuilt_json.at("steps").at(i);
        for (const char* field : {"eliminated", "eliminated_position", "pivot", "pivot_position",
                                  "zero_requirements", "y", "chi", "dependencies"}) {
            if (!sj.contains(field))
                throw IntegrityError("step " + std::to_string(i) + " missing field '" + field + "'");
            if (sj.at(field) != expected_json.at(field))
                throw IntegrityError("step " + std::to_string(i) + " field '" + field +
                                     "' does not match the structure implied by the model");
        }
    }
    return rebuilt;
}

}  // namespace glvred
