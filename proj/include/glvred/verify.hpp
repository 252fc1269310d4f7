#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glvred/errors.hpp"
#include "glvred/integrate.hpp"
#include "glvred/model.hpp"
#include "glvred/reducibility.hpp"
#include "glvred/reduction_algebraic.hpp"
#include "glvred/reduction_memory.hpp"

namespace glvred {

/// Discrete error norms of a series against a positive reference series.
struct SeriesNorms {
    double linf_rel = 0.0;  // max_i |test_i - ref_i| / |ref_i|
    double l2_rel = 0.0;    // ||test - ref||_2 / ||ref||_2
};

[[nodiscard]] inline SeriesNorms compute_norms(const std::vector<double>& reference,
                                               const std::vector<double>& test) {
    if (reference.size() != test.size() || reference.empty())
        throw ContractViolation("compute_norms: series sizes differ or are empty");
    SeriesNorms out;
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double diff = std::abs(test[i] - reference[i]);
        const double ref = std::abs(reference[i]);
        if (ref > 0.0) out.linf_rel = std::max(out.linf_rel, diff / ref);
        else if (diff > 0.0) out.linf_rel = std::numeric_limits<double>::infinity();
        diff2 += diff * diff;
        ref2 += reference[i] * reference[i];
    }
    out.l2_rel = ref2 > 0.0 ? std::sqrt(diff2 / ref2)
                            : (diff2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return out;
}

struct SpeciesComparison {
    int species = -1;  // 0-based original index; -1 when only the label is known
    std::string label;
    std::string kind;  // "retained", "reconstructed", or "algebraic_solve"
    SeriesNorms norms;
};

struct Tolerances {
    double retained = 1e-4;
    double reconstructed = 1e-4;
    double residual = 1e-10;         // relative, 2-species algebraic identity
    double lorenz_residual = 1e-9;   // relative, third-order equation
    double algebraic_solve = 1e-6;   // demo solve of the second-order form
};

struct VerifySettings {
    std::string model_path;    // echoed into the report
    std::vector<int> retained; // 0-based original indices
    double t_end = 10.0;
    double dt = 1e-3;
    FixedPointOptions fp;
    Tolerances tol;
    SearchOptions search;
    std::vector<IndexPair> zeroed;  // entries zeroed before analysis (1-based, audit)
    bool algebraic_solve_demo = false;
};

/// Deterministic effort counters; wall-clock time is deliberately excluded
/// so repeated runs produce byte-identical reports.
struct WorkCounters {
    std::uint64_t grid_steps = 0;
    int max_fp_iterations = 0;
    std::uint64_t total_fp_iterations = 0;
};

struct ResidualSummary {
    double max_abs = 0.0;
    double max_rel = 0.0;
    std::size_t n_states = 0;
    std::size_t n_skipped = 0;                   // states excluded by the x != 0 precondition
    std::optional<double> printed_vs_rederived;  // max |printed - rederived| (Lorenz audit)
};

struct VerificationReport {
    std::string mode;  // "memory", "algebraic", "lorenz", "compare"
    VerifySettings settings;
    std::vector<SpeciesComparison> comparisons;
    std::optional<ResidualSummary> residuals;
    WorkCounters work;
    bool pass = false;
};

[[nodiscard]] inline nlohmann::ordered_json verification_report_to_json(
    const VerificationReport& r) {
    nlohmann::ordered_json j;
    j["mode"] = r.mode;
    nlohmann::ordered_json settings;
    if (!r.settings.model_path.empty()) settings["model"] = r.settings.model_path;
    auto retained = nlohmann::ordered_json::array();
    for (int i : r.settings.retained) retained.push_back(i + 1);
    settings["retained"] = std::move(retained);
    settings["t_end"] = r.settings.t_end;
    settings["dt"] = r.settings.dt;
    settings["fp_tolerance"] = r.settings.fp.tolerance;
    settings["fp_max_iterations"] = r.settings.fp.max_iterations;
    settings["tolerances"] = {{"retained", r.settings.tol.retained},
                              {"reconstructed", r.settings.tol.reconstructed},
                              {"residual", r.settings.tol.residual},
                              {"lorenz_residual", r.settings.tol.lorenz_residual},
                              {"algebraic_solve", r.settings.tol.algebraic_solve}};
    auto zeroed = nlohmann::ordered_json::array();
    for (const auto& z : r.settings.zeroed) zeroed.push_back({z.row, z.col});
    settings["zeroed_entries"] = std::move(zeroed);
    j["settings"] = std::move(settings);

    auto comparisons = nlohmann::ordered_json::array();
    for (const auto& c : r.comparisons) {
        nlohmann::ordered_json cj;
        if (c.species >= 0) cj["species"] = c.species + 1;
        cj["label"] = c.label;
        cj["kind"] = c.kind;
        cj["linf_rel"] = c.norms.linf_rel;
        cj["l2_rel"] = c.norms.l2_rel;
        comparisons.push_back(std::move(cj));
    }
    j["comparisons"] = std::move(comparisons);
    if (r.residuals) {
        nlohmann::ordered_json res;
        res["max_abs"] = r.residuals->max_abs;
        res["max_rel"] = r.residuals->max_rel;
        res["n_states"] = r.residuals->n_states;
        res["n_skipped"] = r.residuals->n_skipped;
        if (r.residuals->printed_vs_rederived)
            res["printed_vs_rederived_max_diff"] = *r.residuals->printed_vs_rederived;
        j["residuals"] = std::move(res);
    }
    j["work"] = {{"grid_steps", r.work.grid_steps},
                 {"max_fp_iterations", r.work.max_fp_iterations},
                 {"total_fp_iterations", r.work.total_fp_iterations}};
    j["pass"] = r.pass;
    return j;
}

// --- Memory-method verification -------------------------------------------

struct MemoryVerification {
    ReducibilityReport reducibility;
    bool feasible = false;
    VerificationReport report;             // populated when feasible
    Trajectory detailed;                   // populated when feasible
    ReducedSystem reduced;                 // populated when feasible
    ReducedTrajectory reduced_trajectory;  // populated when feasible
};

/// Full detailed-vs-reduced comparison: searches for a feasible plan, solves
/// both systems on the same grid, and compares every retained and
/// reconstructed species against the detailed oracle.
[[nodiscard]] inline MemoryVerification run_memory_verification(const GlvModel& model,
                                                                const VerifySettings& settings) {
    MemoryVerification out;
    out.reducibility = check_reducible(model, settings.retained, settings.search);
    out.feasible = out.reducibility.feasible;
    if (!out.feasible) return out;

    out.detailed = integrate_fixed(model, settings.t_end, settings.dt);
    out.reduced = build_reduced_system(model, out.reducibility.plan);
    out.reduced_trajectory = solve_reduced(out.reduced, settings.t_end, settings.dt, settings.fp);

    VerificationReport report;
    report.mode = "memory";
    report.settings = settings;
    const auto& rt = out.reduced_trajectory;
    const auto& dt_traj = out.detailed;
    if (rt.size() != dt_traj.size())
        throw ContractViolation("detailed and reduced grids differ in length");

    const int s = out.reduced.retained_count();
    std::vector<double> reference(rt.size()), series(rt.size());
    bool pass = true;
    for (int i = 0; i < s; ++i) {
        const int orig = out.reduced.original_at(i);
        for (std::size_t n = 0; n < rt.size(); ++n) {
            reference[n] = dt_traj.x[n][orig];
            series[n] = rt.x[n][i];
        }
        SpeciesComparison c;
        c.species = orig;
        c.label = model.label(orig);
        c.kind = "retained";
        c.norms = compute_norms(reference, series);
        pass = pass && c.norms.linf_rel <= settings.tol.retained;
        report.comparisons.push_back(std::move(c));
    }
    for (int e = 0; e < out.reduced.eliminated_count(); ++e) {
        const int orig = out.reduced.original_at(s + e);
        for (std::size_t n = 0; n < rt.size(); ++n) {
            reference[n] = dt_traj.x[n][orig];
            series[n] = rt.chi[n][e];
        }
        SpeciesComparison c;
        c.species = orig;
        c.label = model.label(orig);
        c.kind = "reconstructed";
        c.norms = compute_norms(reference, series);
        pass = pass && c.norms.linf_rel <= settings.tol.reconstructed;
        report.comparisons.push_back(std::move(c));
    }
    report.work.grid_steps = rt.size() - 1;
    report.work.max_fp_iterations = rt.max_fp_iterations;
    report.work.total_fp_iterations = rt.total_fp_iterations;
    report.pass = pass;
    out.report = std::move(report);
    return out;
}

// --- Algebraic-method verification -----------------------------------------

struct AlgebraicVerification {
    VerificationReport report;
    ResidualReport residuals;
    Trajectory detailed;
};

/// Sweeps the algebraic residual with analytic jets over every grid state of
/// a detailed trajectory; optionally also integrates the equivalent
/// first-order pair recovered from the second-order form and compares it to
/// the detailed retained species.
[[nodiscard]] inline AlgebraicVerification run_algebraic_verification(
    const GlvModel& model, const VerifySettings& settings) {
    if (model.dimension() != 2)
        throw ContractViolation("the algebraic mode is defined for 2-species models");
    AlgebraicVerification out;
    out.detailed = integrate_fixed(model, settings.t_end, settings.dt);

    for (std::size_t n = 0; n < out.detailed.size(); ++n) {
        const auto jet = analytic_jet(model, out.detailed.x[n]);
        const auto res = algebraic_residual_2(model, jet);
        ResidualSample sample;
        sample.t = out.detailed.t[n];
        sample.state = out.detailed.x[n];
        sample.residual_rederived = res.residual;
        sample.relative_scale = res.scale;
        out.residuals.add(std::move(sample));
    }

    VerificationReport report;
    report.mode = "algebraic";
    report.settings = settings;
    ResidualSummary summary;
    summary.max_abs = out.residuals.max_abs;
    summary.max_rel = out.residuals.max_rel;
    summary.n_states = out.residuals.n_states;
    report.residuals = summary;
    report.work.grid_steps = out.detailed.size() - 1;
    bool pass = summary.max_rel <= settings.tol.residual;

    if (settings.algebraic_solve_demo) {
        // Second-order equation converted back to a first-order pair
        // (u, w) = (x1, x1dot); the missing initial slope is fixed by x2(0).
        const double b1 = model.growth[0], a11 = model.a(0, 0), a12 = model.a(0, 1);
        const double b2 = model.growth[1], a21 = model.a(1, 0), a22 = model.a(1, 1);
        auto pair_rhs = [&](double, const StateVector& uw) -> StateVector {
            const double u = uw[0], w = uw[1];
            if (!(u > 0.0)) throw SingularityError("x1 must stay positive in the solve demo", 1);
            const double y = ((w - b1 * u) / u - a11 * u) / a12;
            const double target = b2 * y + (a21 * u + a22 * y) * y;
            const double xdd = b1 * w + u * (a12 * target + w * (w - b1 * u) / (u * u) + a11 * w);
            return {w, xdd};
        };
        StateVector uw0 = {model.initial_state[0], rhs(model, model.initial_state)[0]};
        auto demo = rk4_fixed(pair_rhs, uw0, settings.t_end, settings.dt,
                              /*require_positive=*/false);
        std::vector<double> reference(out.detailed.size()), series(out.detailed.size());
        for (std::size_t n = 0; n < out.detailed.size(); ++n) {
            reference[n] = out.detailed.x[n][0];
            series[n] = demo.x[n][0];
        }
        SpeciesComparison c;
        c.species = 0;
        c.label = model.label(0);
        c.kind = "algebraic_solve";
        c.norms = compute_norms(reference, series);
        pass = pass && c.norms.linf_rel <= settings.tol.algebraic_solve;
        report.comparisons.push_back(std::move(c));
    }
    report.pass = pass;
    out.report = std::move(report);
    return out;
}

// --- Lorenz verification ----------------------------------------------------

struct LorenzVerifySettings {
    LorenzParams params;
    StateVector x0 = {1.0, 1.0, 1.0};
    double t_end = 10.0;
    double dt = 1e-3;
    double tolerance = 1e-9;
    /// States with |x| below this fraction of the trajectory's |x| maximum
    /// are excluded (the equation divides by x).
    double x_exclusion_fraction = 1e-6;
};

struct LorenzVerification {
    VerificationReport report;
    ResidualReport residuals;
    Trajectory trajectory;
};

[[nodiscard]] inline LorenzVerification run_lorenz_verification(
    const LorenzVerifySettings& settings) {
    LorenzVerification out;
    out.trajectory = rk4_fixed(
        [&settings](double, const StateVector& state) { return lorenz_rhs(settings.params, state); },
        settings.x0, settings.t_end, settings.dt, /*require_positive=*/false);
    out.trajectory.labels = {"x", "y", "z"};

    double max_abs_x = 0.0;
    for (const auto& state : out.trajectory.x) max_abs_x = std::max(max_abs_x, std::abs(state[0]));
    const double skip_below = settings.x_exclusion_fraction * max_abs_x;

    std::size_t skipped = 0;
    double printed_diff = 0.0;
    for (std::size_t n = 0; n < out.trajectory.size(); ++n) {
        const auto& state = out.trajectory.x[n];
        if (std::abs(state[0]) <= skip_below) {
            ++skipped;
            continue;
        }
        const auto jet = lorenz_jet(settings.params, state);
        const auto res = lorenz_residual_3rd(settings.params, jet);
        printed_diff = std::max(printed_diff, std::abs(res.printed - res.rederived));
        ResidualSample sample;
        sample.t = out.trajectory.t[n];
        sample.state = state;
        sample.residual_rederived = res.rederived;
        sample.residual_printed = res.printed;
        sample.relative_scale = res.scale;
        out.residuals.add(std::move(sample));
    }

    VerificationReport report;
    report.mode = "lorenz";
    report.settings.t_end = settings.t_end;
    report.settings.dt = settings.dt;
    report.settings.tol.lorenz_residual = settings.tolerance;
    ResidualSummary summary;
    summary.max_abs = out.residuals.max_abs;
    summary.max_rel = out.residuals.max_rel;
    summary.n_states = out.residuals.n_states;
    summary.n_skipped = skipped;
    summary.printed_vs_rederived = printed_diff;
    report.residuals = summary;
    report.work.grid_steps = out.trajectory.size() - 1;
    report.pass = summary.max_rel <= settings.tolerance;
    out.report = std::move(report);
    return out;
}

// --- CSV comparison (pipeline tail) ----------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

[[nodiscard]] inline CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t pos = 0;
    auto next_line = [&]() -> std::optional<std::string_view> {
        if (pos >= text.size()) return std::nullopt;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        return line;
    };
    auto header_line = next_line();
    if (!header_line || header_line->empty()) throw ParseError("csv: missing header line");
    std::size_t start = 0;
    const auto& h = *header_line;
    while (true) {
        std::size_t comma = h.find(',', start);
        table.header.emplace_back(h.substr(start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    table.columns.resize(table.header.size());
    while (auto line = next_line()) {
        if (line->empty()) continue;
        std::size_t field_start = 0, field = 0;
        while (true) {
            std::size_t comma = line->find(',', field_start);
            auto cell = line->substr(field_start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - field_start);
            if (field >= table.header.size()) throw ParseError("csv: row has too many fields");
            table.columns[field].push_back(string_to_double(cell));
            ++field;
            if (comma == std::string_view::npos) break;
            field_start = comma + 1;
        }
        if (field != table.header.size()) throw ParseError("csv: row has too few fields");
    }
    return table;
}

/// Compares a reduced trajectory CSV against a detailed trajectory CSV on a
/// shared grid. Retained columns match by name; "chi_<label>" columns match
/// the detailed "<label>" column as reconstructions. Produces exactly the
/// norms the in-process verification computes for the same data.
[[nodiscard]] inline VerificationReport compare_trajectory_csv(const CsvTable& detailed,
                                                               const CsvTable& reduced,
                                                               const Tolerances& tol) {
    if (detailed.header.empty() || detailed.header[0] != "t" || reduced.header.empty() ||
        reduced.header[0] != "t")
        throw ParseError("csv: first column must be 't'");
    if (detailed.columns[0] != reduced.columns[0])
        throw ContractViolation("trajectories are on different time grids");

    auto detailed_column = [&](const std::string& name) -> const std::vector<double>& {
        for (std::size_t i = 1; i < detailed.header.size(); ++i)
            if (detailed.header[i] == name) return detailed.columns[i];
        throw ContractViolation("detailed trajectory has no column '" + name + "'");
    };

    VerificationReport report;
    report.mode = "compare";
    bool pass = true;
    for (std::size_t i = 1; i < reduced.header.size(); ++i) {
        const std::string& name = reduced.header[i];
        SpeciesComparison c;
        if (name.rfind("chi_", 0) == 0) {
            const std::string label = name.substr(4);
            c.label = label;
            c.kind = "reconstructed";
            c.norms = compute_norms(detailed_column(label), reduced.columns[i]);
            pass = pass && c.norms.linf_rel <= tol.reconstructed;
        } else {
            c.label = name;
            c.kind = "retained";
            c.norms = compute_norms(detailed_column(name), reduced.columns[i]);
            pass = pass && c.norms.linf_rel <= tol.retained;
        }
        report.comparisons.push_back(std::move(c));
    }
    report.settings.tol = tol;
    report.work.grid_steps = detailed.columns[0].empty() ? 0 : detailed.columns[0].size() - 1;
    report.pass = pass;
    return report;
}

}  // namespace glvred
