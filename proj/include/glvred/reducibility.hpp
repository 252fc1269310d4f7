#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glvred/errors.hpp"
#include "glvred/io.hpp"
#include "glvred/model.hpp"

namespace glvred {

/// A pair of 1-based species coordinates into the interaction matrix.
struct IndexPair {
    int row = 0;
    int col = 0;
    friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// Entries of A that are sufficient to zero for an exact reduction from S to
/// s species under the canonical elimination chain: rows s..S-2 (1-based)
/// must vanish beyond the superdiagonal, {(i,j) : s <= i <= S-2, j > i+1}.
[[nodiscard]] inline std::vector<IndexPair> zero_set(int S, int s) {
    if (s < 1 || s > S) throw ContractViolation("zero_set requires 1 <= s <= S");
    std::vector<IndexPair> out;
    for (int i = s; i <= S - 2; ++i)
        for (int j = i + 2; j <= S; ++j) out.push_back({i, j});
    return out;
}

/// Exact rational number with the reduced numerator/denominator.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw ContractViolation("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    [[nodiscard]] std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// Fraction of the S^2 interaction terms that the canonical scheme zeroes:
/// rho = (k-1)k / (2 S^2) with k = S - s. Computed from the count, exactly.
/// s = 0 (complete elimination) is admitted; the counting formula extends
/// to it even though no elimination chain bottoms out there.
[[nodiscard]] inline Rational rho(int S, int s) {
    if (S < 1 || s < 0 || s > S) throw ContractViolation("rho requires 0 <= s <= S");
    const std::int64_t k = S - s;
    return Rational((k - 1) * k, 2ll * S * S);
}

/// Large-S limit of rho at fixed retention ratio alpha = s/S: (1-alpha)^2/2.
[[nodiscard]] inline double rho_limit(double alpha) {
    if (!(alpha >= 0.0) || !(alpha <= 1.0))
        throw RangeError("rho_limit requires alpha in [0, 1]");
    return 0.5 * (1.0 - alpha) * (1.0 - alpha);
}

/// Uniform table of (alpha, rho_limit(alpha)) on [0, 1], inclusive endpoints.
[[nodiscard]] inline std::vector<std::pair<double, double>> rho_curve(int n_points) {
    if (n_points < 2) throw ContractViolation("rho_curve requires n_points >= 2");
    std::vector<std::pair<double, double>> out;
    out.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double alpha = static_cast<double>(i) / static_cast<double>(n_points - 1);
        out.emplace_back(alpha, rho_limit(alpha));
    }
    return out;
}

[[nodiscard]] inline std::string rho_curve_csv(int n_points) {
    std::string out = "alpha,rho_limit\n";
    for (const auto& [alpha, value] : rho_curve(n_points))
        out += double_to_string(alpha) + "," + double_to_string(value) + "\n";
    return out;
}

/// A single broken requirement of an elimination ordering.
struct PlanViolation {
    enum class Kind { nonzero_required, zero_pivot };
    Kind kind = Kind::nonzero_required;
    IndexPair permuted;   // 1-based (row, col) in permuted coordinates
    IndexPair original;   // same entry in original species coordinates
    double value = 0.0;   // offending entry of A
};

/// One elimination ordering: positions 1..s retained, s+1..S eliminated in
/// descending position order, pivot row p(m) = m-1 for each eliminated
/// position m. `ordering[pos]` is the 0-based original species at 0-based
/// position `pos`.
struct EliminationPlan {
    int dimension = 0;      // S
    int retained_count = 0; // s
    std::vector<int> ordering;
    std::vector<IndexPair> required_zeros;  // permuted coordinates, 1-based
    std::optional<bool> feasible;           // unset until checked against a model
    std::vector<PlanViolation> violations;

    [[nodiscard]] int eliminated_count() const { return dimension - retained_count; }
    /// Pivot position for eliminated position m (both 1-based).
    [[nodiscard]] static int pivot_position(int m) { return m - 1; }
    [[nodiscard]] int original_at(int pos0) const { return ordering[pos0]; }
    [[nodiscard]] int position_of(int original0) const {
        for (int p = 0; p < dimension; ++p)
            if (ordering[p] == original0) return p;
        throw ContractViolation("species not present in ordering");
    }
};

/// Identity-ordering plan with pivots p(m) = m-1 and the canonical zero set;
/// feasibility is left unevaluated (no model supplied).
[[nodiscard]] inline EliminationPlan build_plan_canonical(int S, int s) {
    EliminationPlan plan;
    plan.dimension = S;
    plan.retained_count = s;
    plan.ordering.resize(S);
    std::iota(plan.ordering.begin(), plan.ordering.end(), 0);
    plan.required_zeros = zero_set(S, s);
    return plan;
}

/// Checks a plan's exact-zero requirements and pivot entries against a model.
/// Entries count as zero only when they are exactly 0.0 in the model; small
/// entries are never thresholded away.
[[nodiscard]] inline std::vector<PlanViolation> evaluate_plan(const GlvModel& model,
                                                              const EliminationPlan& plan) {
    const int S = plan.dimension;
    const int s = plan.retained_count;
    if (model.dimension() != S)
        throw ContractViolation("plan dimension does not match model");
    std::vector<PlanViolation> out;
    for (int i = s - 1; i <= S - 3; ++i) {
        for (int j = i + 2; j <= S - 1; ++j) {
            const int oi = plan.ordering[i], oj = plan.ordering[j];
            const double v = model.a(oi, oj);
            if (v != 0.0)
                out.push_back({PlanViolation::Kind::nonzero_required,
                               {i + 1, j + 1},
                               {oi + 1, oj + 1},
                               v});
        }
    }
    for (int m = s; m <= S - 1; ++m) {
        const int p = m - 1;
        const int op = plan.ordering[p], om = plan.ordering[m];
        if (model.a(op, om) == 0.0)
            out.push_back({PlanViolation::Kind::zero_pivot,
                           {p + 1, m + 1},
                           {op + 1, om + 1},
                           0.0});
    }
    return out;
}

enum class SearchHeuristic { none, greedy };

struct SearchOptions {
    int exhaustive_limit = 8;  // max k for exhaustive ordering enumeration
    SearchHeuristic heuristic = SearchHeuristic::none;
};

/// Outcome of a reducibility analysis for one (model, retained set) query.
struct ReducibilityReport {
    int S = 0;
    int s = 0;
    int k = 0;
    double alpha = 0.0;
    std::size_t zero_set_size = 0;
    Rational rho_exact;
    double rho_limit_value = 0.0;
    bool feasible = false;
    bool exhaustive = true;  // false when the greedy heuristic was used
    std::uint64_t orderings_examined = 0;
    EliminationPlan plan;  // feasible plan, or the closest witness when infeasible
};

namespace detail {

inline std::vector<int> sorted_copy(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
}

/// Enumerates candidate orderings in lexicographic order of the full
/// position->species vector and evaluates each against the model.
/// Candidates fix positions 1..s-1 to the unchosen retained species in
/// ascending order; the search degrees of freedom are which retained species
/// occupies position s and the arrangement of eliminated species.
inline ReducibilityReport exhaustive_search(const GlvModel& model, const std::vector<int>& retained,
                                            const std::vector<int>& eliminated) {
    const int S = model.dimension();
    const int s = static_cast<int>(retained.size());

    ReducibilityReport report;
    bool have_witness = false;
    std::size_t best_violations = 0;

    // Retained candidates for position s in descending order: removing the
    // largest first yields ascending-lexicographic prefixes.
    for (auto rit = retained.rbegin(); rit != retained.rend(); ++rit) {
        const int pos_s_species = *rit;
        EliminationPlan plan;
        plan.dimension = S;
        plan.retained_count = s;
        plan.ordering.reserve(S);
        for (int r : retained)
            if (r != pos_s_species) plan.ordering.push_back(r);
        plan.ordering.push_back(pos_s_species);
        plan.required_zeros = zero_set(S, s);

        std::vector<int> perm = eliminated;  // already sorted ascending
        do {
            plan.ordering.resize(s);
            plan.ordering.insert(plan.ordering.end(), perm.begin(), perm.end());
            ++report.orderings_examined;
            auto violations = evaluate_plan(model, plan);
            if (violations.empty()) {
                plan.feasible = true;
                plan.violations.clear();
                report.feasible = true;
                report.plan = plan;
                return report;
            }
            if (!have_witness || violations.size() < best_violations) {
                have_witness = true;
                best_violations = violations.size();
                plan.feasible = false;
                plan.violations = std::move(violations);
                report.plan = plan;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    report.feasible = false;
    return report;
}

/// Greedy placement: eliminated species with the fewest nonzero interactions
/// on other eliminated species take the most constrained (earliest) slots.
/// Not exhaustive; may miss feasible orderings.
inline ReducibilityReport greedy_search(const GlvModel& model, const std::vector<int>& retained,
                                        const std::vector<int>& eliminated) {
    const int S = model.dimension();
    const int s = static_cast<int>(retained.size());

    std::vector<std::pair<int, int>> scored;  // (nonzero forward count, species)
    for (int e : eliminated) {
        int count = 0;
        for (int f : eliminated)
            if (f != e && model.a(e, f) != 0.0) ++count;
        scored.emplace_back(count, e);
    }
    std::sort(scored.begin(), scored.end());

    ReducibilityReport report;
    report.exhaustive = false;
    bool have_witness = false;
    std::size_t best_violations = 0;

    for (auto rit = retained.rbegin(); rit != retained.rend(); ++rit) {
        const int pos_s_species = *rit;
        EliminationPlan plan;
        plan.dimension = S;
        plan.retained_count = s;
        for (int r : retained)
            if (r != pos_s_species) plan.ordering.push_back(r);
        plan.ordering.push_back(pos_s_species);
        for (const auto& [count, species] : scored) plan.ordering.push_back(species);
        plan.required_zeros = zero_set(S, s);
        ++report.orderings_examined;
        auto violations = evaluate_plan(model, plan);
        if (violations.empty()) {
            plan.feasible = true;
            report.feasible = true;
            report.plan = plan;
            return report;
        }
        if (!have_witness || violations.size() < best_violations) {
            have_witness = true;
            best_violations = violations.size();
            plan.feasible = false;
            plan.violations = std::move(violations);
            report.plan = plan;
        }
    }
    report.feasible = false;
    return report;
}

}  // namespace detail

/// Searches orderings consistent with the canonical elimination scheme for
/// one that satisfies every exact-zero requirement with nonzero pivots.
/// Exhaustive and deterministic for k <= options.exhaustive_limit (the first
/// feasible plan in lexicographic candidate order is returned); beyond that
/// the greedy heuristic must be requested explicitly.
[[nodiscard]] inline ReducibilityReport check_reducible(const GlvModel& model,
                                                        const std::vector<int>& retained0,
                                                        const SearchOptions& options = {}) {
    require_valid(model);
    const int S = model.dimension();
    auto retained = detail::sorted_copy(retained0);
    if (retained.empty()) throw ContractViolation("retained set must not be empty");
    if (std::adjacent_find(retained.begin(), retained.end()) != retained.end())
        throw ContractViolation("retained set has duplicate indices");
    if (retained.front() < 0 || retained.back() >= S)
        throw ContractViolation("retained index out of range");
    const int s = static_cast<int>(retained.size());
    const int k = S - s;

    std::vector<int> eliminated;
    for (int i = 0; i < S; ++i)
        if (!std::binary_search(retained.begin(), retained.end(), i)) eliminated.push_back(i);

    ReducibilityReport report;
    if (k > options.exhaustive_limit && options.heuristic == SearchHeuristic::none)
        throw BudgetError("k = " + std::to_string(k) + " eliminated species exceeds the exhaustive "
                          "search limit of " + std::to_string(options.exhaustive_limit) +
                          "; pass the greedy heuristic to search incompletely");
    if (k > options.exhaustive_limit)
        report = detail::greedy_search(model, retained, eliminated);
    else
        report = detail::exhaustive_search(model, retained, eliminated);

    report.S = S;
    report.s = s;
    report.k = k;
    report.alpha = static_cast<double>(s) / static_cast<double>(S);
    report.zero_set_size = zero_set(S, s).size();
    report.rho_exact = rho(S, s);
    report.rho_limit_value = rho_limit(report.alpha);
    return report;
}

// --- JSON serialization --------------------------------------------------

[[nodiscard]] inline nlohmann::ordered_json plan_to_json(const EliminationPlan& plan) {
    nlohmann::ordered_json j;
    j["dimension"] = plan.dimension;
    j["retained_count"] = plan.retained_count;
    auto ordering = nlohmann::ordered_json::array();
    for (int species : plan.ordering) ordering.push_back(species + 1);
    j["ordering"] = std::move(ordering);
    auto retained = nlohmann::ordered_json::array();
    for (int pos = 0; pos < plan.retained_count; ++pos) retained.push_back(plan.ordering[pos] + 1);
    j["retained"] = std::move(retained);
    auto pivots = nlohmann::ordered_json::array();
    for (int m = plan.dimension; m >= plan.retained_count + 1; --m) {
        nlohmann::ordered_json step;
        step["eliminated_position"] = m;
        step["pivot_position"] = EliminationPlan::pivot_position(m);
        step["eliminated_species"] = plan.ordering[m - 1] + 1;
        step["pivot_species"] = plan.ordering[m - 2] + 1;
        pivots.push_back(std::move(step));
    }
    j["pivots"] = std::move(pivots);
    auto zeros = nlohmann::ordered_json::array();
    for (const auto& z : plan.required_zeros) {
        zeros.push_back({{"position", {z.row, z.col}},
                         {"species", {plan.ordering[z.row - 1] + 1, plan.ordering[z.col - 1] + 1}}});
    }
    j["required_zeros"] = std::move(zeros);
    if (plan.feasible) j["feasible"] = *plan.feasible;
    else j["feasible"] = nullptr;
    auto violations = nlohmann::ordered_json::array();
    for (const auto& v : plan.violations) {
        nlohmann::ordered_json vj;
        vj["kind"] = v.kind == PlanViolation::Kind::nonzero_required ? "nonzero_required" : "zero_pivot";
        vj["position"] = {v.permuted.row, v.permuted.col};
        vj["species"] = {v.original.row, v.original.col};
        vj["value"] = v.value;
        violations.push_back(std::move(vj));
    }
    j["violations"] = std::move(violations);
    return j;
}

[[nodiscard]] inline nlohmann::ordered_json reducibility_report_to_json(const ReducibilityReport& r) {
    nlohmann::ordered_json j;
    j["S"] = r.S;
    j["s"] = r.s;
    j["k"] = r.k;
    j["alpha"] = r.alpha;
    j["zero_set_size"] = r.zero_set_size;
    j["rho"] = r.rho_exact.str();
    j["rho_decimal"] = r.rho_exact.value();
    j["rho_limit"] = r.rho_limit_value;
    j["feasible"] = r.feasible;
    j["search"] = {{"exhaustive", r.exhaustive}, {"orderings_examined", r.orderings_examined}};
    j["plan"] = plan_to_json(r.plan);
    return j;
}

}  // namespace glvred
