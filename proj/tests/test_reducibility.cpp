#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "glvred/reducibility.hpp"
#include "test_support.hpp"

using namespace glvred;

TEST_CASE("zero_set matches the triangular pattern") {
    CHECK(zero_set(3, 1) == std::vector<IndexPair>{{1, 3}});
    CHECK(zero_set(7, 6).empty());
    CHECK(zero_set(4, 2) == std::vector<IndexPair>{{2, 4}});
    CHECK(zero_set(10, 4).size() == 15);
    CHECK_THROWS_AS(zero_set(3, 4), ContractViolation);
}

TEST_CASE("zero_set agrees with brute-force enumeration of the predicate") {
    for (int S = 1; S <= 12; ++S) {
        for (int s = 1; s <= S; ++s) {
            std::vector<IndexPair> enumerated;
            for (int i = 1; i <= S; ++i)
                for (int j = 1; j <= S; ++j)
                    if (i >= s && i <= S - 2 && j > i + 1) enumerated.push_back({i, j});
            CHECK(zero_set(S, s) == enumerated);
        }
    }
}

TEST_CASE("zero_set size follows the closed-form count") {
    for (int S = 1; S <= 50; ++S)
        for (int s = 1; s <= S; ++s) {
            const long k = S - s;
            CHECK(static_cast<long>(zero_set(S, s).size()) == (k - 1) * k / 2);
        }
}

TEST_CASE("rho arithmetic") {
    CHECK(rho(3, 1) == Rational(1, 9));
    CHECK(rho(10, 10).num == 0);
    CHECK(rho(10, 9).num == 0);
    // 15 of the 100 entries must vanish: rho = 15/100
    CHECK(rho(10, 4) == Rational(15, 100));
    CHECK(rho(10, 4).value() == 0.15);
    CHECK(rho(10, 4).str() == "3/20");
    for (int S = 1; S <= 50; ++S)
        for (int s = 1; s <= S; ++s)
            CHECK(rho(S, s) == Rational(static_cast<std::int64_t>(zero_set(S, s).size()),
                                        static_cast<std::int64_t>(S) * S));
}

TEST_CASE("rho_limit endpoints and midpoint") {
    CHECK(rho_limit(0.0) == 0.5);
    CHECK(rho_limit(1.0) == 0.0);
    CHECK(rho_limit(0.5) == 0.125);
    CHECK_THROWS_AS(rho_limit(-0.1), RangeError);
    CHECK_THROWS_AS(rho_limit(1.1), RangeError);
}

TEST_CASE("rho approaches its limit at rate 1/S") {
    for (double alpha : {0.0, 0.25, 0.5, 0.75})
        for (int S : {10, 100, 1000}) {
            const int s = static_cast<int>(alpha * S);
            const double diff = std::abs(rho(S, s).value() - rho_limit(alpha));
            CHECK(diff <= 1.0 / S);
        }
}

TEST_CASE("rho_curve spans [0, 1] monotonically") {
    auto three = rho_curve(3);
    CHECK(three[0] == std::pair{0.0, 0.5});
    CHECK(three[1] == std::pair{0.5, 0.125});
    CHECK(three[2] == std::pair{1.0, 0.0});
    for (int n : {2, 5, 101}) {
        auto curve = rho_curve(n);
        CHECK(curve.front() == std::pair{0.0, 0.5});
        CHECK(curve.back() == std::pair{1.0, 0.0});
        CHECK(std::is_sorted(curve.begin(), curve.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; }));
    }
    CHECK_THROWS_AS(rho_curve(1), ContractViolation);
    CHECK(rho_curve_csv(2) == "alpha,rho_limit\n0,0.5\n1,0\n");
}

TEST_CASE("build_plan_canonical uses the identity ordering") {
    auto plan = build_plan_canonical(4, 2);
    CHECK(plan.ordering == std::vector<int>{0, 1, 2, 3});
    CHECK(plan.required_zeros == std::vector<IndexPair>{{2, 4}});
    CHECK_FALSE(plan.feasible.has_value());
    CHECK(EliminationPlan::pivot_position(4) == 3);
    CHECK(EliminationPlan::pivot_position(3) == 2);

    auto identity = build_plan_canonical(5, 5);
    CHECK(identity.required_zeros.empty());
    CHECK(identity.eliminated_count() == 0);

    CHECK(build_plan_canonical(3, 1).required_zeros == std::vector<IndexPair>{{1, 3}});
}

TEST_CASE("single eliminations are feasible whenever some pivot is nonzero") {
    std::mt19937_64 rng(11);
    auto model = testsupport::random_stable_model(rng, 5);
    auto report = check_reducible(model, {0, 1, 2, 3});
    CHECK(report.feasible);
    CHECK(report.k == 1);
    CHECK(report.zero_set_size == 0);
    CHECK(report.plan.ordering == std::vector<int>{0, 1, 2, 3, 4});

    // Decouple the eliminated species from every retained row: no pivot.
    for (int i = 0; i < 4; ++i) model.a(i, 4) = 0.0;
    auto blocked = check_reducible(model, {0, 1, 2, 3});
    CHECK_FALSE(blocked.feasible);
    REQUIRE_FALSE(blocked.plan.violations.empty());
    CHECK(blocked.plan.violations.front().kind == PlanViolation::Kind::zero_pivot);
}

TEST_CASE("the nested 3-to-1 pattern is recognized") {
    std::mt19937_64 rng(12);
    auto model = testsupport::random_stable_model(rng, 3);
    model.a(0, 2) = 0.0;  // the single required zero
    auto report = check_reducible(model, {0});
    REQUIRE(report.feasible);
    // Identity ordering: eliminate species 3 via row 2, then species 2 via row 1.
    CHECK(report.plan.ordering == std::vector<int>{0, 1, 2});
    CHECK(report.rho_exact == Rational(1, 9));
}

TEST_CASE("dense models are infeasible below S-1 retained") {
    std::mt19937_64 rng(13);
    auto model = testsupport::random_stable_model(rng, 5);
    auto report = check_reducible(model, {0, 1});
    CHECK_FALSE(report.feasible);
    CHECK(report.plan.violations.size() == 3);  // |A_{5,2}| = 3, all nonzero
    CHECK(report.exhaustive);
    // every candidate ordering was examined: 2 retained choices x 3! eliminated
    CHECK(report.orderings_examined == 12);
}

TEST_CASE("search undoes a random species permutation") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const int S = 3 + static_cast<int>(rng() % 6);  // up to 8
        const int s = 1 + static_cast<int>(rng() % (S - 1));
        auto base = testsupport::random_stable_model(rng, S);
        testsupport::zero_canonical_entries(base, s);

        std::vector<int> sigma(S);
        std::iota(sigma.begin(), sigma.end(), 0);
        std::shuffle(sigma.begin(), sigma.end(), rng);

        GlvModel scrambled = base;
        for (int i = 0; i < S; ++i) {
            scrambled.growth[sigma[i]] = base.growth[i];
            scrambled.initial_state[sigma[i]] = base.initial_state[i];
            for (int j = 0; j < S; ++j) scrambled.a(sigma[i], sigma[j]) = base.a(i, j);
        }
        std::vector<int> retained;
        for (int i = 0; i < s; ++i) retained.push_back(sigma[i]);

        auto report = check_reducible(scrambled, retained);
        CHECK(report.feasible);
    }
}

TEST_CASE("search is deterministic") {
    std::mt19937_64 rng(15);
    auto model = testsupport::random_stable_model(rng, 6);
    testsupport::zero_canonical_entries(model, 2);
    auto first = check_reducible(model, {0, 1});
    auto second = check_reducible(model, {0, 1});
    CHECK(first.feasible == second.feasible);
    CHECK(first.plan.ordering == second.plan.ordering);
    CHECK(first.orderings_examined == second.orderings_examined);
}

TEST_CASE("feasible plans always build") {
    // covered in depth by the reduction tests; here: the reported plan has
    // no violations and its zero set matches the formula
    std::mt19937_64 rng(16);
    auto model = testsupport::random_stable_model(rng, 6);
    testsupport::zero_canonical_entries(model, 3);
    auto report = check_reducible(model, {0, 1, 2});
    REQUIRE(report.feasible);
    CHECK(evaluate_plan(model, report.plan).empty());
}

TEST_CASE("large eliminated sets need an explicit heuristic") {
    std::mt19937_64 rng(17);
    auto model = testsupport::random_stable_model(rng, 12);
    testsupport::zero_canonical_entries(model, 3);
    CHECK_THROWS_AS(check_reducible(model, {0, 1, 2}), BudgetError);

    SearchOptions options;
    options.heuristic = SearchHeuristic::greedy;
    auto report = check_reducible(model, {0, 1, 2}, options);
    CHECK_FALSE(report.exhaustive);
    // The canonical pattern with untouched ordering is found by the greedy
    // placement because the zeroed rows sort first.
    CHECK(report.feasible);
}

TEST_CASE("retained set validation") {
    std::mt19937_64 rng(18);
    auto model = testsupport::random_stable_model(rng, 3);
    CHECK_THROWS_AS(check_reducible(model, {}), ContractViolation);
    CHECK_THROWS_AS(check_reducible(model, {0, 0}), ContractViolation);
    CHECK_THROWS_AS(check_reducible(model, {5}), ContractViolation);
}

TEST_CASE("retaining every species is trivially feasible") {
    std::mt19937_64 rng(19);
    auto model = testsupport::random_stable_model(rng, 4);
    auto report = check_reducible(model, {0, 1, 2, 3});
    CHECK(report.feasible);
    CHECK(report.k == 0);
    CHECK(report.rho_exact.num == 0);
}
