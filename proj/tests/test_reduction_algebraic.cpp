#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "glvred/integrate.hpp"
#include "glvred/reduction_algebraic.hpp"
#include "glvred/reduction_memory.hpp"
#include "test_support.hpp"

using namespace glvred;

namespace {

GlvModel stable_pair(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return testsupport::random_stable_model(rng, 2);
}

}  // namespace

TEST_CASE("analytic jets of trivial flows") {
    GlvModel zero;
    zero.growth = {0.0, 0.0};
    zero.interactions = {0.0, 0.0, 0.0, 0.0};
    zero.initial_state = {1.0, 1.0};
    auto jet = analytic_jet(zero, {0.4, 0.9});
    CHECK(jet.d1 == StateVector{0.0, 0.0});
    CHECK(jet.d2 == StateVector{0.0, 0.0});
}

TEST_CASE("decoupled components obey the scalar chain rule") {
    GlvModel m;
    m.growth = {1.0, 0.5};
    m.interactions = {-1.0, 0.0, 0.0, -2.0};
    m.initial_state = {0.3, 0.4};
    StateVector x = {0.7, 0.2};
    auto jet = analytic_jet(m, x);
    for (int i = 0; i < 2; ++i) {
        const double b = m.growth[i], a = m.a(i, i);
        CHECK(jet.d2[i] == Catch::Approx(jet.d1[i] * (b + 2.0 * a * x[i])).epsilon(1e-14));
    }
}

TEST_CASE("second derivatives match finite differences along the flow") {
    auto m = stable_pair(31);
    auto traj = integrate_fixed(m, 2.0, 1e-4);
    double worst = 0.0;
    for (std::size_t n = 100; n < traj.size() - 100; n += 97) {
        auto jet = analytic_jet(m, traj.x[n]);
        for (int i = 0; i < 2; ++i) {
            const double fd = (traj.dx[n + 1][i] - traj.dx[n - 1][i]) / (2.0 * traj.dt);
            worst = std::max(worst, std::abs(fd - jet.d2[i]));
        }
    }
    CHECK(worst < 1e-6);  // central difference error O(dt^2) at dt = 1e-4
}

TEST_CASE("analytic jet rejects wrong dimensions") {
    std::mt19937_64 rng(32);
    auto m = testsupport::random_stable_model(rng, 3);
    CHECK_THROWS_AS(analytic_jet(m, {0.1, 0.2, 0.3}), ContractViolation);
}

TEST_CASE("the algebraic identity holds along detailed flows") {
    for (std::uint64_t seed : {33u, 34u, 35u}) {
        auto m = stable_pair(seed);
        auto traj = integrate_fixed(m, 10.0, 1e-3);
        double worst_rel = 0.0, worst_y = 0.0;
        for (std::size_t n = 0; n < traj.size(); n += 11) {
            auto res = algebraic_residual_2(m, analytic_jet(m, traj.x[n]));
            worst_rel = std::max(worst_rel, std::abs(res.residual) / res.scale);
            worst_y = std::max(worst_y, std::abs(res.y - traj.x[n][1]) / traj.x[n][1]);
        }
        CHECK(worst_rel < 1e-11);
        CHECK(worst_y < 1e-13);  // y reproduces x2: pure algebra
    }
}

TEST_CASE("the residual is linear in the second derivative") {
    auto m = stable_pair(36);
    StateVector x = {0.6, 0.9};
    auto jet = analytic_jet(m, x);
    const auto base = algebraic_residual_2(m, jet);

    auto perturbed = [&](double delta) {
        DerivativeJet j = jet;
        j.d2[0] += delta;
        return algebraic_residual_2(m, j).residual;
    };
    // two-point measurement of the linear coefficient
    const double c1 = (perturbed(1e-3) - base.residual) / 1e-3;
    const double c2 = (perturbed(2e-3) - base.residual) / 2e-3;
    CHECK(c1 == Catch::Approx(c2).epsilon(1e-10));  // no curvature
    CHECK(c1 == Catch::Approx(1.0 / (m.a(0, 1) * x[0])).epsilon(1e-9));
}

TEST_CASE("finite-difference jets leave a second-order residual") {
    auto m = stable_pair(37);
    auto residual_scale = [&](double dt) {
        auto traj = integrate_fixed(m, 4.0, dt);
        double worst = 0.0;
        for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
            DerivativeJet jet;
            jet.x = traj.x[n];
            jet.d1 = StateVector{(traj.x[n + 1][0] - traj.x[n - 1][0]) / (2.0 * dt),
                                 (traj.x[n + 1][1] - traj.x[n - 1][1]) / (2.0 * dt)};
            jet.d2 = StateVector{
                (traj.x[n + 1][0] - 2.0 * traj.x[n][0] + traj.x[n - 1][0]) / (dt * dt),
                (traj.x[n + 1][1] - 2.0 * traj.x[n][1] + traj.x[n - 1][1]) / (dt * dt)};
            worst = std::max(worst, std::abs(algebraic_residual_2(m, jet).residual));
        }
        return worst;
    };
    const double coarse = residual_scale(2e-3);
    const double fine = residual_scale(1e-3);
    const double ratio = coarse / fine;
    CHECK(ratio > 4.0 / 1.3);
    CHECK(ratio < 4.0 * 1.3);
}

TEST_CASE("algebraic preconditions") {
    auto m = stable_pair(38);
    auto jet = analytic_jet(m, {0.5, 0.5});
    GlvModel blocked = m;
    blocked.a(0, 1) = 0.0;
    CHECK_THROWS_AS(algebraic_residual_2(blocked, jet), InfeasibleError);
    DerivativeJet at_zero = jet;
    at_zero.x[0] = 0.0;
    CHECK_THROWS_AS(algebraic_residual_2(m, at_zero), SingularityError);
}

TEST_CASE("memory and algebraic final equations consume opposite rows") {
    auto m = stable_pair(39);
    auto report = check_reducible(m, {0});
    REQUIRE(report.feasible);
    auto rs = build_reduced_system(m, report.plan);

    const std::vector<CoeffRef> row1 = {{false, 0, 0}, {false, 0, 1}, {true, 0, 0}};
    const std::vector<CoeffRef> row2 = {{false, 1, 0}, {false, 1, 1}, {true, 1, 0}};
    CHECK(retained_equation_provenance(rs, 0) == row1);
    CHECK(algebraic_final_equation_provenance(m) == row2);
}

// --- Lorenz ---------------------------------------------------------------

TEST_CASE("lorenz jets and residuals vanish at fixed points") {
    LorenzParams p{10.0, 28.0, 8.0 / 3.0};
    for (StateVector state : {StateVector{0.0, 0.0, 0.0},
                              StateVector{std::sqrt(p.gamma * (p.beta - 1.0)),
                                          std::sqrt(p.gamma * (p.beta - 1.0)), p.beta - 1.0},
                              StateVector{-std::sqrt(p.gamma * (p.beta - 1.0)),
                                          -std::sqrt(p.gamma * (p.beta - 1.0)), p.beta - 1.0}}) {
        auto jet = lorenz_jet(p, state);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(jet.d1[i]) < 1e-13);
            CHECK(std::abs(jet.d2[i]) < 1e-12);
            CHECK(std::abs((*jet.d3)[i]) < 1e-11);
        }
        if (state[0] != 0.0) {
            auto res = lorenz_residual_3rd(p, jet);
            CHECK(std::abs(res.rederived) < 1e-12);
            CHECK(std::abs(res.printed) < 1e-12);
        }
    }
}

TEST_CASE("lorenz jets match finite differences") {
    LorenzParams p{10.0, 28.0, 8.0 / 3.0};
    const double dt = 1e-5;
    auto traj = rk4_fixed([&p](double, const StateVector& x) { return lorenz_rhs(p, x); },
                          {1.0, 1.0, 1.0}, 1.0, dt, false);
    double worst2 = 0.0, worst3 = 0.0;
    for (std::size_t n = 10; n + 10 < traj.size(); n += 1009) {
        auto jet = lorenz_jet(p, traj.x[n]);
        auto ahead = lorenz_jet(p, traj.x[n + 1]);
        auto behind = lorenz_jet(p, traj.x[n - 1]);
        for (int i = 0; i < 3; ++i) {
            const double fd2 = (ahead.d1[i] - behind.d1[i]) / (2.0 * dt);
            worst2 = std::max(worst2, std::abs(fd2 - jet.d2[i]));
        }
        const double fd3 = (ahead.d2[0] - behind.d2[0]) / (2.0 * dt);
        worst3 = std::max(worst3, std::abs(fd3 - (*jet.d3)[0]));
    }
    // central-difference truncation ~ dt^2/6 * next derivative, which
    // reaches ~1e6..1e7 on this trajectory
    CHECK(worst2 < 1e-3);
    CHECK(worst3 < 1e-1);
}

TEST_CASE("the third-order lorenz equation vanishes along flows") {
    // chaotic and two non-chaotic parameter sets
    for (LorenzParams p : {LorenzParams{10.0, 28.0, 8.0 / 3.0},
                           LorenzParams{10.0, 0.5, 8.0 / 3.0},
                           LorenzParams{10.0, 8.0, 8.0 / 3.0}}) {
        auto traj = rk4_fixed([&p](double, const StateVector& x) { return lorenz_rhs(p, x); },
                              {1.0, 1.0, 1.0}, 10.0, 1e-3, false);
        double max_abs_x = 0.0;
        for (const auto& st : traj.x) max_abs_x = std::max(max_abs_x, std::abs(st[0]));
        double worst = 0.0, worst_diff = 0.0;
        for (std::size_t n = 0; n < traj.size(); n += 7) {
            if (std::abs(traj.x[n][0]) <= 1e-6 * max_abs_x) continue;
            auto res = lorenz_residual_3rd(p, lorenz_jet(p, traj.x[n]));
            worst = std::max(worst, std::abs(res.rederived) / res.scale);
            worst_diff = std::max(worst_diff, std::abs(res.printed - res.rederived));
        }
        CHECK(worst < 1e-9);
        // the printed operator form and the re-derivation agree
        CHECK(worst_diff < 1e-8);
    }
}

TEST_CASE("lorenz residual needs x away from zero and a full jet") {
    LorenzParams p;
    auto jet = lorenz_jet(p, {0.0, 1.0, 1.0});
    CHECK_THROWS_AS(lorenz_residual_3rd(p, jet), SingularityError);
    DerivativeJet partial = lorenz_jet(p, {1.0, 1.0, 1.0});
    partial.d3.reset();
    CHECK_THROWS_AS(lorenz_residual_3rd(p, partial), ContractViolation);
}
