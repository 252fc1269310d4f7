#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "glvred/integrate.hpp"
#include "test_support.hpp"

using namespace glvred;

namespace {

GlvModel logistic_model(double b = 1.0, double a = -1.0, double x0 = 0.1) {
    GlvModel m;
    m.growth = {b};
    m.interactions = {a};
    m.initial_state = {x0};
    return m;
}

double max_error_vs_logistic(const Trajectory& traj, double b, double a, double x0) {
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k)
        worst = std::max(worst, std::abs(traj.x[k][0] - logistic_exact(b, a, x0, traj.t[k])));
    return worst;
}

}  // namespace

TEST_CASE("logistic_exact basics") {
    CHECK(logistic_exact(1.0, -1.0, 0.1, 0.0) == 0.1);
    CHECK(logistic_exact(2.0, -0.5, 0.3, 200.0) == Catch::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(logistic_exact(-1.0, -1.0, 0.1, 1.0), ContractViolation);
}

TEST_CASE("logistic_exact agrees with an independent quadrature") {
    // Heun with a tiny step is a different scheme from both the closed form
    // and the production RK4 path.
    const double b = 1.0, a = -1.0, x0 = 0.1;
    const double reference = testsupport::heun_logistic(b, a, x0, 1.0, 1e-6);
    CHECK(std::abs(logistic_exact(b, a, x0, 1.0) - reference) < 1e-10);
}

TEST_CASE("RK4 matches the logistic closed form") {
    auto traj = integrate_fixed(logistic_model(), 10.0, 1e-3);
    CHECK(max_error_vs_logistic(traj, 1.0, -1.0, 0.1) < 1e-8);
}

TEST_CASE("zero dynamics give a constant trajectory") {
    GlvModel m;
    m.growth = {0.0, 0.0};
    m.interactions = {0.0, 0.0, 0.0, 0.0};
    m.initial_state = {0.7, 1.3};
    auto traj = integrate_fixed(m, 1.0, 0.01);
    for (const auto& x : traj.x) {
        CHECK(x[0] == 0.7);
        CHECK(x[1] == 1.3);
    }
}

TEST_CASE("measured convergence order is four") {
    // Steps large enough that truncation dominates roundoff.
    const double coarse = max_error_vs_logistic(integrate_fixed(logistic_model(), 10.0, 0.02),
                                                1.0, -1.0, 0.1);
    const double fine = max_error_vs_logistic(integrate_fixed(logistic_model(), 10.0, 0.01),
                                              1.0, -1.0, 0.1);
    const double order = std::log2(coarse / fine);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
}

TEST_CASE("sample reproduces grid points bit for bit") {
    auto traj = integrate_fixed(logistic_model(), 1.0, 0.01);
    for (std::size_t k = 0; k < traj.size(); k += 7) {
        auto v = sample(traj, traj.t[k]);
        CHECK(v[0] == traj.x[k][0]);
    }
}

TEST_CASE("sample interpolates between nodes at interior accuracy") {
    auto traj = integrate_fixed(logistic_model(), 10.0, 1e-3);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double t = (i + 0.5) * (10.0 / 200.0);
        worst = std::max(worst, std::abs(sample(traj, t)[0] - logistic_exact(1.0, -1.0, 0.1, t)));
    }
    CHECK(worst < 1e-10);

    // Interpolation error itself is fourth order: compare midpoint samples
    // against the closed form on two grids well above the roundoff floor.
    auto coarse = integrate_fixed(logistic_model(), 10.0, 0.04);
    auto fine = integrate_fixed(logistic_model(), 10.0, 0.02);
    auto midpoint_error = [](const Trajectory& tr) {
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
            const double t = 0.5 * (tr.t[k] + tr.t[k + 1]);
            worst = std::max(worst, std::abs(sample(tr, t)[0] - logistic_exact(1.0, -1.0, 0.1, t)));
        }
        return worst;
    };
    const double ratio = midpoint_error(coarse) / midpoint_error(fine);
    CHECK(ratio > 10.0);
    CHECK(ratio < 24.0);
}

TEST_CASE("sample rejects out-of-range times") {
    auto traj = integrate_fixed(logistic_model(), 1.0, 0.01);
    CHECK_THROWS_AS(sample(traj, -0.1), RangeError);
    CHECK_THROWS_AS(sample(traj, traj.t_end() + 0.1), RangeError);
}

TEST_CASE("restarting mid-run matches integrating straight through") {
    auto direct = integrate_fixed(logistic_model(), 10.0, 1e-3);
    auto first = integrate_fixed(logistic_model(), 5.0, 1e-3);
    GlvModel restarted = logistic_model();
    restarted.initial_state = first.x.back();
    auto second = integrate_fixed(restarted, 5.0, 1e-3);

    const double exact = logistic_exact(1.0, -1.0, 0.1, direct.t_end());
    const double err_direct = std::abs(direct.x.back()[0] - exact);
    const double deviation = std::abs(second.x.back()[0] - direct.x.back()[0]);
    CHECK(deviation <= 10.0 * (err_direct + 1e-15));
}

TEST_CASE("positivity breaches abort with time and species") {
    GlvModel m;
    m.growth = {-5.0};
    m.interactions = {0.0};
    m.initial_state = {1.0};
    try {
        (void)integrate_fixed(m, 10.0, 1.0);  // Euler stage undershoots zero
        FAIL("expected a positivity failure");
    } catch (const PositivityError& e) {
        CHECK(e.species == 1);
        CHECK(e.time > 0.0);
    }
}

TEST_CASE("explosions surface as failures instead of silent infinities") {
    GlvModel m;
    m.growth = {100.0};
    m.interactions = {1.0};
    m.initial_state = {1.0};
    CHECK_THROWS_AS(integrate_fixed(m, 10.0, 1.0), PositivityError);
}

TEST_CASE("integrate rejects bad step arguments") {
    CHECK_THROWS_AS(integrate_fixed(logistic_model(), 1.0, 2.0), ContractViolation);
    CHECK_THROWS_AS(integrate_fixed(logistic_model(), 1.0, 0.0), ContractViolation);
}

TEST_CASE("trajectory CSV uses labels and round-trip precision") {
    GlvModel m;
    m.growth = {0.0};
    m.interactions = {0.0};
    m.initial_state = {0.30000000000000004};
    m.labels = std::vector<std::string>{"prey"};
    auto traj = integrate_fixed(m, 0.2, 0.1);
    const std::string csv = trajectory_to_csv(traj);
    CHECK(csv.rfind("t,prey\n", 0) == 0);
    CHECK(csv.find("0.30000000000000004") != std::string::npos);
}
