#pragma once

// Shared helpers for the test suites: deterministic random model generation
// and independent numerical oracles. Everything here is test-only and kept
// independent of the implementation paths it checks.

#include <cmath>
#include <random>
#include <vector>

#include "glvred/model.hpp"

namespace testsupport {

/// Competitive, diagonally dominant random model: b in [0.5, 1.5], diagonal
/// in [-1.5, -0.5], off-diagonal in [-0.3, 0.3], x0 in [0.1, 1]. Trajectories
/// stay positive and O(1) on [0, 10].
inline glvred::GlvModel random_stable_model(std::mt19937_64& rng, int S) {
    std::uniform_real_distribution<double> growth(0.5, 1.5);
    std::uniform_real_distribution<double> diagonal(-1.5, -0.5);
    std::uniform_real_distribution<double> off_diagonal(-0.3, 0.3);
    std::uniform_real_distribution<double> initial(0.1, 1.0);
    glvred::GlvModel model;
    model.growth.resize(S);
    model.initial_state.resize(S);
    model.interactions.assign(static_cast<std::size_t>(S) * S, 0.0);
    for (int i = 0; i < S; ++i) {
        model.growth[i] = growth(rng);
        model.initial_state[i] = initial(rng);
        for (int j = 0; j < S; ++j) model.a(i, j) = i == j ? diagonal(rng) : off_diagonal(rng);
    }
    return model;
}

/// Zeroes the canonical required set {(i,j) : s <= i <= S-2, j > i+1}
/// (1-based) so the identity ordering is feasible.
inline void zero_canonical_entries(glvred::GlvModel& model, int s) {
    const int S = model.dimension();
    for (int i = s; i <= S - 2; ++i)
        for (int j = i + 2; j <= S; ++j) model.a(i - 1, j - 1) = 0.0;
}

/// Independent integration of xdot = x (b + a x) with Heun's method. Used to
/// cross-check the closed-form logistic solution with a scheme unrelated to
/// the RK4 production path.
inline double heun_logistic(double b, double a, double x0, double t_end, double dt) {
    const long n = std::lround(t_end / dt);
    double x = x0;
    for (long i = 0; i < n; ++i) {
        const double k1 = x * (b + a * x);
        const double xe = x + dt * k1;
        const double k2 = xe * (b + a * xe);
        x += 0.5 * dt * (k1 + k2);
    }
    return x;
}

/// Max relative deviation between two equally long series with a positive
/// reference.
inline double linf_rel(const std::vector<double>& reference, const std::vector<double>& test) {
    double worst = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
        worst = std::max(worst, std::abs(test[i] - reference[i]) / std::abs(reference[i]));
    return worst;
}

}  // namespace testsupport
