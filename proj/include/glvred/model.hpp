#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glvred/errors.hpp"
#include "glvred/io.hpp"

namespace glvred {

using StateVector = std::vector<double>;

/// Generalized Lotka-Volterra model: S interacting species with per-capita
/// growth rates b and quadratic interaction coefficients A,
///
///     dx_i/dt = x_i (b_i + sum_j A[i][j] x_j).
///
/// Concentrations are dimensionless. Instances are immutable by convention
/// after construction and safe to share across threads.
struct GlvModel {
    std::vector<double> growth;                         // b, length S
    std::vector<double> interactions;                   // A, row-major S*S
    std::vector<double> initial_state;                  // x0, length S
    std::optional<std::vector<std::string>> labels;     // optional names

    [[nodiscard]] int dimension() const { return static_cast<int>(growth.size()); }

    /// Interaction coefficient a_ij, 0-based.
    [[nodiscard]] double a(int i, int j) const {
        return interactions[static_cast<std::size_t>(i) * growth.size() + j];
    }
    double& a(int i, int j) {
        return interactions[static_cast<std::size_t>(i) * growth.size() + j];
    }

    /// Species display name: user label if present, else "x<i+1>".
    [[nodiscard]] std::string label(int i) const {
        if (labels && i >= 0 && i < static_cast<int>(labels->size())) return (*labels)[i];
        return "x" + std::to_string(i + 1);
    }
};

/// Checks every model invariant; returns all violations found (empty = valid).
[[nodiscard]] inline std::vector<ModelViolation> validate(const GlvModel& model) {
    std::vector<ModelViolation> out;
    const auto S = model.growth.size();
    if (S == 0) out.push_back({"b", 0, "model has zero species"});
    if (model.initial_state.size() != S)
        out.push_back({"x0", 0,
                       "dimension mismatch: x0 has " + std::to_string(model.initial_state.size()) +
                           " entries, b has " + std::to_string(S)});
    if (model.interactions.size() != S * S)
        out.push_back({"A", 0,
                       "dimension mismatch: A has " + std::to_string(model.interactions.size()) +
                           " entries, expected " + std::to_string(S * S)});
    if (model.labels && model.labels->size() != S)
        out.push_back({"labels", 0,
                       "dimension mismatch: " + std::to_string(model.labels->size()) +
                           " labels for " + std::to_string(S) + " species"});
    for (std::size_t i = 0; i < model.growth.size(); ++i)
        if (!std::isfinite(model.growth[i]))
            out.push_back({"b", static_cast<int>(i) + 1, "b[" + std::to_string(i + 1) + "] not finite"});
    for (std::size_t i = 0; i < model.interactions.size(); ++i)
        if (!std::isfinite(model.interactions[i])) {
            int r = static_cast<int>(i / (S ? S : 1)) + 1;
            int c = static_cast<int>(i % (S ? S : 1)) + 1;
            out.push_back({"A", r,
                           "A[" + std::to_string(r) + "][" + std::to_string(c) + "] not finite"});
        }
    for (std::size_t i = 0; i < model.initial_state.size(); ++i) {
        if (!std::isfinite(model.initial_state[i]))
            out.push_back({"x0", static_cast<int>(i) + 1, "x0[" + std::to_string(i + 1) + "] not finite"});
        else if (model.initial_state[i] <= 0.0)
            out.push_back({"x0", static_cast<int>(i) + 1, "x0[" + std::to_string(i + 1) + "] not positive"});
    }
    return out;
}

[[nodiscard]] inline bool is_valid(const GlvModel& model) { return validate(model).empty(); }

inline void require_valid(const GlvModel& model) {
    auto violations = validate(model);
    if (violations.empty()) return;
    std::string msg = "invalid model:";
    for (const auto& v : violations) msg += "\n  - " + v.message;
    throw ValidationError(msg, std::move(violations));
}

/// Right-hand side d_i = x_i (b_i + sum_j a_ij x_j).
[[nodiscard]] inline StateVector rhs(const GlvModel& model, const StateVector& x) {
    const int S = model.dimension();
    if (static_cast<int>(x.size()) != S)
        throw ContractViolation("rhs: state has " + std::to_string(x.size()) +
                                " entries for a " + std::to_string(S) + "-species model");
    for (int i = 0; i < S; ++i)
        if (!std::isfinite(x[i]))
            throw ContractViolation("rhs: state entry " + std::to_string(i + 1) + " not finite");
    StateVector d(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i) {
        double acc = model.growth[i];
        for (int j = 0; j < S; ++j) acc += model.a(i, j) * x[j];
        d[i] = x[i] * acc;
    }
    return d;
}

// --- JSON model document -----------------------------------------------
//
// {"b": [...], "A": [[...], ...], "x0": [...], "labels": [...]?}
// Row i of "A" holds a_i1..a_iS. Unknown keys are rejected.

namespace detail {
inline std::vector<double> number_array(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array()) throw ParseError("field '" + key + "' must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_number()) throw ParseError("field '" + key + "' must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}
}  // namespace detail

[[nodiscard]] inline GlvModel model_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("model document must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "b" && key != "A" && key != "x0" && key != "labels")
            throw ParseError("unknown key '" + key + "' in model document");
    }
    for (const char* key : {"b", "A", "x0"})
        if (!doc.contains(key)) throw ParseError(std::string("model document missing field '") + key + "'");

    GlvModel model;
    model.growth = detail::number_array(doc.at("b"), "b");
    const std::size_t S = model.growth.size();

    const auto& a = doc.at("A");
    if (!a.is_array()) throw ParseError("field 'A' must be an array of rows");
    if (a.size() != S)
        throw ParseError("field 'A' has " + std::to_string(a.size()) + " rows, expected " +
                         std::to_string(S));
    model.interactions.reserve(S * S);
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto row = detail::number_array(a.at(i), "A");
        if (row.size() != S)
            throw ParseError("row " + std::to_string(i + 1) + " of 'A' has " +
                             std::to_string(row.size()) + " entries, expected " + std::to_string(S));
        model.interactions.insert(model.interactions.end(), row.begin(), row.end());
    }

    model.initial_state = detail::number_array(doc.at("x0"), "x0");

    if (doc.contains("labels")) {
        const auto& ls = doc.at("labels");
        if (!ls.is_array()) throw ParseError("field 'labels' must be an array of strings");
        std::vector<std::string> labels;
        for (const auto& e : ls) {
            if (!e.is_string()) throw ParseError("field 'labels' must contain only strings");
            labels.push_back(e.get<std::string>());
        }
        model.labels = std::move(labels);
    }
    return model;
}

/// Parses and validates a model document. Throws ParseError (with byte
/// position for malformed JSON) or ValidationError.
[[nodiscard]] inline GlvModel load_model(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model parse error: ") + e.what());
    }
    GlvModel model = model_from_json(doc);
    require_valid(model);
    return model;
}

[[nodiscard]] inline nlohmann::ordered_json model_to_json(const GlvModel& model) {
    const int S = model.dimension();
    nlohmann::ordered_json doc;
    doc["b"] = model.growth;
    auto rows = nlohmann::ordered_json::array();
    for (int i = 0; i < S; ++i) {
        auto row = nlohmann::ordered_json::array();
        for (int j = 0; j < S; ++j) row.push_back(model.a(i, j));
        rows.push_back(std::move(row));
    }
    doc["A"] = std::move(rows);
    doc["x0"] = model.initial_state;
    if (model.labels) doc["labels"] = *model.labels;
    return doc;
}

[[nodiscard]] inline std::string save_model(const GlvModel& model) {
    return model_to_json(model).dump(2) + "\n";
}

}  // namespace glvred
