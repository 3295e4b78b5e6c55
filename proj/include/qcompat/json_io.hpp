// Copyright 2026 The qcompat Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

/**
 * @file json_io.hpp
 * JSON encodings. A matrix is a row-major nested array whose entries are
 * [re, im] pairs; an observable is {"dim", "outcomes": [{"label", "effect"}]};
 * a bipartite state is {"dims": [dA, dB], "rho"}.
 */

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "compatibility.hpp"
#include "steering.hpp"

namespace qcompat::io {

using Json = nlohmann::ordered_json;

/// Malformed or unreadable input document.
class FormatError : public Error {
  public:
    using Error::Error;
};

inline Json to_json(const Matrix &m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const Json &j, const std::string &where = "matrix") {
    if (!j.is_array() || j.empty())
        throw FormatError(where + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0)
        throw FormatError(where + ": rows must be non-empty arrays");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw FormatError(where + ": row " + std::to_string(i) + " has the wrong length");
        for (std::size_t k = 0; k < cols; ++k) {
            const Json &e = j[i][k];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw FormatError(where + ": entry (" + std::to_string(i) + "," + std::to_string(k) +
                                  ") must be [re, im]");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

inline Json to_json(const DiscreteObservable &a) {
    Json out = Json::array();
    for (const auto &o : a.outcomes())
        out.push_back({{"label", o.label}, {"effect", to_json(o.effect)}});
    return {{"dim", a.dim()}, {"outcomes", std::move(out)}};
}

/// Parses without validating normalization or positivity; see validate().
inline DiscreteObservable observable_from_json(const Json &j, const Tolerance &tol = {}) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("outcomes"))
        throw FormatError("observable: expected {\"dim\", \"outcomes\"}");
    if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
        throw FormatError("observable: dim must be a positive integer");
    if (!j["outcomes"].is_array())
        throw FormatError("observable: outcomes must be an array");
    std::vector<Outcome> outcomes;
    for (const auto &o : j["outcomes"]) {
        if (!o.is_object() || !o.contains("label") || !o["label"].is_string() || !o.contains("effect"))
            throw FormatError("observable: each outcome needs a string label and an effect");
        const auto label = o["label"].get<std::string>();
        outcomes.push_back({label, matrix_from_json(o["effect"], "effect '" + label + "'")});
    }
    return DiscreteObservable(j["dim"].get<Eigen::Index>(), std::move(outcomes), tol);
}

inline Json to_json(const BipartiteState &s) {
    return {{"dims", {s.dim_a(), s.dim_b()}}, {"rho", to_json(s.rho())}};
}

inline BipartiteState state_from_json(const Json &j, const Tolerance &tol = {}) {
    if (!j.is_object() || !j.contains("dims") || !j.contains("rho"))
        throw FormatError("state: expected {\"dims\", \"rho\"}");
    const Json &d = j["dims"];
    if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer())
        throw FormatError("state: dims must be [dA, dB]");
    return BipartiteState(d[0].get<Eigen::Index>(), d[1].get<Eigen::Index>(), matrix_from_json(j["rho"], "rho"),
                          tol);
}

inline Json to_json(const SubsetMask &m) {
    Json out = Json::array();
    for (auto i : m.indices())
        out.push_back(i);
    return out;
}

/// {"masks": [[...], ...]} with entries given as 0-based indices or outcome labels.
inline std::vector<SubsetMask> masks_from_json(const Json &j, const DiscreteObservable &over) {
    if (!j.is_object() || !j.contains("masks") || !j["masks"].is_array())
        throw FormatError("masks: expected {\"masks\": [[...], ...]}");
    std::vector<SubsetMask> out;
    for (const auto &m : j["masks"]) {
        if (!m.is_array())
            throw FormatError("masks: each mask must be an array");
        SubsetMask mask(over.size());
        for (const auto &e : m) {
            if (e.is_number_integer()) {
                const auto i = e.get<long long>();
                if (i < 0 || static_cast<std::size_t>(i) >= over.size())
                    throw FormatError("masks: index " + std::to_string(i) + " out of range");
                mask.set(static_cast<std::size_t>(i));
            } else if (e.is_string()) {
                const auto idx = over.index_of(e.get<std::string>());
                if (!idx)
                    throw FormatError("masks: unknown label '" + e.get<std::string>() + "'");
                mask.set(*idx);
            } else {
                throw FormatError("masks: entries must be indices or labels");
            }
        }
        out.push_back(std::move(mask));
    }
    return out;
}

inline Json to_json(const JointCertificate &c) {
    Json cells = Json::array();
    for (std::size_t k = 0; k < c.cells.size(); ++k)
        cells.push_back({{"label", c.cell_label(k)}, {"effect", to_json(c.cells[k])}});
    return {{"kind", "joint"},
            {"provenance", c.provenance},
            {"dim", c.dim},
            {"axes", c.axes},
            {"cells", std::move(cells)},
            {"marginal_residuals", c.marginal_residuals}};
}

inline Json to_json(const MotherAssignment &m) {
    Json entries = Json::array();
    for (const auto &e : m.entries)
        entries.push_back({{"source", e.side == Side::A ? "A" : "B"},
                           {"source_mask", to_json(e.source_mask)},
                           {"mother_mask", to_json(e.mother_mask)}});
    return {{"kind", "mother"}, {"mother", to_json(m.mother)}, {"entries", std::move(entries)}, {"residual", m.residual}};
}

inline Json solver_summary(const FeasibilityVerdict &v) {
    Json j = {{"status", to_string(v.status)}, {"iterations", v.iterations}};
    j["residual"] = std::isfinite(v.residual) ? Json(v.residual) : Json(nullptr);
    j["separation_gap"] = std::isfinite(v.separation_gap) ? Json(v.separation_gap) : Json("inf");
    return j;
}

/// Certificate object of a compatibility verdict.
inline Json certificate_json(const CompatibilityVerdict &v) {
    if (v.status == Status::No) {
        Json c = {{"kind", "violated_condition"}, {"condition", v.violated_condition}};
        c["value"] = v.condition_value ? Json(*v.condition_value) : Json(nullptr);
        if (!v.witnesses.empty()) {
            Json failing = Json::array();
            for (const auto &w : v.witnesses)
                if (w.status == Status::No)
                    failing.push_back({{"a_mask", to_json(w.a_mask)}, {"b_mask", to_json(w.b_mask)}});
            c["failing_pairs"] = std::move(failing);
        }
        return c;
    }
    if (v.relation == Relation::BinarizationsJM) {
        Json pairs = Json::array();
        for (const auto &w : v.witnesses) {
            Json p = {{"a_mask", to_json(w.a_mask)}, {"b_mask", to_json(w.b_mask)}, {"status", to_string(w.status)}};
            p["joint"] = w.joint ? to_json(*w.joint) : Json(nullptr);
            pairs.push_back(std::move(p));
        }
        return {{"kind", "binarization_witnesses"}, {"pairs", std::move(pairs)}};
    }
    if (v.mother)
        return to_json(*v.mother);
    if (v.joint)
        return to_json(*v.joint);
    return nullptr;
}

inline Json residuals_json(const CompatibilityVerdict &v) {
    Json r = Json::object();
    if (v.joint)
        r["marginal_residuals"] = v.joint->marginal_residuals;
    if (v.mother)
        r["mother_residual"] = v.mother->residual;
    if (v.solver)
        r["solver"] = solver_summary(*v.solver);
    if (v.relation == Relation::BinarizationsJM) {
        double worst = 0.0;
        for (const auto &w : v.witnesses)
            if (w.joint)
                for (double x : w.joint->marginal_residuals)
                    worst = std::max(worst, x);
        r["max_witness_marginal_residual"] = worst;
    }
    return r;
}

inline Json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw FormatError("'" + path + "': " + e.what());
    }
}

inline void write_json_file(const std::string &path, const Json &j) {
    std::ofstream out(path);
    if (!out)
        throw FormatError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

} // namespace qcompat::io
