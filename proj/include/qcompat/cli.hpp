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
 * @file cli.hpp
 * The `qcompat` command line. Every subcommand writes one JSON report to
 * stdout (or --out) and a short prose summary to stderr.
 *
 * Exit codes: 0 analysis completed, 1 a reproduction check failed,
 * 2 malformed input, 3 numerical failure.
 */

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "json_io.hpp"
#include "repro.hpp"

namespace qcompat::cli {

using io::Json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode { kOk = 0, kCheckFailed = 1, kInputError = 2, kNumericalError = 3 };

namespace detail {

struct Settings {
    std::optional<double> tol;
    std::optional<std::size_t> max_iter;
    std::size_t subset_cap = 4096;
    std::size_t max_mother_outcomes = 5;
    std::string out;

    /// Resolves --tol over COMPAT_TOL over the built-in default.
    CompatibilityOptions options() const {
        CompatibilityOptions o;
        if (const char *env = std::getenv("COMPAT_TOL"); env && *env) {
            char *end = nullptr;
            const double v = std::strtod(env, &end);
            if (end == env || *end != '\0' || !(v > 0.0))
                throw io::FormatError(std::string("COMPAT_TOL is not a positive number: '") + env + "'");
            o.solver.feas_tol = v;
        }
        if (tol) {
            if (!(*tol > 0.0))
                throw io::FormatError("--tol must be positive");
            o.solver.feas_tol = *tol;
        }
        if (max_iter)
            o.solver.max_iter = *max_iter;
        o.subset_cap = subset_cap;
        o.max_mother_outcomes = max_mother_outcomes;
        return o;
    }
};

inline Json parameters_json(const CompatibilityOptions &o) {
    return {{"feas_tol", o.solver.feas_tol},
            {"max_iter", o.solver.max_iter},
            {"eig_tol", o.tol().eig_tol},
            {"eq_tol", o.tol().eq_tol},
            {"subset_cap", o.subset_cap},
            {"max_mother_outcomes", o.max_mother_outcomes}};
}

inline DiscreteObservable load_observable(const std::string &path, const Tolerance &tol) {
    return io::observable_from_json(io::read_json_file(path), tol);
}

/// Loads and requires a valid observable.
inline DiscreteObservable load_valid(const std::string &path, const Tolerance &tol) {
    auto o = load_observable(path, tol);
    const auto rep = validate(o, tol);
    if (!rep.passes)
        throw io::FormatError("'" + path + "' is not a valid observable (normalization residual " +
                              std::to_string(rep.normalization_residual) + ")");
    return o;
}

/// What a subcommand produces.
struct Report {
    Json relation = nullptr;
    std::string status;
    Json certificate = nullptr;
    Json residuals = Json::object();
    Json extra = Json::object();
    std::string summary;
    int exit_code = kOk;
};

inline Report from_verdict(const CompatibilityVerdict &v, const std::string &what) {
    Report o;
    o.relation = to_string(v.relation);
    o.status = to_string(v.status);
    o.certificate = io::certificate_json(v);
    o.residuals = io::residuals_json(v);
    if (!v.notes.empty())
        o.extra["notes"] = v.notes;
    o.summary = what + ": " + o.status;
    if (v.status == Status::No)
        o.summary += " (" + v.violated_condition + ")";
    return o;
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

} // namespace detail

/**
 * Runs one command line (without the program name). Returns the exit code.
 */
inline int run_command(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    using namespace detail;
    CLI::App app{"Compatibility of finite-outcome quantum observables", "qcompat"};
    app.require_subcommand(1);
    Settings settings;
    app.add_option("--tol", settings.tol, "Feasibility tolerance (overrides COMPAT_TOL)");
    app.add_option("--max-iter", settings.max_iter, "Solver iteration limit");
    app.add_option("--subset-cap", settings.subset_cap, "Largest 2^n for full subset enumeration");
    app.add_option("--max-mother-outcomes", settings.max_mother_outcomes, "Mother search size bound");
    app.add_option("--out", settings.out, "Write the JSON report to this file instead of stdout");

    std::string command;
    Json params = Json::object();

    auto sub = [&](const std::string &name, const std::string &help) {
        CLI::App *s = app.add_subcommand(name, help);
        s->fallthrough();
        s->callback([&command, name] { command = name; });
        return s;
    };

    std::string path_a, path_b, path_m, path_masks, path_extreme_a, path_state, fixtures_dir;
    std::vector<std::string> measurement_paths;
    std::vector<double> pa, pb;

    auto *validate_cmd = sub("validate", "Validate an observable");
    validate_cmd->add_option("A", path_a)->required();
    auto *dilate_cmd = sub("dilate", "Minimal Naimark dilation");
    dilate_cmd->add_option("A", path_a)->required();
    auto *extreme_cmd = sub("extreme", "Extremality test");
    extreme_cmd->add_option("A", path_a)->required();
    auto *jm_cmd = sub("jm", "Joint measurability");
    jm_cmd->add_option("A", path_a)->required();
    jm_cmd->add_option("B", path_b)->required();
    auto *bins_cmd = sub("binarizations-jm", "Joint measurability of all binarization pairs");
    bins_cmd->add_option("A", path_a)->required();
    bins_cmd->add_option("B", path_b)->required();
    auto *coexist_cmd = sub("coexist", "Coexistence");
    coexist_cmd->add_option("A", path_a)->required();
    coexist_cmd->add_option("B", path_b)->required();
    auto *mother_cmd = sub("mother-joint", "Joint observable built from a mother observable");
    mother_cmd->add_option("M", path_m)->required();
    mother_cmd->add_option("--masks", path_masks, "{\"masks\": [[...], ...]} over M's outcomes")->required();
    mother_cmd->add_option("--extreme-a", path_extreme_a, "Extreme observable realized by the masks");
    auto *relabel_cmd = sub("relabel-find", "Find f with A = M o f^-1");
    relabel_cmd->add_option("A", path_a)->required();
    relabel_cmd->add_option("M", path_m)->required();
    auto *post_cmd = sub("postprocess-find", "Find a stochastic matrix with A = beta(M)");
    post_cmd->add_option("A", path_a)->required();
    post_cmd->add_option("M", path_m)->required();
    auto *threshold_cmd = sub("jm-threshold", "Largest white-noise visibility with a joint observable");
    threshold_cmd->add_option("A", path_a)->required();
    threshold_cmd->add_option("B", path_b)->required();
    threshold_cmd->add_option("--pa", pa, "Noise distribution for A (default uniform)");
    threshold_cmd->add_option("--pb", pb, "Noise distribution for B (default uniform)");
    auto *steer_cmd = sub("steer", "Steerability of a bipartite state with Alice's measurements");
    steer_cmd->add_option("state", path_state)->required();
    steer_cmd->add_option("measurements", measurement_paths)->required();
    auto *repro_cmd = sub("repro-paper", "Run the reproduction suite");
    repro_cmd->add_option("--fixtures", fixtures_dir, "Directory with E.json and F.json replacing the built-ins");
    auto *export_cmd = sub("export-fixtures", "Write the fixture set as JSON files");
    export_cmd->add_option("dir", fixtures_dir)->required();

    auto error_report = [&](const char *kind, const std::string &message, int code) {
        Json doc = {{"schema_version", kSchemaVersion},
                    {"command", command.empty() ? Json(nullptr) : Json(command)},
                    {"parameters", params},
                    {"status", "ERROR"},
                    {"error", {{"kind", kind}, {"message", message}}}};
        out << doc.dump(2) << '\n';
        err << "error: " << message << '\n';
        return code;
    };

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError &e) {
        return error_report("usage", e.what(), kInputError);
    }

    const auto t0 = std::chrono::steady_clock::now();
    Report result;
    try {
        const auto opt = settings.options();
        const auto &tol = opt.tol();
        params = parameters_json(opt);

        if (command == "validate") {
            params["A"] = path_a;
            const auto a = load_observable(path_a, tol);
            const auto rep = validate(a, tol);
            Json effects = Json::array();
            for (const auto &e : rep.effects)
                effects.push_back({{"label", e.label},
                                   {"min_eigenvalue", e.min_eigenvalue},
                                   {"max_eigenvalue", e.max_eigenvalue},
                                   {"hermiticity_defect", e.hermiticity_defect},
                                   {"is_effect", e.is_effect}});
            result.status = rep.passes ? "PASS" : "FAIL";
            result.certificate = {{"effects", effects}, {"null_labels", rep.null_labels},
                                  {"strict_passes", rep.strict_passes()}, {"is_pvm", rep.passes && is_pvm(a, tol)}};
            result.residuals = {{"normalization_residual", rep.normalization_residual}};
            result.summary = "validate: " + result.status + " (normalization residual " +
                             fmt(rep.normalization_residual) + ")";
        } else if (command == "dilate") {
            params["A"] = path_a;
            const auto a = load_valid(path_a, tol);
            const auto d = dilate_minimal(a, tol);
            const auto diag = verify_dilation(a, d);
            Json blocks = Json::array();
            for (const auto &p : d.blocks)
                blocks.push_back(io::to_json(p));
            result.status = diag.ok(1e-10) ? "PASS" : "FAIL";
            result.certificate = {{"dilation_dim", d.dilation_dim}, {"ranks", d.ranks},
                                  {"J", io::to_json(d.isometry)}, {"blocks", blocks}};
            result.residuals = {{"isometry", diag.isometry_residual},
                                {"orthogonality", diag.orthogonality_residual},
                                {"reconstruction", diag.reconstruction_residual},
                                {"rank_sum", diag.rank_sum},
                                {"span_rank", diag.span_rank},
                                {"minimal", diag.minimal}};
            result.summary = "dilate: dim K = " + std::to_string(d.dilation_dim);
        } else if (command == "extreme") {
            params["A"] = path_a;
            const auto a = load_valid(path_a, tol);
            const auto rep = is_extreme(a, tol);
            Json basis = Json::array(), perturbations = Json::array();
            for (std::size_t k = 0; k < rep.kernel_dim; ++k) {
                basis.push_back(io::to_json(rep.kernel_basis[k]));
                Json per = Json::array();
                for (const auto &p : rep.perturbation(k))
                    per.push_back(io::to_json(p));
                perturbations.push_back(std::move(per));
            }
            result.status = rep.is_extreme ? "YES" : "NO";
            result.certificate = {{"is_extreme", rep.is_extreme}, {"kernel_dim", rep.kernel_dim},
                                  {"kernel_basis", basis}, {"perturbations", perturbations}};
            result.summary = std::string("extreme: ") + (rep.is_extreme ? "extreme" : "not extreme") +
                             " (kernel dimension " + std::to_string(rep.kernel_dim) + ")";
        } else if (command == "jm" || command == "binarizations-jm" || command == "coexist") {
            params["A"] = path_a;
            params["B"] = path_b;
            const auto a = load_valid(path_a, tol), b = load_valid(path_b, tol);
            const auto v = command == "jm"                 ? jm_check(a, b, opt)
                           : command == "binarizations-jm" ? binarization_jm_all(a, b, opt)
                                                           : coexistence_check(a, b, opt);
            result = from_verdict(v, command);
        } else if (command == "mother-joint") {
            params["M"] = path_m;
            params["masks"] = path_masks;
            const auto m = load_valid(path_m, tol);
            const auto masks = io::masks_from_json(io::read_json_file(path_masks), m);
            result.relation = "JM";
            if (path_extreme_a.empty()) {
                const auto n = joint_from_mother_binary(m, masks, tol);
                result.status = "YES";
                result.certificate = io::to_json(n);
                result.residuals = {{"marginal_residuals", n.marginal_residuals}};
            } else {
                params["extreme_a"] = path_extreme_a;
                const auto a = load_valid(path_extreme_a, tol);
                const auto r = extreme_joint_with_mother(a, m, masks, opt);
                result.status = r.applicable ? "YES" : "NOT_APPLICABLE";
                result.certificate = r.joint ? io::to_json(*r.joint) : Json(nullptr);
                result.residuals = {{"overlap_norm", r.overlap_norm},
                                    {"dilation_residual", r.dilation_residual},
                                    {"dilation_order_violation", r.dilation_order_violation}};
                if (r.joint)
                    result.residuals["marginal_residuals"] = r.joint->marginal_residuals;
                if (!r.applicable)
                    result.extra["reason"] = r.reason;
            }
            result.summary = "mother-joint: " + result.status;
        } else if (command == "relabel-find") {
            params["A"] = path_a;
            params["M"] = path_m;
            const auto a = load_valid(path_a, tol), m = load_valid(path_m, tol);
            const auto f = relabeling_finder(a, m, tol);
            result.relation = "RELABELING";
            result.status = f ? "YES" : "NO";
            if (f) {
                Json map = Json::object();
                for (std::size_t z = 0; z < m.size(); ++z)
                    map[m.label(z)] = f->targets()[(*f)(z)];
                result.certificate = {{"kind", "relabeling"}, {"map", map}};
                const auto back = relabel(m, *f, tol);
                double res = 0.0;
                for (std::size_t x = 0; x < a.size(); ++x) {
                    const auto i = back.index_of(a.label(x));
                    res = std::max(res, distance(i ? back.effect(*i) : zeros(a.dim()), a.effect(x)));
                }
                result.residuals = {{"reconstruction", res}};
            }
            result.extra["mother_extreme"] = is_extreme(m, tol).is_extreme;
            result.summary = "relabel-find: " + result.status;
        } else if (command == "postprocess-find") {
            params["A"] = path_a;
            params["M"] = path_m;
            const auto a = load_valid(path_a, tol), m = load_valid(path_m, tol);
            const auto r = post_processing_finder(a, m, opt);
            result.relation = "POST_PROCESSING";
            result.status = r.kernel ? "YES" : (r.solver.status == FeasibilityStatus::NumericallyInfeasible ? "NO"
                                                                                                              : "UNDECIDED");
            if (r.kernel) {
                Json rows = Json::array();
                for (Eigen::Index z = 0; z < r.kernel->rows(); ++z) {
                    Json row = Json::array();
                    for (Eigen::Index x = 0; x < r.kernel->cols(); ++x)
                        row.push_back((*r.kernel)(z, x));
                    rows.push_back(std::move(row));
                }
                result.certificate = {{"kind", "stochastic_matrix"},
                                      {"rows", m.labels()},
                                      {"columns", r.kernel->target_labels()},
                                      {"beta", rows}};
                result.residuals["reconstruction"] = r.reconstruction_residual;
            }
            result.residuals["solver"] = io::solver_summary(r.solver);
            result.extra["mother_extreme"] = r.mother_extreme;
            result.summary = "postprocess-find: " + result.status;
        } else if (command == "jm-threshold") {
            params["A"] = path_a;
            params["B"] = path_b;
            const auto a = load_valid(path_a, tol), b = load_valid(path_b, tol);
            const auto qa = pa.empty() ? uniform(a.size()) : pa;
            const auto qb = pb.empty() ? uniform(b.size()) : pb;
            params["pa"] = qa;
            params["pb"] = qb;
            const auto t = jm_threshold(a, b, qa, qb, opt);
            Json trace = Json::array();
            for (const auto &[eta, s] : t.trace)
                trace.push_back({{"eta", eta}, {"status", to_string(s)}});
            result.relation = "JM";
            result.status = "COMPLETED";
            result.certificate = {{"kind", "threshold"}, {"eta", t.eta}, {"trace", trace}};
            result.summary = "jm-threshold: eta = " + fmt(t.eta);
        } else if (command == "steer") {
            params["state"] = path_state;
            params["measurements"] = measurement_paths;
            const auto rho = io::state_from_json(io::read_json_file(path_state), tol);
            std::vector<DiscreteObservable> ms;
            for (const auto &p : measurement_paths)
                ms.push_back(load_valid(p, tol));
            const auto v = steerable(rho, ms, opt.solver);
            result.relation = "STEERING";
            result.status = to_string(v.status);
            result.residuals = {{"solver", io::solver_summary(v.lhs.solver)},
                                {"no_signaling_defect", v.assemblage.signaling_defect()}};
            if (v.lhs.model) {
                Json models = Json::array();
                for (std::size_t l = 0; l < v.lhs.model->strategies.size(); ++l)
                    models.push_back({{"strategy", v.lhs.model->strategies[l]},
                                      {"rho", io::to_json(v.lhs.model->states[l])}});
                result.certificate = {{"kind", "lhs_model"}, {"states", models}};
                result.residuals["lhs_reconstruction"] = v.lhs.reconstruction_residual;
            } else if (v.status == SteeringStatus::Steerable) {
                result.certificate = {{"kind", "separation_gap"}, {"gap", v.lhs.solver.separation_gap}};
            }
            result.summary = "steer: " + result.status;
        } else if (command == "repro-paper") {
            repro::Inputs in;
            in.options = opt;
            if (!fixtures_dir.empty()) {
                params["fixtures"] = fixtures_dir;
                const std::filesystem::path dir(fixtures_dir);
                if (std::filesystem::exists(dir / "E.json"))
                    in.e = load_observable((dir / "E.json").string(), tol);
                if (std::filesystem::exists(dir / "F.json"))
                    in.f = load_observable((dir / "F.json").string(), tol);
            }
            const auto results = repro::reproduce(in);
            Json table = Json::array();
            bool all = true;
            std::ostringstream prose;
            for (const auto &r : results) {
                const std::string st = r.pass ? "PASS" : (r.undecided ? "UNDECIDED" : "FAIL");
                Json values = Json::object();
                for (const auto &[k, v] : r.values)
                    values[k] = v;
                table.push_back({{"criterion", r.id}, {"name", r.name}, {"status", st},
                                 {"values", values}, {"details", r.details}});
                all = all && r.pass;
                prose << "  [" << st << "] " << r.id << ". " << r.name << '\n';
                for (const auto &d : r.details)
                    prose << "        " << d << '\n';
            }
            result.status = all ? "PASS" : "FAIL";
            result.certificate = {{"kind", "criteria"}, {"criteria", table}};
            result.summary = "repro-paper: " + result.status + "\n" + prose.str();
            result.exit_code = all ? kOk : kCheckFailed;
        } else if (command == "export-fixtures") {
            params["dir"] = fixtures_dir;
            const std::filesystem::path dir(fixtures_dir);
            std::filesystem::create_directories(dir);
            Json written = Json::array();
            for (const auto &[name, o] : fixtures::observables()) {
                io::write_json_file((dir / (name + ".json")).string(), io::to_json(o));
                written.push_back(name + ".json");
            }
            for (const auto &[name, s] : fixtures::states()) {
                io::write_json_file((dir / (name + ".json")).string(), io::to_json(s));
                written.push_back(name + ".json");
            }
            io::write_json_file((dir / "EF_mother_masks.json").string(), Json{{"masks", {{0}, {1}}}});
            written.push_back("EF_mother_masks.json");
            result.status = "COMPLETED";
            result.certificate = {{"kind", "files"}, {"files", written}};
            result.summary = "export-fixtures: wrote " + std::to_string(written.size()) + " files";
        }
    } catch (const io::FormatError &e) {
        return error_report("input", e.what(), kInputError);
    } catch (const DimensionError &e) {
        return error_report("dimension", e.what(), kInputError);
    } catch (const PreconditionError &e) {
        return error_report("precondition", e.what(), kInputError);
    } catch (const NotPsdError &e) {
        return error_report("not_psd", e.what(), kInputError);
    } catch (const OrderError &e) {
        return error_report("order", e.what(), kInputError);
    } catch (const std::exception &e) {
        return error_report("numerical", e.what(), kNumericalError);
    }

    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    Json doc = {{"schema_version", kSchemaVersion},
                {"command", command},
                {"parameters", params},
                {"relation", result.relation},
                {"status", result.status},
                {"certificate", result.certificate},
                {"residuals", result.residuals}};
    for (auto &[k, v] : result.extra.items())
        doc[k] = v;
    doc["runtime_ms"] = ms;
    try {
        if (settings.out.empty())
            out << doc.dump(2) << '\n';
        else
            io::write_json_file(settings.out, doc);
    } catch (const io::FormatError &e) {
        return error_report("output", e.what(), kInputError);
    }
    err << result.summary << '\n';
    return result.exit_code;
}

} // namespace qcompat::cli
