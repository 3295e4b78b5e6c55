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
 * @file repro.hpp
 * The reproduction suite: numbered checks over the fixture set, each
 * returning its measured values next to the pass/fail decision.
 */

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "compatibility.hpp"
#include "fixtures.hpp"
#include "random.hpp"

namespace qcompat::repro {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    /// Some solver step ended UNDECIDED.
    bool undecided = false;
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::string> details;
    double runtime_ms = 0.0;

    void value(std::string key, double v) { values.emplace_back(std::move(key), v); }
    /// Records a sub-check; the criterion passes only if all of them do.
    bool check(bool ok, const std::string &what) {
        if (!ok)
            details.push_back("failed: " + what);
        pass = pass && ok;
        return ok;
    }
};

/// Inputs of the suite; E and F may be replaced by loaded files.
struct Inputs {
    DiscreteObservable e = fixtures::E();
    DiscreteObservable f = fixtures::F();
    CompatibilityOptions options{};
};

namespace detail {

inline CriterionResult run(int id, std::string name, const std::function<void(CriterionResult &)> &body) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    r.pass = true;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception &ex) {
        r.pass = false;
        r.details.push_back(std::string("error: ") + ex.what());
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline bool require_fixture(CriterionResult &r, const DiscreteObservable &o, const std::string &name,
                            const Tolerance &tol) {
    const auto rep = validate(o, tol);
    r.value(name + ".normalization_residual", rep.normalization_residual);
    return r.check(rep.passes, name + " is a valid observable");
}

inline bool eq(double a, double b, double tol) { return std::abs(a - b) <= tol; }

} // namespace detail

/// Eigenvalue arithmetic of the counterexample effects.
inline CriterionResult counterexample_arithmetic(const Inputs &in) {
    return detail::run(1, "counterexample arithmetic", [&](CriterionResult &r) {
        const auto &tol = in.options.tol();
        if (!detail::require_fixture(r, in.e, "E", tol) || !detail::require_fixture(r, in.f, "F", tol))
            return;
        r.check(in.e.size() == 3 && in.f.size() == 2, "E has 3 outcomes and F has 2");
        const Matrix &f1 = in.f.effect(0);
        const double top = max_eigenvalue(in.e.effect(0) + in.e.effect(1) + f1);
        r.value("max_eig(E1+E2+F1)", top);
        r.check(detail::eq(top, 8.0 / 7.0, 1e-12), "max_eig(E1+E2+F1) = 8/7");
        for (std::size_t i = 0; i < 3; ++i) {
            const Matrix s = in.e.effect(i) + f1;
            r.value("max_eig(E" + std::to_string(i + 1) + "+F1)", max_eigenvalue(s));
            r.check(loewner_leq(s, identity(in.e.dim()), tol), "E" + std::to_string(i + 1) + "+F1 <= I");
        }
        r.check(detail::eq(max_eigenvalue(in.e.effect(2) + f1), 1.0, 1e-12), "max_eig(E3+F1) = 1");
    });
}

/// Binarizations of (E, F) are jointly measurable, E and F are not coexistent.
inline CriterionResult hierarchy_separation(const Inputs &in) {
    return detail::run(2, "hierarchy separation", [&](CriterionResult &r) {
        const auto &opt = in.options;
        if (!detail::require_fixture(r, in.e, "E", opt.tol()) || !detail::require_fixture(r, in.f, "F", opt.tol()))
            return;
        const auto bins = binarization_jm_all(in.e, in.f, opt);
        r.check(bins.status == Status::Yes, "binarization_jm_all(E,F) = YES");
        double worst = 0.0;
        std::size_t solver_feasible = 0, solver_undecided = 0, solver_infeasible = 0;
        for (const auto &w : bins.witnesses) {
            if (!r.check(w.joint.has_value(), "witness joint present"))
                continue;
            const auto ex = binarize(in.e, w.a_mask, opt.tol());
            const auto fy = binarize(in.f, w.b_mask, opt.tol());
            const auto res = marginal_residuals(*w.joint, {ex, fy});
            worst = std::max({worst, res[0], res[1]});
            r.check(w.joint->min_cell_eigenvalue() >= -opt.tol().eig_tol, "witness cells are PSD");
            // independent route through the feasibility engine
            const auto sol = dykstra_solve(qcompat::detail::jm_problem(ex, fy), opt.solver);
            if (sol.status == FeasibilityStatus::Feasible)
                ++solver_feasible;
            else if (sol.status == FeasibilityStatus::Undecided)
                ++solver_undecided;
            else
                ++solver_infeasible;
        }
        r.value("binarization_pairs", static_cast<double>(bins.witnesses.size()));
        r.value("max_witness_marginal_residual", worst);
        r.value("solver_feasible_pairs", static_cast<double>(solver_feasible));
        r.value("solver_undecided_pairs", static_cast<double>(solver_undecided));
        r.value("solver_infeasible_pairs", static_cast<double>(solver_infeasible));
        r.check(worst <= 1e-7, "witness marginal residuals <= 1e-7");
        r.undecided = solver_undecided > 0;
        r.check(solver_undecided == 0, "solver cross-check decided every binarization pair");
        r.check(solver_infeasible == 0, "solver cross-check found every binarization pair feasible");

        const auto co = coexistence_check(in.e, in.f, opt);
        r.check(co.status == Status::No, "coexistence_check(E,F) = NO");
        r.check(co.violated_condition.rfind("rank-one packing", 0) == 0, "NO is due to the rank-one packing bound");
        if (co.condition_value) {
            r.value("rank1_max_eigenvalue", *co.condition_value);
            r.check(detail::eq(*co.condition_value, 8.0 / 7.0, 1e-12), "reported max eigenvalue = 8/7");
        }
    });
}

/// The C^3 example: A, B sharp and non-commuting; A_rel commutes with B.
inline CriterionResult c3_example(const Inputs &in) {
    return detail::run(3, "C3 sharp example", [&](CriterionResult &r) {
        const auto a = fixtures::A(), b = fixtures::B(), a_rel = fixtures::A_rel();
        const auto ab = jm_check(a, b, in.options);
        r.check(ab.status == Status::No, "jm_check(A,B) = NO");
        r.check(!ab.solver.has_value(), "decided by the sharp-observable shortcut");
        r.check(commutes(a_rel, b, in.options.tol()), "A_rel commutes with B");
        const auto rb = jm_check(a_rel, b, in.options);
        r.check(rb.status == Status::Yes && rb.joint && rb.joint->provenance == "product",
                "jm_check(A_rel,B) = YES with the product joint");
        if (rb.joint) {
            const auto res = marginal_residuals(*rb.joint, {a_rel, b});
            r.value("product_joint_marginal_residual", std::max(res[0], res[1]));
            r.check(std::max(res[0], res[1]) <= 1e-10, "product joint marginal residuals <= 1e-10");
        }
    });
}

/// Joints built from mother observables.
inline CriterionResult mother_constructions(const Inputs &in) {
    return detail::run(4, "mother constructions", [&](CriterionResult &r) {
        const auto &tol = in.options.tol();
        if (!detail::require_fixture(r, in.e, "E", tol) || !detail::require_fixture(r, in.f, "F", tol))
            return;
        const Matrix &e1 = in.e.effect(0), &f1 = in.f.effect(0);
        const DiscreteObservable m(in.e.dim(), {{"x", e1}, {"y", f1}, {"rest", identity(in.e.dim()) - e1 - f1}}, tol);
        const std::vector<SubsetMask> masks = {SubsetMask::from_indices(3, {0}), SubsetMask::from_indices(3, {1})};
        const auto n = joint_from_mother_binary(m, masks, tol);
        const double res = std::max({distance(n.marginal(0, 0), e1), distance(n.marginal(0, 1), identity(2) - e1),
                                     distance(n.marginal(1, 0), f1), distance(n.marginal(1, 1), in.f.effect(1))});
        r.value("mother_binary_residual", res);
        r.check(res <= 1e-10, "joint_from_mother_binary reproduces binarize(E,{1}) and F");
        r.check(n.cells[0].norm() == 0.0, "N(+,+) = 0 for disjoint masks");

        double diag = 0.0;
        for (const auto &pvm : {fixtures::A(), fixtures::B(), fixtures::sigma_z()}) {
            std::vector<SubsetMask> z;
            for (std::size_t i = 0; i < pvm.size(); ++i)
                z.push_back(SubsetMask::from_indices(pvm.size(), {i}));
            const auto out = extreme_joint_with_mother(pvm, pvm, z, in.options);
            if (!r.check(out.applicable && out.joint, "extreme_joint_with_mother applicable on a PVM"))
                continue;
            for (std::size_t c = 0; c < out.joint->cells.size(); ++c) {
                const auto t = out.joint->tuple_of(c);
                const Matrix expect = t[0] == t[1] ? pvm.effect(t[0]) : zeros(pvm.dim());
                diag = std::max(diag, distance(out.joint->cells[c], expect));
            }
        }
        r.value("extreme_mother_diagonal_deviation", diag);
        r.check(diag == 0.0, "extreme_joint_with_mother(PVM, itself) is exactly diagonal");
    });
}

/// Noise threshold of the sigma_z / sigma_x pair.
inline CriterionResult noise_threshold(const Inputs &in) {
    return detail::run(5, "noise threshold", [&](CriterionResult &r) {
        const auto t = jm_threshold(fixtures::sigma_z(), fixtures::sigma_x(), uniform(2), uniform(2), in.options);
        r.value("eta", t.eta);
        r.value("target", 1.0 / std::sqrt(2.0));
        r.value("max_step_ms", t.max_step_ms);
        r.value("steps", static_cast<double>(t.trace.size()));
        for (const auto &[eta, s] : t.trace)
            r.undecided = r.undecided || s == Status::Undecided;
        r.check(std::abs(t.eta - 1.0 / std::sqrt(2.0)) <= 0.01, "eta within 0.01 of 1/sqrt(2)");
        r.check(t.max_step_ms <= 2000.0, "every bisection step <= 2 s");
    });
}

/// Sum of effect ranks.
inline std::size_t rank_sum(const DiscreteObservable &a) {
    std::size_t s = 0;
    for (const auto &o : a.outcomes())
        s += psd_rank(o.effect);
    return s;
}

/// Extremality of the fixtures and of non-extreme mixtures with perturbation witnesses.
inline CriterionResult extremality(const Inputs &in) {
    return detail::run(6, "extremality classifier", [&](CriterionResult &r) {
        const auto &tol = in.options.tol();
        for (const auto &[name, o] : fixtures::observables()) {
            if (!is_pvm(o, tol))
                continue;
            r.check(is_extreme(o, tol).is_extreme, name + " (PVM) is extreme");
        }
        const auto tr = is_extreme(fixtures::trine(), tol);
        r.value("trine.kernel_dim", static_cast<double>(tr.kernel_dim));
        r.check(tr.is_extreme, "trine is extreme");

        const double eps = 1e-3;
        auto witness = [&](const DiscreteObservable &o, const std::string &name) {
            const auto rep = is_extreme(o, tol);
            r.value(name + ".kernel_dim", static_cast<double>(rep.kernel_dim));
            if (!r.check(!rep.is_extreme, name + " is not extreme"))
                return;
            bool valid = true;
            double j_norm = 0.0;
            for (std::size_t k = 0; k < rep.kernel_dim; ++k) {
                const auto p = rep.perturbation(k);
                Matrix total = zeros(o.dim());
                for (const auto &x : p)
                    total += x;
                j_norm = std::max(j_norm, total.norm());
                for (double s : {eps, -eps}) {
                    std::vector<Outcome> out;
                    for (std::size_t i = 0; i < o.size(); ++i)
                        out.push_back({o.label(i), o.effect(i) + s * p[i]});
                    valid = valid && validate(DiscreteObservable(o.dim(), std::move(out), tol), tol).passes;
                }
            }
            r.value(name + ".max_JDJ_norm", j_norm);
            r.check(valid, name + " perturbations at +-1e-3 are valid observables");
        };
        witness(fixtures::half_half(2), "half_half_d2");
        witness(fixtures::half_half(3), "half_half_d3");
        witness(convex_mixture(fixtures::sigma_z(), fixtures::sigma_x(), 0.5, tol), "mix(sigma_z,sigma_x)");
        // B relabeled onto A's labels, mixed with A
        const auto b = fixtures::B();
        const DiscreteObservable b_as_a(3, {{"1", b.effect(0)}, {"2", b.effect(1)}, {"3", b.effect(2)}}, tol);
        witness(convex_mixture(fixtures::A(), b_as_a, 0.3, tol), "mix(A,B)");
    });
}

/// Dilation residuals for every fixture and Douglas factorization on random pairs.
inline CriterionResult dilation_invariants(const Inputs &in) {
    return detail::run(7, "dilation invariants", [&](CriterionResult &r) {
        const auto &tol = in.options.tol();
        double worst = 0.0;
        auto observables = fixtures::observables();
        observables.erase("E");
        observables.erase("F");
        observables.emplace("E", in.e);
        observables.emplace("F", in.f);
        for (const auto &[name, o] : observables) {
            if (!detail::require_fixture(r, o, name, tol))
                continue;
            const auto d = dilate_minimal(o, tol);
            const auto diag = verify_dilation(o, d);
            worst = std::max({worst, diag.isometry_residual, diag.orthogonality_residual, diag.reconstruction_residual});
            r.check(diag.ok(1e-10), name + " dilation residuals <= 1e-10 and minimal");
            r.check(static_cast<std::size_t>(d.dilation_dim) == rank_sum(o), name + " dilation_dim = sum of ranks");
        }
        r.value("max_dilation_residual", worst);

        random::Rng rng(20261016);
        std::uniform_int_distribution<int> dim(1, 6);
        double douglas = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Eigen::Index d = dim(rng), k = dim(rng);
            const Matrix a = random::ginibre(rng, k, d);
            const Matrix c = random::effect(rng, k);
            const Matrix b = hermitize(a.adjoint() * c * a);
            const Matrix cf = douglas_factor(a, b, tol);
            douglas = std::max(douglas, distance(a.adjoint() * cf * a, b));
        }
        r.value("max_douglas_residual", douglas);
        r.check(douglas <= 1e-10, "douglas_factor reconstruction <= 1e-10 on 100 random pairs");
    });
}

/// Steering of the maximally entangled qubit pair and of separable states.
inline CriterionResult steering(const Inputs &in) {
    return detail::run(8, "steering", [&](CriterionResult &r) {
        const auto &opt = in.options;
        const auto phi = fixtures::phi_plus();
        const auto sharp = steerable(phi, {fixtures::sigma_z(), fixtures::sigma_x()}, opt.solver);
        r.value("sharp.separation_gap", sharp.lhs.solver.separation_gap);
        r.undecided = sharp.status == SteeringStatus::Undecided;
        r.check(sharp.status == SteeringStatus::Steerable, "Phi+ with sharp sigma_z, sigma_x is steerable");
        r.check(sharp.lhs.solver.separation_gap > 1e-3, "separation gap > 1e-3");

        const auto pa = uniform(2);
        const auto zs = mix_with_trivial(fixtures::sigma_z(), 0.6, pa, opt.tol());
        const auto xs = mix_with_trivial(fixtures::sigma_x(), 0.6, pa, opt.tol());
        const auto smeared = steerable(phi, {zs, xs}, opt.solver);
        r.undecided = r.undecided || smeared.status == SteeringStatus::Undecided;
        r.check(smeared.status == SteeringStatus::Unsteerable, "Phi+ with the eta=0.6 pair is unsteerable");
        if (r.check(smeared.lhs.model.has_value(), "LHS model returned")) {
            const auto &m = *smeared.lhs.model;
            r.value("smeared.lhs_residual", m.reconstruction_residual(smeared.assemblage));
            r.check(m.reconstruction_residual(smeared.assemblage) <= 10.0 * opt.solver.feas_tol,
                    "LHS model reproduces the assemblage");
            r.check(m.min_eigenvalue() >= -opt.tol().eig_tol, "LHS states are PSD");
        }

        std::vector<std::vector<DiscreteObservable>> sets = {
            {fixtures::sigma_z(), fixtures::sigma_x()}, {fixtures::E(), fixtures::F()}, {fixtures::trine()},
            {fixtures::trine(), fixtures::sigma_z(), fixtures::sigma_x()}};
        // every qubit fixture measured at once
        std::vector<DiscreteObservable> all_qubit;
        for (const auto &[name, o] : fixtures::observables())
            if (o.dim() == 2)
                all_qubit.push_back(o);
        sets.push_back(all_qubit);
        std::size_t count = 0;
        double worst = 0.0;
        for (const auto &[name, st] : fixtures::separable_states()) {
            for (const auto &set : sets) {
                const auto v = steerable(st, set, opt.solver);
                ++count;
                r.undecided = r.undecided || v.status == SteeringStatus::Undecided;
                r.check(v.status == SteeringStatus::Unsteerable, name + " is unsteerable");
                if (v.lhs.model)
                    worst = std::max(worst, v.lhs.reconstruction_residual);
            }
        }
        r.value("separable_cases", static_cast<double>(count));
        r.value("separable.max_lhs_residual", worst);
    });
}

/// Checks run by the reproduction command.
inline std::vector<CriterionResult> reproduce(const Inputs &in) {
    return {counterexample_arithmetic(in), hierarchy_separation(in), c3_example(in),
            mother_constructions(in),      extremality(in),          dilation_invariants(in)};
}

} // namespace qcompat::repro
