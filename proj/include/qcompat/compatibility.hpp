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
 * @file compatibility.hpp
 * Joint measurability, coexistence and joint measurability of binarizations,
 * joint observables built from mother observables, and the relabeling /
 * post-processing finders.
 *
 * Every YES verdict carries a certificate that can be re-checked without the
 * solver; every NO names the condition that failed.
 */

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dilation.hpp"
#include "feasibility.hpp"
#include "observable.hpp"

namespace qcompat {

enum class Relation { JM, Coexistent, BinarizationsJM, None };
enum class Status { Yes, No, Undecided };

inline const char *to_string(Relation r) {
    switch (r) {
    case Relation::JM:
        return "JM";
    case Relation::Coexistent:
        return "COEXISTENT";
    case Relation::BinarizationsJM:
        return "BINARIZATIONS_JM";
    case Relation::None:
        return "NONE";
    }
    return "?";
}

inline const char *to_string(Status s) {
    switch (s) {
    case Status::Yes:
        return "YES";
    case Status::No:
        return "NO";
    case Status::Undecided:
        return "UNDECIDED";
    }
    return "?";
}

/// Which observable a required effect comes from.
enum class Side { A, B };

/**
 * A mother observable together with, for every required subset effect of A
 * or B, a set of mother outcomes realizing it.
 */
struct MotherAssignment {
    struct Entry {
        Side side = Side::A;
        SubsetMask source_mask;
        SubsetMask mother_mask;
    };
    DiscreteObservable mother;
    std::vector<Entry> entries;
    /// Largest ||M(Z) - required effect||_F, recomputed by verify_mother().
    double residual = 0.0;
};

/// Recomputes every subset sum of the mother and compares it with the source.
inline double verify_mother(const MotherAssignment &m, const DiscreteObservable &a,
                            const DiscreteObservable &b) {
    double r = 0.0;
    for (const auto &e : m.entries) {
        const auto &src = e.side == Side::A ? a : b;
        r = std::max(r, distance(subset_effect(m.mother, e.mother_mask), subset_effect(src, e.source_mask)));
    }
    return r;
}

/// Outcome of one binarization pair.
struct PairWitness {
    SubsetMask a_mask;
    SubsetMask b_mask;
    Status status = Status::Undecided;
    std::optional<JointCertificate> joint;
    std::string note;
};

struct CompatibilityVerdict {
    Relation relation = Relation::None;
    Status status = Status::Undecided;
    std::optional<JointCertificate> joint;
    std::optional<MotherAssignment> mother;
    /// For NO: the necessary condition that failed or the shortcut used.
    std::string violated_condition;
    /// Numeric value attached to violated_condition (max eigenvalue, gap).
    std::optional<double> condition_value;
    std::vector<std::string> notes;
    std::vector<PairWitness> witnesses;
    std::optional<FeasibilityVerdict> solver;
};

struct CompatibilityOptions {
    SolverOptions solver{};
    std::size_t subset_cap = 4096;
    std::size_t max_mother_outcomes = 5;
    /// Upper bound on candidate atom sets examined by the mother search.
    std::size_t max_mother_candidates = 20000;

    const Tolerance &tol() const { return solver.tol; }
    /// Slack for re-verified certificates.
    double cert_tol() const { return 10.0 * solver.feas_tol; }
};

namespace detail {

inline void require_same_dim(const DiscreteObservable &a, const DiscreteObservable &b, const char *what) {
    if (a.dim() != b.dim())
        throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a.dim()) +
                             " vs " + std::to_string(b.dim()));
}

/// Joint of two binary observables from G = N(+,+): (G, E-G, F-G, I-E-F+G).
inline std::optional<JointCertificate> binary_joint_from(const DiscreteObservable &a,
                                                         const DiscreteObservable &b, const Matrix &g,
                                                         const Tolerance &tol) {
    const Matrix &e = a.effect(0);
    const Matrix &f = b.effect(0);
    JointCertificate c;
    c.dim = a.dim();
    c.axes = {a.labels(), b.labels()};
    c.cells = {g, e - g, f - g, identity(a.dim()) - e - f + g};
    for (auto &cell : c.cells)
        cell = hermitize(cell);
    if (c.min_cell_eigenvalue() < -tol.eig_tol)
        return std::nullopt;
    c.provenance = "binary-explicit";
    c.marginal_residuals = marginal_residuals(c, {a, b});
    return c;
}

inline FeasibilityProblem jm_problem(const DiscreteObservable &a, const DiscreteObservable &b) {
    FeasibilityProblem p;
    const std::size_t na = a.size(), nb = b.size();
    for (std::size_t k = 0; k < na * nb; ++k)
        p.add_block(a.dim());
    for (std::size_t i = 0; i < na; ++i) {
        std::vector<Term> t;
        for (std::size_t j = 0; j < nb; ++j)
            t.push_back(Term::scaled(i * nb + j));
        p.add_constraint(std::move(t), a.effect(i));
    }
    for (std::size_t j = 0; j < nb; ++j) {
        std::vector<Term> t;
        for (std::size_t i = 0; i < na; ++i)
            t.push_back(Term::scaled(i * nb + j));
        p.add_constraint(std::move(t), b.effect(j));
    }
    return p;
}

} // namespace detail

/**
 * Joint measurability of two observables.
 *
 * Exact shortcuts come first: commuting pairs are jointly measurable through
 * the product joint, non-commuting sharp pairs are not; for two binary
 * observables the candidates G in {E, F, 0, E+F-I} for N(+,+) are tried.
 * Otherwise the joint G_ij >= 0 with both marginal families is searched by
 * the feasibility engine.
 */
inline CompatibilityVerdict jm_check(const DiscreteObservable &a, const DiscreteObservable &b,
                                     const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, b, "jm_check");
    const auto &tol = opt.tol();
    require_valid(a, tol, "jm_check");
    require_valid(b, tol, "jm_check");

    CompatibilityVerdict v;
    v.relation = Relation::JM;
    if (commutes(a, b, tol)) {
        v.status = Status::Yes;
        v.joint = product_joint(a, b, tol);
        v.notes.push_back("observables commute; product joint");
        return v;
    }
    if (is_pvm(a, tol) && is_pvm(b, tol)) {
        v.status = Status::No;
        v.violated_condition = "sharp observables that do not commute are not jointly measurable";
        return v;
    }
    if (a.size() == 2 && b.size() == 2) {
        const Matrix &e = a.effect(0), &f = b.effect(0);
        const Matrix id = identity(a.dim());
        for (const Matrix &g : {e, f, Matrix(zeros(a.dim())), Matrix(e + f - id)}) {
            if (auto c = detail::binary_joint_from(a, b, g, tol)) {
                v.status = Status::Yes;
                v.joint = std::move(c);
                v.notes.push_back("binary pair; explicit joint");
                return v;
            }
        }
    }

    const auto problem = detail::jm_problem(a, b);
    auto sol = dykstra_solve(problem, opt.solver);
    if (sol.feasible()) {
        JointCertificate c;
        c.dim = a.dim();
        c.axes = {a.labels(), b.labels()};
        c.cells = sol.point;
        c.provenance = "solver";
        c.marginal_residuals = marginal_residuals(c, {a, b});
        const double worst = std::max(c.marginal_residuals[0], c.marginal_residuals[1]);
        if (worst <= opt.cert_tol() && c.min_cell_eigenvalue() >= -tol.eig_tol) {
            v.status = Status::Yes;
            v.joint = std::move(c);
        } else {
            v.status = Status::Undecided;
            v.notes.push_back("solver point failed re-verification");
        }
    } else if (sol.status == FeasibilityStatus::NumericallyInfeasible) {
        v.status = Status::No;
        v.violated_condition = "no joint observable (feasibility gap)";
        v.condition_value = sol.separation_gap;
    } else {
        v.status = Status::Undecided;
        v.notes.push_back("solver reached the iteration limit");
    }
    v.solver = std::move(sol);
    return v;
}

/**
 * Joint measurability of the binary observables (E, I-E) and (F, I-F):
 * a G with 0 <= G <= E, G <= F and E + F - G <= I.
 */
inline CompatibilityVerdict effect_pair_joint(const Matrix &e, const Matrix &f,
                                              const CompatibilityOptions &opt = {}) {
    if (!check_effect(e, opt.tol()) || !check_effect(f, opt.tol()))
        throw PreconditionError("effect_pair_joint: inputs must be effects");
    require_same_shape(e, f, "effect_pair_joint");
    return jm_check(binary_observable(e, opt.tol()), binary_observable(f, opt.tol()), opt);
}

namespace detail {

inline std::vector<SubsetMask> binarization_masks(std::size_t n, std::size_t cap, bool &restricted) {
    restricted = n >= 63 || (std::uint64_t{1} << n) > cap;
    if (!restricted)
        return nontrivial_masks(n);
    std::vector<SubsetMask> out;
    if (n < 2)
        return out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(SubsetMask::from_indices(n, {i}));
        if (n > 2)
            out.push_back(out.back().complement());
    }
    return out;
}

} // namespace detail

/// Every pair of binarizations (A(X), B(Y)) over nontrivial masks is jointly measurable.
inline CompatibilityVerdict binarization_jm_all(const DiscreteObservable &a, const DiscreteObservable &b,
                                                const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, b, "binarization_jm_all");
    CompatibilityVerdict v;
    v.relation = Relation::BinarizationsJM;
    bool ra = false, rb = false;
    const auto xs = detail::binarization_masks(a.size(), opt.subset_cap, ra);
    const auto ys = detail::binarization_masks(b.size(), opt.subset_cap, rb);
    if (ra || rb)
        v.notes.push_back("subset enumeration restricted to singletons and complements");

    bool any_no = false, any_undecided = false;
    for (const auto &x : xs) {
        for (const auto &y : ys) {
            PairWitness w;
            w.a_mask = x;
            w.b_mask = y;
            auto pv = effect_pair_joint(subset_effect(a, x), subset_effect(b, y), opt);
            w.status = pv.status;
            w.joint = std::move(pv.joint);
            if (pv.status == Status::No) {
                any_no = true;
                w.note = pv.violated_condition;
            } else if (pv.status == Status::Undecided) {
                any_undecided = true;
            }
            v.witnesses.push_back(std::move(w));
        }
    }
    if (any_no) {
        v.status = Status::No;
        v.violated_condition = "a pair of binarizations is not jointly measurable";
    } else {
        v.status = any_undecided ? Status::Undecided : Status::Yes;
    }
    return v;
}

struct Rank1Verdict {
    bool applicable = false;
    bool violated = false;
    double max_eigenvalue = 0.0;
    std::string reason;
};

/**
 * For rank-one effects with pairwise non-parallel ranges, any common mother
 * must realize them on M-disjoint sets, so their sum must satisfy sum <= I.
 */
inline Rank1Verdict rank1_packing_condition(const std::vector<Matrix> &effects, const Tolerance &tol = {}) {
    Rank1Verdict v;
    std::vector<Eigen::VectorXcd> dirs;
    Matrix sum;
    for (const auto &e : effects) {
        if (psd_rank(e) != 1) {
            v.reason = "effect is not rank one";
            return v;
        }
        const auto eig = eigh(e, tol.eq_tol);
        dirs.push_back(eig.vectors.col(eig.values.size() - 1));
        sum = sum.size() ? Matrix(sum + e) : e;
    }
    for (std::size_t i = 0; i < dirs.size(); ++i)
        for (std::size_t j = i + 1; j < dirs.size(); ++j)
            if (std::abs(dirs[i].dot(dirs[j])) >= 1.0 - 1e-9) {
                v.reason = "two effects have parallel ranges";
                return v;
            }
    if (effects.empty()) {
        v.reason = "no effects";
        return v;
    }
    v.applicable = true;
    v.max_eigenvalue = max_eigenvalue(sum);
    v.violated = v.max_eigenvalue > 1.0 + tol.eig_tol;
    return v;
}

/// Rank-one members of ran A and ran B, one per parallel class (the largest).
inline std::vector<Matrix> rank1_range_members(const DiscreteObservable &a, const DiscreteObservable &b,
                                               std::size_t subset_cap, const Tolerance &tol = {}) {
    struct Member {
        Eigen::VectorXcd dir;
        Matrix effect;
        double weight;
    };
    std::vector<Member> reps;
    for (const auto *o : {&a, &b}) {
        bool restricted = false;
        for (const auto &x : detail::binarization_masks(o->size(), subset_cap, restricted)) {
            Matrix e = subset_effect(*o, x);
            if (psd_rank(e) != 1)
                continue;
            const auto eig = eigh(e, tol.eq_tol);
            const Eigen::Index top = eig.values.size() - 1;
            Eigen::VectorXcd d = eig.vectors.col(top);
            const double w = eig.values(top);
            bool merged = false;
            for (auto &r : reps) {
                if (std::abs(r.dir.dot(d)) >= 1.0 - 1e-9) {
                    if (w > r.weight)
                        r = {d, e, w};
                    merged = true;
                    break;
                }
            }
            if (!merged)
                reps.push_back({d, std::move(e), w});
        }
    }
    std::vector<Matrix> out;
    for (auto &r : reps)
        out.push_back(std::move(r.effect));
    return out;
}

namespace detail {

/// Required effects for a mother: masks of A containing outcome 0 and masks
/// of B containing outcome 0 (complements follow), with duplicates removed.
struct Requirement {
    Side side;
    SubsetMask mask;
    Matrix effect;
};

inline std::vector<Requirement> mother_requirements(const DiscreteObservable &a, const DiscreteObservable &b,
                                                    std::size_t cap, const Tolerance &tol, bool &restricted) {
    std::vector<Requirement> req;
    restricted = false;
    for (auto side : {Side::A, Side::B}) {
        const auto &o = side == Side::A ? a : b;
        bool r = false;
        for (const auto &x : binarization_masks(o.size(), cap, r)) {
            if (!x.contains(0))
                continue;
            Matrix e = subset_effect(o, x);
            bool dup = false;
            for (const auto &q : req)
                dup = dup || distance(q.effect, e) <= tol.eq_tol;
            if (!dup)
                req.push_back({side, x, std::move(e)});
        }
        restricted = restricted || r;
    }
    return req;
}

/// Calls f on every size-m subset of {0..n-1} in lexicographic order until f returns true.
inline bool for_each_combination(std::size_t n, std::size_t m,
                                 const std::function<bool(const std::vector<std::size_t> &)> &f) {
    if (m > n)
        return false;
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i)
        idx[i] = i;
    while (true) {
        if (f(idx))
            return true;
        std::size_t i = m;
        while (i > 0 && idx[i - 1] == n - m + i - 1)
            --i;
        if (i == 0)
            return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < m; ++j)
            idx[j] = idx[j - 1] + 1;
    }
}

/**
 * Bounded mother search. A mother with atoms sharing the same membership
 * signature across the required effects can merge those atoms, so it is
 * enough to look at sets of distinct signatures; listing each set once in
 * sorted order removes the permutation symmetry of the atoms.
 */
inline std::optional<MotherAssignment> search_mother(const DiscreteObservable &a, const DiscreteObservable &b,
                                                     const CompatibilityOptions &opt,
                                                     std::vector<std::string> &notes) {
    bool restricted = false;
    const auto req = mother_requirements(a, b, opt.subset_cap, opt.tol(), restricted);
    if (restricted)
        notes.push_back("mother search uses singleton requirements only");
    const std::size_t k = req.size();
    if (k >= 20) {
        notes.push_back("mother search skipped: too many required effects");
        return std::nullopt;
    }
    const std::size_t sigs = std::size_t{1} << k;
    const Eigen::Index d = a.dim();
    std::size_t examined = 0;
    bool truncated = false;
    std::optional<MotherAssignment> found;

    for (std::size_t m = 2; m <= opt.max_mother_outcomes && !found && !truncated; ++m) {
        for_each_combination(sigs, m, [&](const std::vector<std::size_t> &chosen) {
            // every requirement needs atoms inside and outside its set
            for (std::size_t r = 0; r < k; ++r) {
                bool in = false, out = false;
                for (auto s : chosen)
                    ((s >> r) & 1U ? in : out) = true;
                if (!in || !out)
                    return false;
            }
            if (++examined > opt.max_mother_candidates) {
                truncated = true;
                return true;
            }
            FeasibilityProblem p;
            std::vector<Term> all;
            for (std::size_t z = 0; z < m; ++z)
                all.push_back(Term::scaled(p.add_block(d)));
            p.add_constraint(all, identity(d));
            for (std::size_t r = 0; r < k; ++r) {
                std::vector<Term> t;
                for (std::size_t z = 0; z < m; ++z)
                    if ((chosen[z] >> r) & 1U)
                        t.push_back(Term::scaled(z));
                p.add_constraint(std::move(t), req[r].effect);
            }
            if (!AffineProjector(p).consistent(std::max(10.0 * opt.solver.feas_tol, 1e-11)))
                return false;
            auto sol = dykstra_solve(p, opt.solver);
            if (!sol.feasible())
                return false;

            std::vector<Outcome> atoms;
            for (std::size_t z = 0; z < m; ++z)
                atoms.push_back({"z" + std::to_string(z + 1), sol.point[z]});
            MotherAssignment ma;
            ma.mother = DiscreteObservable(d, std::move(atoms), opt.tol());
            // atoms dropped as zero leave the mask index space; map by label
            auto mask_for = [&](std::size_t r, bool complement) {
                SubsetMask mk(ma.mother.size());
                for (std::size_t z = 0; z < m; ++z) {
                    const bool inside = ((chosen[z] >> r) & 1U) != 0;
                    if (inside != complement)
                        if (auto idx = ma.mother.index_of("z" + std::to_string(z + 1)))
                            mk.set(*idx);
                }
                return mk;
            };
            for (std::size_t r = 0; r < k; ++r) {
                ma.entries.push_back({req[r].side, req[r].mask, mask_for(r, false)});
                ma.entries.push_back({req[r].side, req[r].mask.complement(), mask_for(r, true)});
            }
            ma.residual = verify_mother(ma, a, b);
            if (ma.residual > opt.cert_tol())
                return false;
            found = std::move(ma);
            return true;
        });
    }
    if (truncated)
        notes.push_back("mother search truncated after " + std::to_string(opt.max_mother_candidates) +
                        " candidates");
    return found;
}

/// The joint observable as a mother: every subset effect of either marginal
/// is the sum of the joint outcomes lying over it.
inline MotherAssignment mother_from_joint(const JointCertificate &joint, const DiscreteObservable &a,
                                          const DiscreteObservable &b, std::size_t cap, const Tolerance &tol) {
    MotherAssignment ma;
    ma.mother = joint.joint(tol);
    for (auto side : {Side::A, Side::B}) {
        const std::size_t axis = side == Side::A ? 0 : 1;
        const auto &o = side == Side::A ? a : b;
        const auto per_outcome = joint.marginal_masks(axis, tol);
        bool restricted = false;
        for (const auto &x : binarization_masks(o.size(), cap, restricted)) {
            SubsetMask z(ma.mother.size());
            for (auto i : x.indices())
                z = z | per_outcome[i];
            ma.entries.push_back({side, x, z});
        }
    }
    ma.residual = verify_mother(ma, a, b);
    return ma;
}

} // namespace detail

/**
 * Coexistence, decided in this order: a joint observable is a mother (YES);
 * incompatible binarizations rule it out (NO); the rank-one packing bound on
 * ran A and ran B rules it out (NO); a bounded search over mothers with up
 * to max_mother_outcomes atoms finds one (YES). Anything else is UNDECIDED.
 */
inline CompatibilityVerdict coexistence_check(const DiscreteObservable &a, const DiscreteObservable &b,
                                              const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, b, "coexistence_check");
    CompatibilityVerdict v;
    v.relation = Relation::Coexistent;

    auto jm = jm_check(a, b, opt);
    if (jm.status == Status::Yes) {
        v.status = Status::Yes;
        v.mother = detail::mother_from_joint(*jm.joint, a, b, opt.subset_cap, opt.tol());
        v.joint = std::move(jm.joint);
        v.notes.push_back("jointly measurable; the joint observable is a mother");
        return v;
    }
    v.notes.push_back(std::string("jm_check: ") + to_string(jm.status));

    auto bins = binarization_jm_all(a, b, opt);
    if (bins.status == Status::No) {
        v.status = Status::No;
        v.violated_condition = "binarizations are not jointly measurable";
        v.witnesses = std::move(bins.witnesses);
        return v;
    }

    const auto members = rank1_range_members(a, b, opt.subset_cap, opt.tol());
    if (members.size() >= 2) {
        const auto r1 = rank1_packing_condition(members, opt.tol());
        if (r1.applicable && r1.violated) {
            v.status = Status::No;
            v.violated_condition = "rank-one packing: sum of pairwise non-parallel rank-one range members exceeds I";
            v.condition_value = r1.max_eigenvalue;
            return v;
        }
    }

    if (auto m = detail::search_mother(a, b, opt, v.notes)) {
        v.status = Status::Yes;
        v.mother = std::move(m);
        v.notes.push_back("mother found by bounded search");
        return v;
    }
    v.status = Status::Undecided;
    v.notes.push_back("no mother with at most " + std::to_string(opt.max_mother_outcomes) + " outcomes found");
    return v;
}

/**
 * Joint of the binarizations O^{M(Z_i)}: N(x_1..x_n) = M(Z_1^{x_1} & ... & Z_n^{x_n})
 * with Z^{+1} = Z and Z^{-1} its complement.
 */
inline JointCertificate joint_from_mother_binary(const DiscreteObservable &m, const std::vector<SubsetMask> &masks,
                                                 const Tolerance &tol = {}) {
    for (const auto &z : masks)
        if (z.size() != m.size())
            throw DimensionError("joint_from_mother_binary: mask size differs from mother outcome count");
    JointCertificate c;
    c.dim = m.dim();
    c.axes.assign(masks.size(), {kPlus, kMinus});
    c.provenance = "mother-binary";
    const std::size_t cells = c.cell_count();
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const auto t = c.tuple_of(cell);
        SubsetMask s = SubsetMask::all(m.size());
        for (std::size_t i = 0; i < masks.size(); ++i)
            s = s & (t[i] == 0 ? masks[i] : masks[i].complement());
        c.cells.push_back(subset_effect(m, s));
    }
    std::vector<DiscreteObservable> targets;
    for (const auto &z : masks)
        targets.push_back(binarize(m, z, tol));
    c.marginal_residuals = marginal_residuals(c, targets);
    return c;
}

/// Result of the mother-based joint constructions.
struct MotherJointResult {
    bool applicable = false;
    std::string reason;
    /// Largest ||M(Z_i & Z_j)||_F (i != j) or ||M(complement of the union)||_F.
    double overlap_norm = 0.0;
    std::optional<JointCertificate> joint;
    /// Largest ||J* C_i({z}) J - N(i, z)||_F over the dilation-level factors.
    double dilation_residual = 0.0;
    /// Largest violation of 0 <= C_i({z}) <= P_i.
    double dilation_order_violation = 0.0;
};

namespace detail {

inline void require_masks_realize(const DiscreteObservable &target, const DiscreteObservable &m,
                                  const std::vector<SubsetMask> &masks, double slack, const char *what) {
    if (masks.size() != target.size())
        throw DimensionError(std::string(what) + ": need one mask per outcome");
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (masks[i].size() != m.size())
            throw DimensionError(std::string(what) + ": mask size differs from mother outcome count");
        if (distance(subset_effect(m, masks[i]), target.effect(i)) > slack)
            throw PreconditionError(std::string(what) + ": M(Z) does not match effect '" + target.label(i) + "'");
    }
}

/// Largest M-weight of pairwise overlaps and of the uncovered remainder.
inline double mask_overlap(const DiscreteObservable &m, const std::vector<SubsetMask> &masks) {
    double worst = 0.0;
    SubsetMask cover = SubsetMask::none(m.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        cover = cover | masks[i];
        for (std::size_t j = i + 1; j < masks.size(); ++j)
            worst = std::max(worst, subset_effect(m, masks[i] & masks[j]).norm());
    }
    return std::max(worst, subset_effect(m, cover.complement()).norm());
}

} // namespace detail

/**
 * Joint of an extreme discrete A with a mother M given Z_i with M(Z_i) = A_i:
 * N(i, z) = M({z} & Z_i). The construction needs M(Z_i & Z_j) = 0 for i != j
 * and M(complement of the union of the Z_i) = 0, which extremality of A
 * guarantees; both are checked and their failure reported as not applicable.
 * The dilation-level factors C_i({z}) with M({z} & Z_i) = J* C_i({z}) J,
 * 0 <= C_i({z}) <= P_i are computed and checked as well.
 */
inline MotherJointResult extreme_joint_with_mother(const DiscreteObservable &a, const DiscreteObservable &m,
                                                   const std::vector<SubsetMask> &z,
                                                   const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, m, "extreme_joint_with_mother");
    const auto &tol = opt.tol();
    detail::require_masks_realize(a, m, z, opt.cert_tol(), "extreme_joint_with_mother");

    MotherJointResult out;
    out.overlap_norm = detail::mask_overlap(m, z);
    if (out.overlap_norm > 10.0 * tol.eq_tol) {
        out.reason = "masks overlap on a set of nonzero M-weight (A not extreme or masks wrong)";
        return out;
    }

    JointCertificate c;
    c.dim = a.dim();
    c.axes = {a.labels(), m.labels()};
    c.provenance = "extreme-mother";
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < m.size(); ++k)
            c.cells.push_back(z[i].contains(k) ? m.effect(k) : zeros(a.dim()));
    c.marginal_residuals = marginal_residuals(c, {a, m});

    const auto dil = dilate_minimal(a, tol);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Matrix pj = dil.blocks[i] * dil.isometry;
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (!z[i].contains(k))
                continue;
            const Matrix ci = douglas_factor(pj, m.effect(k), tol);
            out.dilation_residual =
                std::max(out.dilation_residual, distance(dil.isometry.adjoint() * ci * dil.isometry, m.effect(k)));
            out.dilation_order_violation = std::max(
                {out.dilation_order_violation, -min_eigenvalue(ci), max_eigenvalue(ci - dil.blocks[i])});
        }
    }
    out.applicable = true;
    out.joint = std::move(c);
    return out;
}

/**
 * Joint of an extreme discrete A and any B sharing the mother M:
 * N(i, j) = M(Z_i & W_j). Requires the same disjointness as
 * extreme_joint_with_mother and verifies both marginal families.
 */
inline MotherJointResult extreme_pair_joint(const DiscreteObservable &a, const DiscreteObservable &b,
                                            const DiscreteObservable &m, const std::vector<SubsetMask> &z,
                                            const std::vector<SubsetMask> &w, const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, m, "extreme_pair_joint");
    detail::require_same_dim(b, m, "extreme_pair_joint");
    detail::require_masks_realize(a, m, z, opt.cert_tol(), "extreme_pair_joint");
    detail::require_masks_realize(b, m, w, opt.cert_tol(), "extreme_pair_joint");

    MotherJointResult out;
    out.overlap_norm = detail::mask_overlap(m, z);
    if (out.overlap_norm > 10.0 * opt.tol().eq_tol) {
        out.reason = "masks of A overlap on a set of nonzero M-weight";
        return out;
    }
    JointCertificate c;
    c.dim = a.dim();
    c.axes = {a.labels(), b.labels()};
    c.provenance = "extreme-pair";
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            c.cells.push_back(subset_effect(m, z[i] & w[j]));
    c.marginal_residuals = marginal_residuals(c, {a, b});
    if (std::max(c.marginal_residuals[0], c.marginal_residuals[1]) > opt.cert_tol()) {
        out.reason = "marginal verification failed";
        out.joint = std::move(c);
        return out;
    }
    out.applicable = true;
    out.joint = std::move(c);
    return out;
}

/**
 * Depth-first search for f with M(f^-1(x)) = A_x. A partial assignment is
 * abandoned as soon as some partial sum is no longer below its target in
 * the Loewner order.
 */
inline std::optional<RelabelingMap> relabeling_finder(const DiscreteObservable &a, const DiscreteObservable &m,
                                                      const Tolerance &tol = {}) {
    detail::require_same_dim(a, m, "relabeling_finder");
    const std::size_t na = a.size(), nm = m.size();
    std::vector<Matrix> partial(na, zeros(a.dim()));
    std::vector<std::size_t> assign(nm, 0);
    const double slack = 10.0 * tol.eq_tol;

    std::function<bool(std::size_t)> dfs = [&](std::size_t z) -> bool {
        if (z == nm) {
            for (std::size_t x = 0; x < na; ++x)
                if (distance(partial[x], a.effect(x)) > slack)
                    return false;
            return true;
        }
        for (std::size_t x = 0; x < na; ++x) {
            partial[x] += m.effect(z);
            if (loewner_leq(partial[x], a.effect(x), tol)) {
                assign[z] = x;
                if (dfs(z + 1))
                    return true;
            }
            partial[x] -= m.effect(z);
        }
        return false;
    };
    if (!dfs(0))
        return std::nullopt;
    return RelabelingMap(assign, a.labels());
}

struct PostProcessingResult {
    std::optional<StochasticMatrix> kernel;
    FeasibilityVerdict solver;
    /// max_x ||sum_z beta(z,x) M_z - A_x||_F of the returned kernel.
    double reconstruction_residual = 0.0;
    /// Whether M is extreme (the case in which a kernel is guaranteed when
    /// the positive cone of A lies in that of M).
    bool mother_extreme = false;
};

/// LP feasibility for beta(z,x) >= 0 with sum_z beta(z,x) M_z = A_x and rows summing to 1.
inline PostProcessingResult post_processing_finder(const DiscreteObservable &a, const DiscreteObservable &m,
                                                   const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, m, "post_processing_finder");
    const std::size_t na = a.size(), nm = m.size();
    FeasibilityProblem p;
    for (std::size_t k = 0; k < nm * na; ++k)
        p.add_block(1);
    for (std::size_t x = 0; x < na; ++x) {
        std::vector<Term> t;
        for (std::size_t z = 0; z < nm; ++z)
            t.push_back(Term::times(z * na + x, m.effect(z)));
        p.add_constraint(std::move(t), a.effect(x));
    }
    for (std::size_t z = 0; z < nm; ++z) {
        std::vector<Term> t;
        for (std::size_t x = 0; x < na; ++x)
            t.push_back(Term::scaled(z * na + x));
        p.add_constraint(std::move(t), Matrix::Identity(1, 1));
    }
    PostProcessingResult out;
    out.mother_extreme = is_extreme(m, opt.tol()).is_extreme;
    out.solver = dykstra_solve(p, opt.solver);
    if (!out.solver.feasible())
        return out;
    RealMatrix beta(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(na));
    for (std::size_t z = 0; z < nm; ++z) {
        for (std::size_t x = 0; x < na; ++x)
            beta(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(x)) =
                std::max(0.0, out.solver.point[z * na + x](0, 0).real());
        const double total = beta.row(static_cast<Eigen::Index>(z)).sum();
        if (total > 0.0)
            beta.row(static_cast<Eigen::Index>(z)) /= total;
        else
            beta.row(static_cast<Eigen::Index>(z)).setConstant(1.0 / static_cast<double>(na));
    }
    out.kernel = StochasticMatrix(beta, a.labels(), opt.tol());
    const auto rebuilt = post_process(m, *out.kernel, opt.tol());
    for (std::size_t x = 0; x < na; ++x) {
        const auto idx = rebuilt.index_of(a.label(x));
        out.reconstruction_residual = std::max(
            out.reconstruction_residual, distance(idx ? rebuilt.effect(*idx) : zeros(a.dim()), a.effect(x)));
    }
    return out;
}

struct ConeMembership {
    FeasibilityStatus status = FeasibilityStatus::Undecided;
    std::vector<double> coefficients;
    double residual = 0.0;
    bool member() const { return status == FeasibilityStatus::Feasible; }
};

/// E in the cone {sum_z c_z M_z : c_z >= 0}.
inline ConeMembership cone_membership(const Matrix &e, const DiscreteObservable &m,
                                      const CompatibilityOptions &opt = {}) {
    require_square(e, "cone_membership");
    if (e.rows() != m.dim())
        throw DimensionError("cone_membership: dimension mismatch");
    FeasibilityProblem p;
    std::vector<Term> t;
    for (std::size_t z = 0; z < m.size(); ++z)
        t.push_back(Term::times(p.add_block(1), m.effect(z)));
    p.add_constraint(std::move(t), e);
    const auto sol = dykstra_solve(p, opt.solver);
    ConeMembership out;
    out.status = sol.status;
    out.residual = sol.residual;
    if (sol.feasible())
        for (const auto &c : sol.point)
            out.coefficients.push_back(c(0, 0).real());
    return out;
}

struct ThresholdResult {
    double eta = 0.0;
    /// (eta, status) of every jm_check evaluated, in order.
    std::vector<std::pair<double, Status>> trace;
    /// Longest single jm_check in milliseconds.
    double max_step_ms = 0.0;
};

/**
 * Largest eta in [0, 1] at which eta A + (1-eta) p_A I and
 * eta B + (1-eta) p_B I are jointly measurable, by bisection to width 1e-3.
 * UNDECIDED steps count as NO, so the result is a lower estimate.
 */
inline ThresholdResult jm_threshold(const DiscreteObservable &a, const DiscreteObservable &b,
                                    const std::vector<double> &pa, const std::vector<double> &pb,
                                    const CompatibilityOptions &opt = {}) {
    detail::require_same_dim(a, b, "jm_threshold");
    ThresholdResult out;
    auto jm_at = [&](double eta) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto s = jm_check(mix_with_trivial(a, eta, pa, opt.tol()), mix_with_trivial(b, eta, pb, opt.tol()), opt)
                           .status;
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        out.max_step_ms = std::max(out.max_step_ms, ms);
        out.trace.emplace_back(eta, s);
        return s == Status::Yes;
    };
    if (jm_at(1.0)) {
        out.eta = 1.0;
        return out;
    }
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        (jm_at(mid) ? lo : hi) = mid;
    }
    out.eta = lo;
    return out;
}

} // namespace qcompat
