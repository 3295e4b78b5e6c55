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
 * @file observable.hpp
 * Discrete observables (finite POVMs) and the elementary operations on them:
 * binarization, commutativity, relabeling, post-processing by stochastic
 * matrices, convex mixtures and the commuting product joint.
 */

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "operator_core.hpp"

namespace qcompat {

struct Outcome {
    std::string label;
    Matrix effect;
};

/**
 * A finite-outcome observable on C^dim.
 *
 * Outcomes whose effect has Frobenius norm <= eq_tol are removed at
 * construction; their labels stay available through null_labels() so that
 * the outcome space is not forgotten. Construction only checks structure
 * (shapes, finiteness, unique labels, at least one outcome); positivity and
 * normalization are reported by validate().
 */
class DiscreteObservable {
  public:
    DiscreteObservable() = default;

    DiscreteObservable(Eigen::Index dim, std::vector<Outcome> outcomes, const Tolerance &tol = {})
        : dim_(dim) {
        if (dim <= 0)
            throw DimensionError("observable dimension must be positive");
        std::set<std::string> seen;
        for (auto &o : outcomes) {
            if (o.effect.rows() != dim || o.effect.cols() != dim)
                throw DimensionError("effect '" + o.label + "' is " +
                                     std::to_string(o.effect.rows()) + "x" +
                                     std::to_string(o.effect.cols()) + ", expected " +
                                     std::to_string(dim) + "x" + std::to_string(dim));
            if (!all_finite(o.effect))
                throw DimensionError("effect '" + o.label + "' has non-finite entries");
            if (!seen.insert(o.label).second)
                throw PreconditionError("duplicate outcome label '" + o.label + "'");
            if (o.effect.norm() <= tol.eq_tol)
                null_labels_.push_back(std::move(o.label));
            else
                outcomes_.push_back(std::move(o));
        }
        if (outcomes_.empty())
            throw PreconditionError("observable has no nonzero outcome");
    }

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return outcomes_.size(); }
    const std::vector<Outcome> &outcomes() const { return outcomes_; }
    const Outcome &operator[](std::size_t i) const { return outcomes_.at(i); }
    const Matrix &effect(std::size_t i) const { return outcomes_.at(i).effect; }
    const std::string &label(std::size_t i) const { return outcomes_.at(i).label; }

    /// Labels of outcomes dropped at construction because their effect was zero.
    const std::vector<std::string> &null_labels() const { return null_labels_; }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto &o : outcomes_)
            out.push_back(o.label);
        return out;
    }

    std::optional<std::size_t> index_of(const std::string &label) const {
        for (std::size_t i = 0; i < outcomes_.size(); ++i)
            if (outcomes_[i].label == label)
                return i;
        return std::nullopt;
    }

  private:
    Eigen::Index dim_ = 0;
    std::vector<Outcome> outcomes_;
    std::vector<std::string> null_labels_;
};

/// Set of outcome indices of some observable.
class SubsetMask {
  public:
    SubsetMask() = default;
    explicit SubsetMask(std::size_t n) : bits_(n, false) {}

    static SubsetMask none(std::size_t n) { return SubsetMask(n); }
    static SubsetMask all(std::size_t n) {
        SubsetMask m(n);
        std::fill(m.bits_.begin(), m.bits_.end(), true);
        return m;
    }
    static SubsetMask from_indices(std::size_t n, const std::vector<std::size_t> &idx) {
        SubsetMask m(n);
        for (auto i : idx) {
            if (i >= n)
                throw DimensionError("mask index " + std::to_string(i) + " out of range " +
                                     std::to_string(n));
            m.bits_[i] = true;
        }
        return m;
    }
    /// Bit i of `word` selects outcome i; n <= 64.
    static SubsetMask from_bits(std::size_t n, std::uint64_t word) {
        SubsetMask m(n);
        for (std::size_t i = 0; i < n; ++i)
            m.bits_[i] = (word >> i) & 1U;
        return m;
    }

    std::size_t size() const { return bits_.size(); }
    bool contains(std::size_t i) const { return bits_.at(i); }
    void set(std::size_t i, bool v = true) { bits_.at(i) = v; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }
    bool empty() const { return count() == 0; }
    bool is_full() const { return count() == size(); }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i])
                out.push_back(i);
        return out;
    }

    SubsetMask complement() const {
        SubsetMask m(*this);
        m.bits_.flip();
        return m;
    }
    SubsetMask operator&(const SubsetMask &o) const {
        require_same(o);
        SubsetMask m(size());
        for (std::size_t i = 0; i < size(); ++i)
            m.bits_[i] = bits_[i] && o.bits_[i];
        return m;
    }
    SubsetMask operator|(const SubsetMask &o) const {
        require_same(o);
        SubsetMask m(size());
        for (std::size_t i = 0; i < size(); ++i)
            m.bits_[i] = bits_[i] || o.bits_[i];
        return m;
    }
    bool operator==(const SubsetMask &o) const = default;

  private:
    void require_same(const SubsetMask &o) const {
        if (o.size() != size())
            throw DimensionError("mask sizes differ");
    }
    std::vector<bool> bits_;
};

/// All masks over n outcomes except the empty and the full one.
inline std::vector<SubsetMask> nontrivial_masks(std::size_t n) {
    std::vector<SubsetMask> out;
    if (n >= 64)
        throw PreconditionError("too many outcomes to enumerate subsets");
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t w = 1; w + 1 < total; ++w)
        out.push_back(SubsetMask::from_bits(n, w));
    return out;
}

/// Total function from source outcome indices to a list of target labels.
class RelabelingMap {
  public:
    RelabelingMap() = default;
    RelabelingMap(std::vector<std::size_t> assignment, std::vector<std::string> targets)
        : assignment_(std::move(assignment)), targets_(std::move(targets)) {
        for (auto t : assignment_)
            if (t >= targets_.size())
                throw DimensionError("relabeling target index " + std::to_string(t) + " out of range");
    }

    std::size_t source_size() const { return assignment_.size(); }
    std::size_t target_size() const { return targets_.size(); }
    std::size_t operator()(std::size_t z) const { return assignment_.at(z); }
    const std::vector<std::size_t> &assignment() const { return assignment_; }
    const std::vector<std::string> &targets() const { return targets_; }

  private:
    std::vector<std::size_t> assignment_;
    std::vector<std::string> targets_;
};

/**
 * Row-stochastic matrix beta(z, x): rows are source outcomes, columns are
 * target outcomes named by target_labels().
 */
class StochasticMatrix {
  public:
    StochasticMatrix() = default;
    StochasticMatrix(RealMatrix entries, std::vector<std::string> target_labels,
                     const Tolerance &tol = {})
        : entries_(std::move(entries)), targets_(std::move(target_labels)) {
        if (static_cast<Eigen::Index>(targets_.size()) != entries_.cols())
            throw DimensionError("stochastic matrix: label count does not match columns");
        for (Eigen::Index z = 0; z < entries_.rows(); ++z) {
            if (std::abs(entries_.row(z).sum() - 1.0) > tol.eq_tol)
                throw PreconditionError("stochastic matrix: row " + std::to_string(z) +
                                        " does not sum to 1");
            if (entries_.row(z).minCoeff() < -tol.eq_tol)
                throw PreconditionError("stochastic matrix: negative entry in row " +
                                        std::to_string(z));
        }
    }

    /// Labels "1".."n".
    static std::vector<std::string> default_labels(std::size_t n) {
        std::vector<std::string> out;
        for (std::size_t i = 1; i <= n; ++i)
            out.push_back(std::to_string(i));
        return out;
    }

    static StochasticMatrix deterministic(const RelabelingMap &f) {
        RealMatrix b = RealMatrix::Zero(static_cast<Eigen::Index>(f.source_size()),
                                        static_cast<Eigen::Index>(f.target_size()));
        for (std::size_t z = 0; z < f.source_size(); ++z)
            b(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(f(z))) = 1.0;
        return StochasticMatrix(std::move(b), f.targets());
    }

    Eigen::Index rows() const { return entries_.rows(); }
    Eigen::Index cols() const { return entries_.cols(); }
    double operator()(Eigen::Index z, Eigen::Index x) const { return entries_(z, x); }
    const RealMatrix &entries() const { return entries_; }
    const std::vector<std::string> &target_labels() const { return targets_; }

  private:
    RealMatrix entries_;
    std::vector<std::string> targets_;
};

/// Kernel composition: first beta, then gamma.
inline StochasticMatrix compose(const StochasticMatrix &beta, const StochasticMatrix &gamma) {
    if (beta.cols() != gamma.rows())
        throw DimensionError("compose: inner dimensions differ");
    return StochasticMatrix(beta.entries() * gamma.entries(), gamma.target_labels());
}

struct EffectDiagnostics {
    std::string label;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double hermiticity_defect = 0.0;
    bool is_effect = false;
};

struct ValidationReport {
    std::vector<EffectDiagnostics> effects;
    double normalization_residual = 0.0;
    std::vector<std::string> null_labels;
    /// Effects are effects and sum to I.
    bool passes = false;
    /// passes, and no outcome was dropped for having a zero effect.
    bool strict_passes() const { return passes && null_labels.empty(); }
};

inline ValidationReport validate(const DiscreteObservable &a, const Tolerance &tol = {}) {
    ValidationReport rep;
    rep.null_labels = a.null_labels();
    bool ok = true;
    Matrix sum = zeros(a.dim());
    for (const auto &o : a.outcomes()) {
        EffectDiagnostics d;
        d.label = o.label;
        d.hermiticity_defect = hermiticity_defect(o.effect);
        const Matrix h = hermitize(o.effect);
        const auto e = eigh(h);
        d.min_eigenvalue = e.values(0);
        d.max_eigenvalue = e.values(e.values.size() - 1);
        d.is_effect = check_effect(o.effect, tol);
        ok = ok && d.is_effect;
        rep.effects.push_back(std::move(d));
        sum += o.effect;
    }
    rep.normalization_residual = distance(sum, identity(a.dim()));
    rep.passes = ok && rep.normalization_residual <= tol.eq_tol;
    return rep;
}

/// Throws PreconditionError unless validate() passes.
inline void require_valid(const DiscreteObservable &a, const Tolerance &tol, const char *what) {
    const auto rep = validate(a, tol);
    if (!rep.passes)
        throw PreconditionError(std::string(what) + ": not a valid observable (normalization residual " +
                                std::to_string(rep.normalization_residual) + ")");
}

inline bool is_pvm(const DiscreteObservable &a, const Tolerance &tol = {}) {
    for (const auto &o : a.outcomes())
        if (distance(o.effect * o.effect, o.effect) > tol.eq_tol)
            return false;
    return true;
}

/// Sum of the effects selected by the mask.
inline Matrix subset_effect(const DiscreteObservable &a, const SubsetMask &x) {
    if (x.size() != a.size())
        throw DimensionError("subset_effect: mask has " + std::to_string(x.size()) +
                             " entries, observable has " + std::to_string(a.size()) + " outcomes");
    Matrix s = zeros(a.dim());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (x.contains(i))
            s += a.effect(i);
    return s;
}

inline const std::string kPlus = "+1";
inline const std::string kMinus = "-1";

/// Binary observable (E, I - E) with labels "+1", "-1".
inline DiscreteObservable binary_observable(const Matrix &e, const Tolerance &tol = {}) {
    require_square(e, "binary_observable");
    return DiscreteObservable(e.rows(), {{kPlus, e}, {kMinus, identity(e.rows()) - e}}, tol);
}

inline DiscreteObservable binarize(const DiscreteObservable &a, const SubsetMask &x,
                                   const Tolerance &tol = {}) {
    return binary_observable(subset_effect(a, x), tol);
}

inline bool commutes(const DiscreteObservable &a, const DiscreteObservable &b,
                     const Tolerance &tol = {}) {
    if (a.dim() != b.dim())
        throw DimensionError("commutes: dimension mismatch");
    for (const auto &x : a.outcomes())
        for (const auto &y : b.outcomes())
            if ((x.effect * y.effect - y.effect * x.effect).norm() > tol.eq_tol)
                return false;
    return true;
}

inline DiscreteObservable post_process(const DiscreteObservable &m, const StochasticMatrix &beta,
                                       const Tolerance &tol = {}) {
    if (beta.rows() != static_cast<Eigen::Index>(m.size()))
        throw DimensionError("post_process: kernel has " + std::to_string(beta.rows()) +
                             " rows, observable has " + std::to_string(m.size()) + " outcomes");
    std::vector<Outcome> out;
    for (Eigen::Index x = 0; x < beta.cols(); ++x) {
        Matrix e = zeros(m.dim());
        for (std::size_t z = 0; z < m.size(); ++z)
            e += beta(static_cast<Eigen::Index>(z), x) * m.effect(z);
        out.push_back({beta.target_labels()[static_cast<std::size_t>(x)], std::move(e)});
    }
    return DiscreteObservable(m.dim(), std::move(out), tol);
}

/**
 * A_x = M(f^-1(x)). The summation runs over every source outcome with a 0/1
 * weight so the result is bit-identical to post_process with the
 * deterministic kernel of f.
 */
inline DiscreteObservable relabel(const DiscreteObservable &m, const RelabelingMap &f,
                                  const Tolerance &tol = {}) {
    if (f.source_size() != m.size())
        throw DimensionError("relabel: map is defined on " + std::to_string(f.source_size()) +
                             " outcomes, observable has " + std::to_string(m.size()));
    std::vector<Outcome> out;
    for (std::size_t x = 0; x < f.target_size(); ++x) {
        Matrix e = zeros(m.dim());
        for (std::size_t z = 0; z < m.size(); ++z)
            e += (f(z) == x ? 1.0 : 0.0) * m.effect(z);
        out.push_back({f.targets()[x], std::move(e)});
    }
    return DiscreteObservable(m.dim(), std::move(out), tol);
}

/// Observable with effects p_i I.
inline DiscreteObservable trivial_observable(Eigen::Index dim, const std::vector<double> &p,
                                             const std::vector<std::string> &labels,
                                             const Tolerance &tol = {}) {
    if (p.size() != labels.size())
        throw DimensionError("trivial_observable: label count mismatch");
    std::vector<Outcome> out;
    for (std::size_t i = 0; i < p.size(); ++i)
        out.push_back({labels[i], p[i] * identity(dim)});
    return DiscreteObservable(dim, std::move(out), tol);
}

/**
 * t A + (1 - t) A'. Both observables must have the same outcome space;
 * labels of dropped zero outcomes count as part of that space.
 */
inline DiscreteObservable convex_mixture(const DiscreteObservable &a, const DiscreteObservable &b,
                                         double t, const Tolerance &tol = {}) {
    if (a.dim() != b.dim())
        throw DimensionError("convex_mixture: dimension mismatch");
    if (!(t >= 0.0 && t <= 1.0))
        throw PreconditionError("convex_mixture: weight outside [0, 1]");
    auto space = [](const DiscreteObservable &o) {
        std::set<std::string> s;
        for (const auto &x : o.outcomes())
            s.insert(x.label);
        s.insert(o.null_labels().begin(), o.null_labels().end());
        return s;
    };
    if (space(a) != space(b))
        throw PreconditionError("convex_mixture: outcome label sets differ");

    std::vector<std::string> order = a.labels();
    for (const auto &l : b.labels())
        if (!a.index_of(l))
            order.push_back(l);
    std::vector<Outcome> out;
    for (const auto &l : order) {
        Matrix e = zeros(a.dim());
        if (auto i = a.index_of(l))
            e += t * a.effect(*i);
        if (auto j = b.index_of(l))
            e += (1.0 - t) * b.effect(*j);
        out.push_back({l, std::move(e)});
    }
    return DiscreteObservable(a.dim(), std::move(out), tol);
}

/// Effects eta A_i + (1 - eta) p_i I.
inline DiscreteObservable mix_with_trivial(const DiscreteObservable &a, double eta,
                                           const std::vector<double> &p, const Tolerance &tol = {}) {
    if (p.size() != a.size())
        throw DimensionError("mix_with_trivial: probability vector has wrong length");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw PreconditionError("mix_with_trivial: eta outside [0, 1]");
    double total = 0.0;
    for (double v : p) {
        if (v < 0.0)
            throw PreconditionError("mix_with_trivial: negative probability");
        total += v;
    }
    if (std::abs(total - 1.0) > tol.eq_tol)
        throw PreconditionError("mix_with_trivial: probabilities do not sum to 1");
    std::vector<Outcome> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back({a.label(i), eta * a.effect(i) + (1.0 - eta) * p[i] * identity(a.dim())});
    return DiscreteObservable(a.dim(), std::move(out), tol);
}

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

/**
 * A joint observable over a product of outcome sets, stored densely: cell
 * (x_1, ..., x_n) holds N({(x_1, ..., x_n)}), row-major with the last axis
 * fastest. Zero cells are kept here; joint() drops them.
 */
struct JointCertificate {
    Eigen::Index dim = 0;
    std::vector<std::vector<std::string>> axes;
    std::vector<Matrix> cells;
    std::vector<double> marginal_residuals;
    std::string provenance;

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (const auto &a : axes)
            n *= a.size();
        return n;
    }

    std::vector<std::size_t> tuple_of(std::size_t cell) const {
        std::vector<std::size_t> t(axes.size());
        for (std::size_t k = axes.size(); k-- > 0;) {
            t[k] = cell % axes[k].size();
            cell /= axes[k].size();
        }
        return t;
    }

    std::size_t cell_of(const std::vector<std::size_t> &tuple) const {
        std::size_t c = 0;
        for (std::size_t k = 0; k < axes.size(); ++k)
            c = c * axes[k].size() + tuple.at(k);
        return c;
    }

    std::string cell_label(std::size_t cell) const {
        const auto t = tuple_of(cell);
        std::string s = "(";
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (k)
                s += ",";
            s += axes[k][t[k]];
        }
        return s + ")";
    }

    /// Sum of the cells whose component on `axis` equals `index`.
    Matrix marginal(std::size_t axis, std::size_t index) const {
        Matrix s = zeros(dim);
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (tuple_of(c)[axis] == index)
                s += cells[c];
        return s;
    }

    DiscreteObservable joint(const Tolerance &tol = {}) const {
        std::vector<Outcome> out;
        for (std::size_t c = 0; c < cells.size(); ++c)
            out.push_back({cell_label(c), cells[c]});
        return DiscreteObservable(dim, std::move(out), tol);
    }

    /// For each outcome of `axis`, the set of joint() outcomes lying over it.
    std::vector<SubsetMask> marginal_masks(std::size_t axis, const Tolerance &tol = {}) const {
        const auto j = joint(tol);
        std::vector<SubsetMask> masks(axes.at(axis).size(), SubsetMask(j.size()));
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (auto k = j.index_of(cell_label(c)))
                masks[tuple_of(c)[axis]].set(*k);
        return masks;
    }

    /// Smallest eigenvalue over all cells.
    double min_cell_eigenvalue() const {
        double m = 0.0;
        bool first = true;
        for (const auto &c : cells) {
            const double v = min_eigenvalue(c);
            m = first ? v : std::min(m, v);
            first = false;
        }
        return m;
    }
};

/**
 * Recomputes marginal residuals from scratch: for axis k the largest
 * Frobenius distance between a marginal and the matching effect of targets[k]
 * (matched by label).
 */
inline std::vector<double> marginal_residuals(const JointCertificate &cert,
                                              const std::vector<DiscreteObservable> &targets) {
    if (targets.size() != cert.axes.size())
        throw DimensionError("marginal_residuals: axis count mismatch");
    std::vector<double> res;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        double r = 0.0;
        std::set<std::string> covered;
        for (std::size_t x = 0; x < cert.axes[k].size(); ++x) {
            const auto &lab = cert.axes[k][x];
            covered.insert(lab);
            const auto idx = targets[k].index_of(lab);
            const Matrix target = idx ? targets[k].effect(*idx) : zeros(cert.dim);
            r = std::max(r, distance(cert.marginal(k, x), target));
        }
        for (const auto &o : targets[k].outcomes())
            if (!covered.count(o.label))
                r = std::max(r, o.effect.norm());
        res.push_back(r);
    }
    return res;
}

/// Joint G_ij = A_i B_j of two commuting observables.
inline JointCertificate product_joint(const DiscreteObservable &a, const DiscreteObservable &b,
                                      const Tolerance &tol = {}) {
    if (!commutes(a, b, tol))
        throw PreconditionError("product_joint: observables do not commute");
    JointCertificate cert;
    cert.dim = a.dim();
    cert.axes = {a.labels(), b.labels()};
    cert.provenance = "product";
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            cert.cells.push_back(hermitize(a.effect(i) * b.effect(j)));
    cert.marginal_residuals = marginal_residuals(cert, {a, b});
    return cert;
}

} // namespace qcompat
