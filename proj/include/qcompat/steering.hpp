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
 * @file steering.hpp
 * Assemblages sigma_{x|k} = tr_A[(A_k(x) (x) I) rho] and the local-hidden-state
 * test over deterministic strategies lambda: settings -> outcomes.
 */

#include <optional>
#include <string>
#include <vector>

#include "feasibility.hpp"
#include "observable.hpp"

namespace qcompat {

class BipartiteState {
  public:
    BipartiteState() = default;
    BipartiteState(Eigen::Index dim_a, Eigen::Index dim_b, Matrix rho, const Tolerance &tol = {})
        : dim_a_(dim_a), dim_b_(dim_b), rho_(std::move(rho)) {
        if (dim_a < 1 || dim_b < 1)
            throw DimensionError("bipartite state: factor dimensions must be positive");
        if (rho_.rows() != dim_a * dim_b || rho_.cols() != dim_a * dim_b)
            throw DimensionError("bipartite state: rho is not " + std::to_string(dim_a * dim_b) + "x" +
                                 std::to_string(dim_a * dim_b));
        if (!all_finite(rho_))
            throw PreconditionError("bipartite state: non-finite entry");
        if (!is_psd(rho_, tol))
            throw NotPsdError("bipartite state: rho is not positive semidefinite");
        if (std::abs(rho_.trace() - Complex(1.0, 0.0)) > tol.eq_tol)
            throw PreconditionError("bipartite state: trace differs from 1");
        rho_ = hermitize(rho_);
    }

    Eigen::Index dim_a() const { return dim_a_; }
    Eigen::Index dim_b() const { return dim_b_; }
    const Matrix &rho() const { return rho_; }

    Matrix reduced_b() const { return partial_trace_first(rho_, dim_a_, dim_b_); }

  private:
    Eigen::Index dim_a_ = 0;
    Eigen::Index dim_b_ = 0;
    Matrix rho_;
};

/// (|00> + |11> + ...) / sqrt(d).
inline BipartiteState maximally_entangled(Eigen::Index d) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        psi(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
    return BipartiteState(d, d, psi * psi.adjoint());
}

inline BipartiteState product_state(const Matrix &rho_a, const Matrix &rho_b, const Tolerance &tol = {}) {
    return BipartiteState(rho_a.rows(), rho_b.rows(), tensor(rho_a, rho_b), tol);
}

struct Assemblage {
    Eigen::Index dim_b = 0;
    /// Outcome labels per setting.
    std::vector<std::vector<std::string>> labels;
    /// sigma[k][x].
    std::vector<std::vector<Matrix>> sigma;

    std::size_t settings() const { return sigma.size(); }

    /// Largest ||sum_x sigma_{x|k} - sum_x sigma_{x|0}||_F.
    double signaling_defect() const {
        double worst = 0.0;
        Matrix ref;
        for (const auto &row : sigma) {
            Matrix s = zeros(dim_b);
            for (const auto &m : row)
                s += m;
            if (ref.size() == 0)
                ref = s;
            else
                worst = std::max(worst, distance(s, ref));
        }
        return worst;
    }
};

inline Assemblage assemblage_from(const BipartiteState &rho, const std::vector<DiscreteObservable> &measurements) {
    Assemblage out;
    out.dim_b = rho.dim_b();
    const Matrix id_b = identity(rho.dim_b());
    for (const auto &m : measurements) {
        if (m.dim() != rho.dim_a())
            throw DimensionError("assemblage_from: measurement dimension " + std::to_string(m.dim()) +
                                 " differs from dimA " + std::to_string(rho.dim_a()));
        std::vector<Matrix> row;
        for (const auto &o : m.outcomes())
            row.push_back(hermitize(partial_trace_first(tensor(o.effect, id_b) * rho.rho(), rho.dim_a(), rho.dim_b())));
        out.labels.push_back(m.labels());
        out.sigma.push_back(std::move(row));
    }
    return out;
}

/// Deterministic strategy lambda as outcome indices per setting, plus rho_lambda.
struct LhsModel {
    std::vector<std::vector<std::size_t>> strategies;
    std::vector<Matrix> states;

    /// Largest ||sum_lambda [lambda(k) = x] rho_lambda - sigma_{x|k}||_F.
    double reconstruction_residual(const Assemblage &as) const {
        double worst = 0.0;
        for (std::size_t k = 0; k < as.settings(); ++k) {
            for (std::size_t x = 0; x < as.sigma[k].size(); ++x) {
                Matrix s = zeros(as.dim_b);
                for (std::size_t l = 0; l < strategies.size(); ++l)
                    if (strategies[l][k] == x)
                        s += states[l];
                worst = std::max(worst, distance(s, as.sigma[k][x]));
            }
        }
        return worst;
    }

    double min_eigenvalue() const {
        double m = 0.0;
        for (const auto &s : states)
            m = std::min(m, qcompat::min_eigenvalue(s));
        return m;
    }
};

inline constexpr std::size_t kMaxStrategies = 4096;

/// All maps settings -> outcomes, first setting slowest.
inline std::vector<std::vector<std::size_t>> deterministic_strategies(const std::vector<std::size_t> &outcomes) {
    std::size_t total = 1;
    for (auto n : outcomes) {
        if (n == 0)
            throw DimensionError("deterministic_strategies: setting without outcomes");
        if (total > kMaxStrategies / n)
            throw PreconditionError("lhs_check: more than " + std::to_string(kMaxStrategies) +
                                    " deterministic strategies");
        total *= n;
    }
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(outcomes.size(), 0);
    for (std::size_t t = 0; t < total; ++t) {
        out.push_back(cur);
        for (std::size_t k = outcomes.size(); k-- > 0;) {
            if (++cur[k] < outcomes[k])
                break;
            cur[k] = 0;
        }
    }
    return out;
}

struct LhsVerdict {
    FeasibilityVerdict solver;
    std::optional<LhsModel> model;
    double reconstruction_residual = 0.0;
};

inline LhsVerdict lhs_check(const Assemblage &as, const SolverOptions &opt = {}) {
    std::vector<std::size_t> counts;
    for (const auto &row : as.sigma)
        counts.push_back(row.size());
    const auto strategies = deterministic_strategies(counts);

    FeasibilityProblem p;
    for (std::size_t l = 0; l < strategies.size(); ++l)
        p.add_block(as.dim_b);
    for (std::size_t k = 0; k < as.settings(); ++k) {
        for (std::size_t x = 0; x < as.sigma[k].size(); ++x) {
            std::vector<Term> t;
            for (std::size_t l = 0; l < strategies.size(); ++l)
                if (strategies[l][k] == x)
                    t.push_back(Term::scaled(l));
            p.add_constraint(std::move(t), as.sigma[k][x]);
        }
    }
    LhsVerdict out;
    out.solver = dykstra_solve(p, opt);
    if (out.solver.feasible()) {
        LhsModel m{strategies, out.solver.point};
        out.reconstruction_residual = m.reconstruction_residual(as);
        out.model = std::move(m);
    }
    return out;
}

/**
 * LHS model from a joint observable G of the measurements:
 * rho_lambda = tr_A[(G_lambda (x) I) rho], with lambda the outcome tuple of G.
 */
inline LhsModel lhs_from_joint(const BipartiteState &rho, const JointCertificate &joint) {
    if (joint.dim != rho.dim_a())
        throw DimensionError("lhs_from_joint: joint dimension differs from dimA");
    LhsModel m;
    const Matrix id_b = identity(rho.dim_b());
    for (std::size_t c = 0; c < joint.cells.size(); ++c) {
        m.strategies.push_back(joint.tuple_of(c));
        m.states.push_back(
            hermitize(partial_trace_first(tensor(joint.cells[c], id_b) * rho.rho(), rho.dim_a(), rho.dim_b())));
    }
    return m;
}

enum class SteeringStatus { Steerable, Unsteerable, Undecided };

inline const char *to_string(SteeringStatus s) {
    switch (s) {
    case SteeringStatus::Steerable:
        return "STEERABLE";
    case SteeringStatus::Unsteerable:
        return "UNSTEERABLE";
    case SteeringStatus::Undecided:
        return "UNDECIDED";
    }
    return "?";
}

struct SteeringVerdict {
    SteeringStatus status = SteeringStatus::Undecided;
    Assemblage assemblage;
    LhsVerdict lhs;
};

inline SteeringVerdict steerable(const BipartiteState &rho, const std::vector<DiscreteObservable> &measurements,
                                 const SolverOptions &opt = {}) {
    SteeringVerdict v;
    v.assemblage = assemblage_from(rho, measurements);
    v.lhs = lhs_check(v.assemblage, opt);
    switch (v.lhs.solver.status) {
    case FeasibilityStatus::Feasible:
        v.status = SteeringStatus::Unsteerable;
        break;
    case FeasibilityStatus::NumericallyInfeasible:
        v.status = SteeringStatus::Steerable;
        break;
    case FeasibilityStatus::Undecided:
        v.status = SteeringStatus::Undecided;
        break;
    }
    return v;
}

} // namespace qcompat
