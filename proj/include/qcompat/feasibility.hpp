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
 * @file feasibility.hpp
 * Feasibility engine for tuples of Hermitian block variables constrained to
 * a product of PSD cones (optionally box-bounded, 0 <= X_k <= U_k) and to an
 * affine subspace given by real-linear matrix equations.
 *
 * Every equation has the form sum_t X_{block_t} (x) C_t = T, with C_t and T
 * Hermitian. A scalar block (dimension 1) times a matrix coefficient gives
 * the LP-style constraints sum_z c_z M_z = E; a matrix block times a 1x1
 * coefficient gives marginal constraints like sum_j G_ij = A_i.
 *
 * Internally each block is flattened to Frobenius-orthonormal real
 * coordinates, so projections are Euclidean projections in the Frobenius
 * geometry.
 */

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "operator_core.hpp"

namespace qcompat {

struct Block {
    Eigen::Index dim = 1;
    /// Optional upper bound U (PSD) giving the box 0 <= X <= U.
    std::optional<Matrix> upper;
};

/// One summand X_block (x) coefficient of an equality constraint.
struct Term {
    std::size_t block = 0;
    Matrix coefficient;

    /// w * X_block.
    static Term scaled(std::size_t block, double w = 1.0) {
        return {block, Matrix::Constant(1, 1, Complex(w, 0.0))};
    }
    /// x_block * C for a scalar block.
    static Term times(std::size_t block, Matrix c) { return {block, std::move(c)}; }
};

struct EqualityConstraint {
    std::vector<Term> terms;
    Matrix target;
};

class FeasibilityProblem {
  public:
    std::size_t add_block(Eigen::Index dim, std::optional<Matrix> upper = std::nullopt) {
        if (dim <= 0)
            throw DimensionError("block dimension must be positive");
        if (upper) {
            if (upper->rows() != dim || upper->cols() != dim)
                throw DimensionError("upper bound has wrong shape");
            if (!is_psd(*upper))
                throw PreconditionError("upper bound is not PSD");
        }
        blocks_.push_back({dim, std::move(upper)});
        offsets_.push_back(variables_);
        variables_ += dim * dim;
        return blocks_.size() - 1;
    }

    void add_constraint(std::vector<Term> terms, Matrix target) {
        require_square(target, "add_constraint");
        if (!is_hermitian(target, Tolerance{}.eq_tol * std::max(1.0, target.norm())))
            throw PreconditionError("constraint target is not Hermitian");
        for (const auto &t : terms) {
            if (t.block >= blocks_.size())
                throw DimensionError("constraint refers to unknown block " + std::to_string(t.block));
            require_square(t.coefficient, "add_constraint");
            if (blocks_[t.block].dim * t.coefficient.rows() != target.rows())
                throw DimensionError("term shape does not match target dimension");
            if (!is_hermitian(t.coefficient, 1e-12 * std::max(1.0, t.coefficient.norm())))
                throw PreconditionError("term coefficient is not Hermitian");
        }
        constraints_.push_back({std::move(terms), hermitize(target)});
    }

    const std::vector<Block> &blocks() const { return blocks_; }
    const std::vector<EqualityConstraint> &constraints() const { return constraints_; }
    Eigen::Index variable_count() const { return variables_; }
    Eigen::Index offset(std::size_t block) const { return offsets_.at(block); }

    Eigen::Index equation_count() const {
        Eigen::Index m = 0;
        for (const auto &c : constraints_)
            m += c.target.rows() * c.target.rows();
        return m;
    }

    /// Real matrix of the constraint map in Frobenius-orthonormal coordinates.
    RealMatrix constraint_matrix() const {
        RealMatrix a = RealMatrix::Zero(equation_count(), variables_);
        Eigen::Index row = 0;
        for (const auto &c : constraints_) {
            const Eigen::Index t = c.target.rows();
            for (const auto &term : c.terms) {
                const Eigen::Index n = blocks_[term.block].dim;
                const auto basis = hermitian_basis(n);
                for (Eigen::Index p = 0; p < n * n; ++p)
                    a.block(row, offsets_[term.block] + p, t * t, 1) +=
                        herm_to_vec(tensor(basis[static_cast<std::size_t>(p)], term.coefficient));
            }
            row += t * t;
        }
        return a;
    }

    RealVector target_vector() const {
        RealVector b(equation_count());
        Eigen::Index row = 0;
        for (const auto &c : constraints_) {
            const Eigen::Index t = c.target.rows();
            b.segment(row, t * t) = herm_to_vec(c.target);
            row += t * t;
        }
        return b;
    }

    RealVector pack(const std::vector<Matrix> &point) const {
        if (point.size() != blocks_.size())
            throw DimensionError("point has wrong block count");
        RealVector v(variables_);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            if (point[k].rows() != blocks_[k].dim || point[k].cols() != blocks_[k].dim)
                throw DimensionError("point block has wrong shape");
            v.segment(offsets_[k], blocks_[k].dim * blocks_[k].dim) = herm_to_vec(point[k]);
        }
        return v;
    }

    std::vector<Matrix> unpack(const RealVector &v) const {
        std::vector<Matrix> out;
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const Eigen::Index n = blocks_[k].dim;
            out.push_back(vec_to_herm(v.segment(offsets_[k], n * n), n));
        }
        return out;
    }

    /// Frobenius norm of (sum of terms - target) for each constraint.
    std::vector<double> constraint_residuals(const std::vector<Matrix> &point) const {
        std::vector<double> out;
        for (const auto &c : constraints_) {
            Matrix s = -c.target;
            for (const auto &t : c.terms)
                s += tensor(point.at(t.block), t.coefficient);
            out.push_back(s.norm());
        }
        return out;
    }

    /// sqrt of the summed squared constraint residuals.
    double affine_residual(const std::vector<Matrix> &point) const {
        double s = 0.0;
        for (double r : constraint_residuals(point))
            s += r * r;
        return std::sqrt(s);
    }

    /// Largest amount by which a block leaves its cone (negative eigenvalue
    /// or excess over the upper bound).
    double cone_violation(const std::vector<Matrix> &point) const {
        double v = 0.0;
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            v = std::max(v, -min_eigenvalue(point.at(k)));
            if (blocks_[k].upper)
                v = std::max(v, max_eigenvalue(point[k] - *blocks_[k].upper));
        }
        return v;
    }

  private:
    std::vector<Block> blocks_;
    std::vector<Eigen::Index> offsets_;
    std::vector<EqualityConstraint> constraints_;
    Eigen::Index variables_ = 0;
};

/**
 * Projection onto {X >= 0}, or with an upper bound U onto {0 <= X <= U}.
 * The bounded case works in the Loewner frame of U: X is mapped through the
 * pseudoinverse square root of U, clipped to [0, 1] and mapped back. This is
 * exact for U = I and approximate otherwise; the result always satisfies
 * 0 <= result <= U and is supported on supp U.
 */
inline Matrix project_psd(const Matrix &x, const std::optional<Matrix> &upper = std::nullopt,
                          const Tolerance &tol = {}) {
    const auto e = eigh(x, tol.eq_tol * std::max(1.0, x.norm()));
    if (!upper)
        return spectral_apply(e, [](double l) { return std::max(l, 0.0); });
    const Matrix s = sqrt_psd(*upper, tol);
    const Matrix sinv = pinv(s);
    const auto frame = eigh(sinv * hermitize(x) * sinv, 1e-6);
    const Matrix clipped = spectral_apply(frame, [](double l) { return std::clamp(l, 0.0, 1.0); });
    return hermitize(s * clipped * s);
}

/**
 * Euclidean projector onto the affine set {x : A x = b} (onto the set of
 * least-squares solutions when the system is inconsistent).
 */
class AffineProjector {
  public:
    explicit AffineProjector(const FeasibilityProblem &p, double cutoff = kPinvCutoff)
        : a_(p.constraint_matrix()), b_(p.target_vector()) {
        const Eigen::Index n = a_.cols();
        if (a_.rows() == 0) {
            basis_ = RealMatrix::Zero(n, 0);
            x0_ = RealVector::Zero(n);
            return;
        }
        Eigen::JacobiSVD<RealMatrix> svd(a_, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto &s = svd.singularValues();
        const double smax = s.size() ? s(0) : 0.0;
        Eigen::Index r = 0;
        while (r < s.size() && smax > 0.0 && s(r) > cutoff * smax)
            ++r;
        basis_ = svd.matrixV().leftCols(r);
        const RealVector coeffs = svd.matrixU().leftCols(r).transpose() * b_;
        x0_ = basis_ * coeffs.cwiseQuotient(s.head(r));
        min_residual_ = (a_ * x0_ - b_).norm();
        sigma_max_ = smax;
    }

    /// Minimum-norm least-squares point.
    const RealVector &min_norm_point() const { return x0_; }
    /// ||A x0 - b||; zero up to roundoff iff the system is consistent.
    double min_residual() const { return min_residual_; }
    double target_norm() const { return b_.norm(); }
    double sigma_max() const { return sigma_max_; }

    bool consistent(double tol) const { return min_residual_ <= tol * std::max(1.0, b_.norm()); }

    RealVector project(const RealVector &x) const { return x - basis_ * (basis_.transpose() * x) + x0_; }

    double residual(const RealVector &x) const { return a_.rows() ? (a_ * x - b_).norm() : 0.0; }

  private:
    RealMatrix a_;
    RealVector b_;
    RealMatrix basis_; // orthonormal basis of the row space of A
    RealVector x0_;
    double min_residual_ = 0.0;
    double sigma_max_ = 0.0;
};

/// Thrown by project_affine when the constraints admit no solution.
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

inline std::vector<Matrix> project_affine(const FeasibilityProblem &p, const std::vector<Matrix> &point) {
    const AffineProjector proj(p);
    if (!proj.consistent(1e-9))
        throw InfeasibleError("constraint system is inconsistent (least-squares residual " +
                              std::to_string(proj.min_residual()) + ")");
    return p.unpack(proj.project(p.pack(point)));
}

enum class FeasibilityStatus { Feasible, NumericallyInfeasible, Undecided };

inline const char *to_string(FeasibilityStatus s) {
    switch (s) {
    case FeasibilityStatus::Feasible:
        return "FEASIBLE";
    case FeasibilityStatus::NumericallyInfeasible:
        return "NUMERICALLY_INFEASIBLE";
    case FeasibilityStatus::Undecided:
        return "UNDECIDED";
    }
    return "?";
}

struct FeasibilityVerdict {
    FeasibilityStatus status = FeasibilityStatus::Undecided;
    /// Block values; set only when FEASIBLE.
    std::vector<Matrix> point;
    /// Affine residual plus cone violation of the returned (or last) point.
    double residual = std::numeric_limits<double>::infinity();
    /// Limit of the inter-set gap; set only when NUMERICALLY_INFEASIBLE.
    double separation_gap = 0.0;
    std::size_t iterations = 0;
    /// Gap ||x_cone - x_affine|| per iteration, when requested.
    std::vector<double> gap_history;

    bool feasible() const { return status == FeasibilityStatus::Feasible; }
};

struct SolverOptions {
    std::size_t max_iter = 50000;
    double feas_tol = 1e-8;
    /// Dykstra correction on the cone step. Off (the default) gives plain
    /// alternating projections, whose gap sequence is monotone and whose
    /// gap stalls quickly on infeasible instances.
    bool dykstra = false;
    bool record_gaps = false;
    /// Window and relative threshold of the stall test.
    std::size_t stall_window = 100;
    double stall_rel_change = 1e-10;
    Tolerance tol{};
};

namespace detail {

/// Cone projection of a flattened point, block by block.
inline void project_cone_inplace(const FeasibilityProblem &p, RealVector &v, const Tolerance &tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    for (std::size_t k = 0; k < p.blocks().size(); ++k) {
        const auto &blk = p.blocks()[k];
        const Eigen::Index n = blk.dim;
        auto seg = v.segment(p.offset(k), n * n);
        if (!blk.upper && n == 1) {
            seg(0) = std::max(seg(0), 0.0);
            continue;
        }
        const Matrix x = vec_to_herm(seg, n);
        if (blk.upper) {
            seg = herm_to_vec(project_psd(x, blk.upper, tol));
            continue;
        }
        es.compute(x);
        const RealVector lam = es.eigenvalues().cwiseMax(0.0);
        const Matrix &u = es.eigenvectors();
        seg = herm_to_vec(u * lam.cast<Complex>().asDiagonal() * u.adjoint());
    }
}

} // namespace detail

/**
 * Alternating projections between the cone product and the affine set,
 * started from the minimum-norm affine point, with optional Dykstra
 * correction of the cone step.
 *
 * FEASIBLE: a point of the cone product whose affine residual is at most
 * feas_tol (returned as the affine projection of that point instead when
 * the projection stays inside the cones within eig_tol).
 * NUMERICALLY_INFEASIBLE: the gap stalled (relative change below
 * stall_rel_change over stall_window iterations) above 10 feas_tol and above
 * the roundoff floor; an affine system whose least-squares residual exceeds
 * the same threshold reports an infinite gap.
 * UNDECIDED: a gap that stalls below that threshold, or max_iter reached.
 */
inline FeasibilityVerdict dykstra_solve(const FeasibilityProblem &p, const SolverOptions &opt = {}) {
    FeasibilityVerdict out;
    const AffineProjector aff(p);
    const double floor = 1e-11 * std::max(1.0, aff.target_norm());
    const double infeasible_gap = std::max(10.0 * opt.feas_tol, floor);
    if (aff.min_residual() > infeasible_gap) {
        out.status = FeasibilityStatus::NumericallyInfeasible;
        out.separation_gap = std::numeric_limits<double>::infinity();
        out.residual = aff.min_residual();
        return out;
    }

    RealVector x = aff.min_norm_point();
    RealVector corr = RealVector::Zero(x.size());
    RealVector y(x.size());
    double gap_mark = -1.0;

    auto finish_feasible = [&](const RealVector &cone_pt, const RealVector &aff_pt, double cone_res) {
        out.status = FeasibilityStatus::Feasible;
        const auto pa = p.unpack(aff_pt);
        const double viol = p.cone_violation(pa);
        if (viol <= opt.tol.eig_tol) {
            out.point = pa;
            out.residual = p.affine_residual(pa) + viol;
        } else {
            out.point = p.unpack(cone_pt);
            out.residual = cone_res + p.cone_violation(out.point);
        }
    };

    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        y = x + corr;
        detail::project_cone_inplace(p, y, opt.tol);
        if (opt.dykstra)
            corr = x + corr - y;
        const RealVector x_next = aff.project(y);
        const double gap = (y - x_next).norm();
        out.iterations = it;
        if (opt.record_gaps)
            out.gap_history.push_back(gap);

        if (gap <= opt.feas_tol) {
            const double res = aff.residual(y);
            if (res <= opt.feas_tol) {
                finish_feasible(y, x_next, res);
                return out;
            }
        }
        if (it % opt.stall_window == 0) {
            if (gap_mark > 0.0 && std::abs(gap - gap_mark) <= opt.stall_rel_change * gap_mark) {
                // a stalled gap between feas_tol and the separation threshold decides nothing
                out.status = gap > infeasible_gap ? FeasibilityStatus::NumericallyInfeasible
                                                  : FeasibilityStatus::Undecided;
                if (gap > infeasible_gap)
                    out.separation_gap = gap;
                out.residual = gap;
                return out;
            }
            gap_mark = gap;
        }
        x = x_next;
        out.residual = gap;
    }
    out.status = FeasibilityStatus::Undecided;
    return out;
}

} // namespace qcompat
