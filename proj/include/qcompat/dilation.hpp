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
 * @file dilation.hpp
 * Minimal Naimark dilations A_i = J* P_i J and the commutant test for
 * extremality: A is extreme iff the only block-diagonal Hermitian D with
 * J* D J = 0 is D = 0.
 *
 * The dilation space is the direct sum of the supports of the effects.
 * Block i carries J_i = diag(sqrt(lambda)) V_i*, built from the nonzero part
 * of the spectral decomposition A_i = V_i diag(lambda) V_i*, so that
 * J_i* J_i = A_i and dim K = sum_i rank A_i.
 */

#include <vector>

#include "observable.hpp"

namespace qcompat {

struct NaimarkDilation {
    Eigen::Index dilation_dim = 0;
    /// J : C^d -> K.
    Matrix isometry;
    /// P_i, orthogonal projections on K.
    std::vector<Matrix> blocks;
    /// First row of block i in K, and its size.
    std::vector<Eigen::Index> offsets;
    std::vector<Eigen::Index> ranks;

    /// The rows of J belonging to block i (the restricted square root of A_i).
    Matrix block_factor(std::size_t i) const {
        return isometry.middleRows(offsets.at(i), ranks.at(i));
    }
};

inline NaimarkDilation dilate_minimal(const DiscreteObservable &a, const Tolerance &tol = {}) {
    require_valid(a, tol, "dilate_minimal");
    std::vector<Matrix> factors;
    NaimarkDilation d;
    for (const auto &o : a.outcomes()) {
        const auto e = eigh(o.effect, tol.eq_tol);
        const double cut = kRankRelTol * std::max(1.0, e.values.cwiseAbs().maxCoeff());
        std::vector<Eigen::Index> support;
        for (Eigen::Index k = 0; k < e.values.size(); ++k)
            if (e.values(k) > cut)
                support.push_back(k);
        Matrix f(static_cast<Eigen::Index>(support.size()), a.dim());
        for (std::size_t r = 0; r < support.size(); ++r) {
            const Eigen::Index k = support[r];
            f.row(static_cast<Eigen::Index>(r)) =
                std::sqrt(e.values(k)) * e.vectors.col(k).adjoint();
        }
        d.offsets.push_back(d.dilation_dim);
        d.ranks.push_back(f.rows());
        d.dilation_dim += f.rows();
        factors.push_back(std::move(f));
    }
    d.isometry = Matrix::Zero(d.dilation_dim, a.dim());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        d.isometry.middleRows(d.offsets[i], d.ranks[i]) = factors[i];
        Matrix p = Matrix::Zero(d.dilation_dim, d.dilation_dim);
        for (Eigen::Index r = 0; r < d.ranks[i]; ++r)
            p(d.offsets[i] + r, d.offsets[i] + r) = 1.0;
        d.blocks.push_back(std::move(p));
    }
    return d;
}

struct DilationDiagnostics {
    double isometry_residual = 0.0;     ///< ||J*J - I||_F
    double orthogonality_residual = 0.0; ///< max ||P_i P_j - delta_ij P_i||_F and ||sum P_i - I||_F
    double reconstruction_residual = 0.0; ///< max ||J* P_i J - A_i||_F
    std::size_t rank_sum = 0;            ///< sum_i rank A_i
    Eigen::Index dilation_dim = 0;
    Eigen::Index span_rank = 0;          ///< dim of span{P_i J phi}
    bool minimal = false;

    bool ok(double residual_tol) const {
        return isometry_residual <= residual_tol && orthogonality_residual <= residual_tol &&
               reconstruction_residual <= residual_tol && minimal;
    }
};

inline DilationDiagnostics verify_dilation(const DiscreteObservable &a, const NaimarkDilation &d) {
    const Eigen::Index k = d.dilation_dim;
    if (d.isometry.rows() != k || d.isometry.cols() != a.dim())
        throw DimensionError("verify_dilation: isometry has wrong shape");
    if (d.blocks.size() != a.size())
        throw DimensionError("verify_dilation: block count differs from outcome count");
    for (const auto &p : d.blocks)
        if (p.rows() != k || p.cols() != k)
            throw DimensionError("verify_dilation: block has wrong shape");

    DilationDiagnostics out;
    out.dilation_dim = k;
    const Matrix &j = d.isometry;
    out.isometry_residual = distance(j.adjoint() * j, identity(a.dim()));

    Matrix total = Matrix::Zero(k, k);
    double orth = 0.0;
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
        total += d.blocks[i];
        for (std::size_t l = 0; l < d.blocks.size(); ++l) {
            const Matrix expect = i == l ? d.blocks[i] : Matrix::Zero(k, k);
            orth = std::max(orth, distance(d.blocks[i] * d.blocks[l], expect));
        }
        orth = std::max(orth, hermiticity_defect(d.blocks[i]));
    }
    out.orthogonality_residual = std::max(orth, distance(total, identity(k)));

    double rec = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        rec = std::max(rec, distance(j.adjoint() * d.blocks[i] * j, a.effect(i)));
        out.rank_sum += psd_rank(a.effect(i));
    }
    out.reconstruction_residual = rec;

    Matrix span(k, a.dim() * static_cast<Eigen::Index>(d.blocks.size()));
    for (std::size_t i = 0; i < d.blocks.size(); ++i)
        span.middleCols(static_cast<Eigen::Index>(i) * a.dim(), a.dim()) = d.blocks[i] * j;
    if (k > 0) {
        Eigen::JacobiSVD<Matrix> svd(span);
        const auto &s = svd.singularValues();
        const double cut = kRankRelTol * std::max(1.0, s.size() ? s(0) : 0.0);
        out.span_rank = static_cast<Eigen::Index>((s.array() > cut).count());
    }
    out.minimal = static_cast<std::size_t>(k) == out.rank_sum && out.span_rank == k;
    return out;
}

/// Relative singular-value threshold of the commutant kernel computation.
inline constexpr double kKernelRelTol = 1e-8;

struct ExtremalityReport {
    bool is_extreme = false;
    std::size_t kernel_dim = 0;
    /// Block-diagonal Hermitian operators on K with J* D J = 0, orthonormal
    /// in the Frobenius inner product.
    std::vector<Matrix> kernel_basis;
    NaimarkDilation dilation;

    /// The per-outcome perturbation J* P_i D P_i J of kernel element k.
    std::vector<Matrix> perturbation(std::size_t k) const {
        std::vector<Matrix> out;
        const Matrix &d = kernel_basis.at(k);
        for (std::size_t i = 0; i < dilation.blocks.size(); ++i) {
            const Matrix f = dilation.block_factor(i);
            const Matrix di =
                d.block(dilation.offsets[i], dilation.offsets[i], dilation.ranks[i], dilation.ranks[i]);
            out.push_back(hermitize(f.adjoint() * di * f));
        }
        return out;
    }
};

/**
 * Kernel of the real-linear map (D_i)_i -> sum_i J_i* D_i J_i over
 * block-diagonal Hermitian D. The observable is extreme iff the kernel is
 * trivial.
 */
inline ExtremalityReport is_extreme(const DiscreteObservable &a, const Tolerance &tol = {}) {
    ExtremalityReport rep;
    rep.dilation = dilate_minimal(a, tol);
    const auto &dil = rep.dilation;
    const Eigen::Index d = a.dim();

    Eigen::Index params = 0;
    for (auto r : dil.ranks)
        params += r * r;
    RealMatrix map(d * d, params);
    std::vector<std::pair<std::size_t, Matrix>> columns;
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < dil.ranks.size(); ++i) {
        const Matrix f = dil.block_factor(i);
        for (const auto &b : hermitian_basis(dil.ranks[i])) {
            map.col(col++) = herm_to_vec(f.adjoint() * b * f);
            columns.emplace_back(i, b);
        }
    }

    Eigen::JacobiSVD<RealMatrix> svd(map, Eigen::ComputeFullV);
    const auto &s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s(k) > kKernelRelTol * smax)
            ++rank;
    const RealMatrix &v = svd.matrixV();
    for (Eigen::Index k = rank; k < params; ++k) {
        Matrix dk = Matrix::Zero(dil.dilation_dim, dil.dilation_dim);
        for (Eigen::Index c = 0; c < params; ++c) {
            const auto &[blk, basis] = columns[static_cast<std::size_t>(c)];
            dk.block(dil.offsets[blk], dil.offsets[blk], dil.ranks[blk], dil.ranks[blk]) +=
                v(c, k) * basis;
        }
        rep.kernel_basis.push_back(std::move(dk));
    }
    rep.kernel_dim = rep.kernel_basis.size();
    rep.is_extreme = rep.kernel_dim == 0;
    return rep;
}

} // namespace qcompat
