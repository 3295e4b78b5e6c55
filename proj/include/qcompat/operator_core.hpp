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
 * @file operator_core.hpp
 * Dense complex matrix helpers: toleranced Hermiticity, Loewner order,
 * spectral functions, pseudoinverse, the Douglas factorization
 * B = A* C A, Kronecker products and partial traces.
 *
 * Tensor convention: for H_A (x) H_B the basis index is i_A * dim_B + i_B.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qcompat {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A matrix that should be positive semidefinite is not (beyond tolerance).
class NotPsdError : public Error {
  public:
    using Error::Error;
};

/// A Loewner-order precondition such as 0 <= B <= A*A fails.
class OrderError : public Error {
  public:
    using Error::Error;
};

/// Any other violated precondition (non-Hermitian input, bad parameters).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/**
 * Absolute slacks used by every toleranced predicate.
 *
 * eig_tol bounds how far an eigenvalue may sit outside its allowed interval,
 * eq_tol bounds Frobenius distances in equality tests.
 */
struct Tolerance {
    double eig_tol = 1e-9;
    double eq_tol = 1e-9;

    /// Throws PreconditionError unless both slacks lie in (0, 1e-3].
    void check() const {
        auto ok = [](double v) { return v > 0.0 && v <= 1e-3; };
        if (!ok(eig_tol) || !ok(eq_tol))
            throw PreconditionError("tolerances must lie in (0, 1e-3]");
    }
};

/// Relative singular-value cutoff used by pinv() when no cutoff is given.
inline constexpr double kPinvCutoff = 1e-10;

/// Relative eigenvalue threshold below which an eigenvalue counts as zero in
/// rank computations (dilation block sizes, rank-1 tests).
inline constexpr double kRankRelTol = 1e-8;

inline bool is_square(const Matrix &m) { return m.rows() == m.cols(); }

inline void require_square(const Matrix &m, const char *what) {
    if (!is_square(m))
        throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_same_shape(const Matrix &a, const Matrix &b, const char *what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                             "x" + std::to_string(b.cols()));
}

inline bool all_finite(const Matrix &m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const Complex z = m.data()[i];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            return false;
    }
    return true;
}

inline Matrix identity(Eigen::Index d) { return Matrix::Identity(d, d); }

inline Matrix zeros(Eigen::Index d) { return Matrix::Zero(d, d); }

/// Frobenius norm of X - X*.
inline double hermiticity_defect(const Matrix &m) {
    require_square(m, "hermiticity_defect");
    return (m - m.adjoint()).norm();
}

inline bool is_hermitian(const Matrix &m, double eq_tol) {
    return is_square(m) && hermiticity_defect(m) <= eq_tol;
}

/// (X + X*) / 2.
inline Matrix hermitize(const Matrix &m) {
    require_square(m, "hermitize");
    return (m + m.adjoint()) * 0.5;
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
struct HermitianEigen {
    RealVector values;
    Matrix vectors;
};

/**
 * Hermitizes the input and diagonalizes it. Throws PreconditionError when
 * the input is further than eq_tol from Hermitian.
 */
inline HermitianEigen eigh(const Matrix &m, double eq_tol = Tolerance{}.eq_tol) {
    require_square(m, "eigh");
    if (hermiticity_defect(m) > eq_tol * std::max(1.0, m.norm()))
        throw PreconditionError("eigh: matrix is not Hermitian (defect " +
                                std::to_string(hermiticity_defect(m)) + ")");
    if (m.rows() == 0)
        return {RealVector(0), Matrix(0, 0)};
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
    return {es.eigenvalues(), es.eigenvectors()};
}

/// V diag(f(lambda)) V*.
template <class F> Matrix spectral_apply(const HermitianEigen &eig, F &&f) {
    const Eigen::Index n = eig.values.size();
    Eigen::VectorXcd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        w(i) = Complex(f(eig.values(i)), 0.0);
    return eig.vectors * w.asDiagonal() * eig.vectors.adjoint();
}

inline double min_eigenvalue(const Matrix &m) {
    const auto e = eigh(m);
    return e.values.size() ? e.values(0) : 0.0;
}

/// Largest eigenvalue of a Hermitian matrix; PreconditionError otherwise.
inline double max_eigenvalue(const Matrix &m) {
    const auto e = eigh(m);
    return e.values.size() ? e.values(e.values.size() - 1) : 0.0;
}

inline bool is_psd(const Matrix &m, const Tolerance &tol = {}) {
    return is_hermitian(m, tol.eq_tol) && min_eigenvalue(m) >= -tol.eig_tol;
}

/// True iff E is Hermitian and its spectrum lies in [-eig_tol, 1 + eig_tol].
inline bool check_effect(const Matrix &e, const Tolerance &tol = {}) {
    require_square(e, "check_effect");
    if (!all_finite(e) || hermiticity_defect(e) > tol.eq_tol)
        return false;
    const auto eig = eigh(e, tol.eq_tol);
    if (eig.values.size() == 0)
        return true;
    return eig.values(0) >= -tol.eig_tol && eig.values(eig.values.size() - 1) <= 1.0 + tol.eig_tol;
}

/// A <= B in the Loewner order: min eigenvalue of B - A is at least -eig_tol.
inline bool loewner_leq(const Matrix &a, const Matrix &b, const Tolerance &tol = {}) {
    require_square(a, "loewner_leq");
    require_same_shape(a, b, "loewner_leq");
    return min_eigenvalue(b - a) >= -tol.eig_tol;
}

/// Numerical rank of a Hermitian PSD matrix.
inline std::size_t psd_rank(const Matrix &m) {
    const auto e = eigh(m);
    if (e.values.size() == 0)
        return 0;
    const double cut = kRankRelTol * std::max(1.0, e.values.cwiseAbs().maxCoeff());
    return static_cast<std::size_t>((e.values.array() > cut).count());
}

/**
 * Clips eigenvalues in [-eig_tol, 0) to zero. Throws NotPsdError when an
 * eigenvalue is below -eig_tol.
 */
inline Matrix clip_psd(const Matrix &m, const Tolerance &tol = {}) {
    const auto e = eigh(m, tol.eq_tol);
    if (e.values.size() && e.values(0) < -tol.eig_tol)
        throw NotPsdError("matrix has eigenvalue " + std::to_string(e.values(0)));
    return spectral_apply(e, [](double l) { return std::max(l, 0.0); });
}

/// Positive square root; negative eigenvalues above -eig_tol are clipped.
inline Matrix sqrt_psd(const Matrix &m, const Tolerance &tol = {}) {
    const auto e = eigh(m, tol.eq_tol);
    if (e.values.size() && e.values(0) < -tol.eig_tol)
        throw NotPsdError("sqrt_psd: eigenvalue " + std::to_string(e.values(0)) + " below -eig_tol");
    return spectral_apply(e, [](double l) { return std::sqrt(std::max(l, 0.0)); });
}

/// Moore-Penrose pseudoinverse; singular values below cutoff * sigma_max count as zero.
inline Matrix pinv(const Matrix &m, double cutoff = kPinvCutoff) {
    if (m.size() == 0)
        return Matrix(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    Eigen::VectorXcd inv(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        inv(i) = (smax > 0.0 && s(i) > cutoff * smax) ? Complex(1.0 / s(i), 0.0) : Complex(0.0, 0.0);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/**
 * Douglas factorization: given A : H -> K and 0 <= B <= A*A, returns
 * C = (A^+)* B A^+ on K. C satisfies 0 <= C <= I, A* C A = B and vanishes on
 * the orthogonal complement of ran A.
 *
 * Throws OrderError if 0 <= B <= A*A fails beyond eig_tol.
 */
inline Matrix douglas_factor(const Matrix &a, const Matrix &b, const Tolerance &tol = {}) {
    require_square(b, "douglas_factor");
    if (a.cols() != b.rows())
        throw DimensionError("douglas_factor: A has " + std::to_string(a.cols()) +
                             " columns but B is " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    if (!is_hermitian(b, tol.eq_tol))
        throw PreconditionError("douglas_factor: B is not Hermitian");
    const Matrix ata = a.adjoint() * a;
    if (min_eigenvalue(b) < -tol.eig_tol)
        throw OrderError("douglas_factor: B is not positive");
    if (min_eigenvalue(ata - b) < -tol.eig_tol)
        throw OrderError("douglas_factor: B <= A*A does not hold");

    const Matrix ap = pinv(a);
    const Matrix range_proj = a * ap; // projection onto ran A
    Matrix c = ap.adjoint() * hermitize(b) * ap;
    c = range_proj * c * range_proj.adjoint();
    return hermitize(c);
}

/// Kronecker product, (i_A i_B, j_A j_B) row-major.
inline Matrix tensor(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// tr_A of an operator on H_A (x) H_B.
inline Matrix partial_trace_first(const Matrix &x, Eigen::Index dim_a, Eigen::Index dim_b) {
    require_square(x, "partial_trace_first");
    if (dim_a <= 0 || dim_b <= 0 || x.rows() != dim_a * dim_b)
        throw DimensionError("partial_trace_first: " + std::to_string(x.rows()) +
                             " is not " + std::to_string(dim_a) + "*" + std::to_string(dim_b));
    Matrix out = Matrix::Zero(dim_b, dim_b);
    for (Eigen::Index a = 0; a < dim_a; ++a)
        out += x.block(a * dim_b, a * dim_b, dim_b, dim_b);
    return out;
}

/// Frobenius distance.
inline double distance(const Matrix &a, const Matrix &b) {
    require_same_shape(a, b, "distance");
    return (a - b).norm();
}

// Real coordinates for Hermitian n x n matrices in the Frobenius-orthonormal
// basis: E_kk, then for k < l the pair (E_kl + E_lk)/sqrt2, i(E_kl - E_lk)/sqrt2.
// Euclidean norms of coordinate vectors equal Frobenius norms.

inline RealVector herm_to_vec(const Matrix &h) {
    const Eigen::Index n = h.rows();
    RealVector v(n * n);
    Eigen::Index p = 0;
    for (Eigen::Index k = 0; k < n; ++k)
        v(p++) = h(k, k).real();
    const double s = std::sqrt(2.0);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = k + 1; l < n; ++l) {
            v(p++) = s * 0.5 * (h(k, l).real() + h(l, k).real());
            v(p++) = s * 0.5 * (h(l, k).imag() - h(k, l).imag());
        }
    return v;
}

template <class Vec> Matrix vec_to_herm(const Vec &v, Eigen::Index n) {
    Matrix h = Matrix::Zero(n, n);
    Eigen::Index p = 0;
    for (Eigen::Index k = 0; k < n; ++k)
        h(k, k) = v(p++);
    const double s = 1.0 / std::sqrt(2.0);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = k + 1; l < n; ++l) {
            const double re = v(p++) * s;
            const double im = v(p++) * s;
            h(k, l) = Complex(re, -im);
            h(l, k) = Complex(re, im);
        }
    return h;
}

/// The n^2 basis matrices in coordinate order.
inline std::vector<Matrix> hermitian_basis(Eigen::Index n) {
    std::vector<Matrix> out;
    RealVector e = RealVector::Zero(n * n);
    for (Eigen::Index p = 0; p < n * n; ++p) {
        e.setZero();
        e(p) = 1.0;
        out.push_back(vec_to_herm(e, n));
    }
    return out;
}

} // namespace qcompat
