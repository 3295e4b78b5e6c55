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
 * @file random.hpp
 * Seeded generators for matrices, observables and states.
 */

#include <random>

#include "steering.hpp"

namespace qcompat::random {

using Rng = std::mt19937_64;

/// Complex Ginibre matrix with standard normal real and imaginary parts.
inline Matrix ginibre(Rng &rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = Complex(n(rng), n(rng));
    return m;
}

/// Haar-random unitary (QR of a Ginibre matrix with phase fix).
inline Matrix unitary(Rng &rng, Eigen::Index d) {
    const Matrix g = ginibre(rng, d, d);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < d; ++k) {
        const double a = std::abs(r(k, k));
        if (a > 0.0)
            q.col(k) *= r(k, k) / a;
    }
    return q;
}

/// Random PSD matrix of the given rank.
inline Matrix psd(Rng &rng, Eigen::Index d, Eigen::Index rank) {
    const Matrix g = ginibre(rng, d, rank);
    return hermitize(g * g.adjoint());
}

/// Random effect 0 <= E <= I.
inline Matrix effect(Rng &rng, Eigen::Index d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Matrix v = unitary(rng, d);
    Eigen::VectorXd l(d);
    for (Eigen::Index k = 0; k < d; ++k)
        l(k) = u(rng);
    return hermitize(v * l.cast<Complex>().asDiagonal() * v.adjoint());
}

/**
 * Random observable with n outcomes: A_i = S^{-1/2} G_i S^{-1/2} with G_i
 * random PSD of rank `rank` (full rank when 0) and S = sum G_i.
 */
inline DiscreteObservable observable(Rng &rng, Eigen::Index d, std::size_t n, Eigen::Index rank = 0) {
    const Eigen::Index r = rank > 0 ? rank : d;
    std::vector<Matrix> g;
    Matrix s = zeros(d);
    for (std::size_t i = 0; i < n; ++i) {
        g.push_back(psd(rng, d, r));
        s += g.back();
    }
    const Matrix si = pinv(sqrt_psd(s));
    std::vector<Outcome> out;
    Matrix total = zeros(d);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        out.push_back({std::to_string(i + 1), hermitize(si * g[i] * si)});
        total += out.back().effect;
    }
    // last effect closes the normalization exactly
    out.push_back({std::to_string(n), hermitize(identity(d) - total)});
    return DiscreteObservable(d, std::move(out));
}

/// Random rank-one PVM (random orthonormal basis).
inline DiscreteObservable pvm(Rng &rng, Eigen::Index d) {
    const Matrix v = unitary(rng, d);
    std::vector<Outcome> out;
    for (Eigen::Index k = 0; k < d; ++k)
        out.push_back({std::to_string(k + 1), hermitize(v.col(k) * v.col(k).adjoint())});
    return DiscreteObservable(d, std::move(out));
}

/// Random density matrix (induced measure with full rank).
inline Matrix density(Rng &rng, Eigen::Index d) {
    Matrix p = psd(rng, d, d);
    return p / p.trace().real();
}

inline BipartiteState bipartite_state(Rng &rng, Eigen::Index da, Eigen::Index db) {
    return BipartiteState(da, db, density(rng, da * db));
}

} // namespace qcompat::random
