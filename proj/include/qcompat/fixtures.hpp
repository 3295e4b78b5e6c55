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
 * @file fixtures.hpp
 * Named observables and states used by the tests, the samples and the
 * `repro-paper` command.
 */

#include <cmath>
#include <map>
#include <string>

#include "steering.hpp"

namespace qcompat::fixtures {

inline Matrix ket_bra(const Eigen::VectorXcd &v) { return v * v.adjoint(); }

inline Eigen::VectorXcd ket(std::initializer_list<Complex> entries) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(entries.size()));
    Eigen::Index i = 0;
    for (auto c : entries)
        v(i++) = c;
    return v;
}

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// (I + n . sigma) / 2 scaled by `weight`.
inline Matrix bloch_effect(double nx, double ny, double nz, double weight = 1.0) {
    return weight * 0.5 * (identity(2) + nx * pauli_x() + ny * pauli_y() + nz * pauli_z());
}

/// The two-valued counterexample pair: E = ((4/7)|1><1|, (4/7)|2><2|, rest) on C^2.
inline Matrix E1() { return (4.0 / 7.0) * ket_bra(ket({1.0, 0.0})); }
inline Matrix E2() { return (4.0 / 7.0) * ket_bra(ket({0.0, 1.0})); }
inline Matrix E3() { return identity(2) - E1() - E2(); }
inline Eigen::VectorXcd psi_minus() { return ket({1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)}); }
inline Matrix F1() { return (4.0 / 7.0) * ket_bra(psi_minus()); }
inline Matrix F2() { return identity(2) - F1(); }

inline DiscreteObservable E() { return DiscreteObservable(2, {{"1", E1()}, {"2", E2()}, {"3", E3()}}); }
inline DiscreteObservable F() { return DiscreteObservable(2, {{"1", F1()}, {"2", F2()}}); }

/// Mother (E_1, F_1, I - E_1 - F_1): E_1 and F_1 sit on disjoint outcome sets.
inline DiscreteObservable EF_mother() {
    return DiscreteObservable(2, {{"x", E1()}, {"y", F1()}, {"rest", identity(2) - E1() - F1()}});
}

/// Computational basis PVM on C^3.
inline DiscreteObservable A() {
    std::vector<Outcome> out;
    for (int i = 0; i < 3; ++i) {
        Matrix p = zeros(3);
        p(i, i) = 1.0;
        out.push_back({std::to_string(i + 1), p});
    }
    return DiscreteObservable(3, std::move(out));
}

/// (|phi+><phi+|, |phi-><phi-|, |3><3|) with phi+- = (|1> +- |2>)/sqrt 2.
inline DiscreteObservable B() {
    const double r = 1.0 / std::sqrt(2.0);
    Matrix p3 = zeros(3);
    p3(2, 2) = 1.0;
    return DiscreteObservable(3, {{"+", ket_bra(ket({r, r, 0.0}))}, {"-", ket_bra(ket({r, -r, 0.0}))}, {"3", p3}});
}

/// Two-valued relabeling (|1><1| + |2><2|, |3><3|) of A.
inline DiscreteObservable A_rel() {
    Matrix p12 = zeros(3), p3 = zeros(3);
    p12(0, 0) = p12(1, 1) = 1.0;
    p3(2, 2) = 1.0;
    return DiscreteObservable(3, {{"12", p12}, {"3", p3}});
}

/// Qubit trine: effects (I + n_k . sigma)/3 with n_k at 0, 120, 240 degrees in the x-z plane.
inline DiscreteObservable trine() {
    std::vector<Outcome> out;
    const double pi = std::acos(-1.0);
    for (int k = 0; k < 3; ++k) {
        const double t = 2.0 * pi * k / 3.0;
        out.push_back({std::to_string(k + 1), bloch_effect(std::sin(t), 0.0, std::cos(t), 2.0 / 3.0)});
    }
    return DiscreteObservable(2, std::move(out));
}

inline DiscreteObservable sigma_z() {
    return DiscreteObservable(2, {{kPlus, bloch_effect(0, 0, 1)}, {kMinus, bloch_effect(0, 0, -1)}});
}
inline DiscreteObservable sigma_x() {
    return DiscreteObservable(2, {{kPlus, bloch_effect(1, 0, 0)}, {kMinus, bloch_effect(-1, 0, 0)}});
}

inline DiscreteObservable half_half(Eigen::Index d = 2) {
    return DiscreteObservable(d, {{"1", 0.5 * identity(d)}, {"2", 0.5 * identity(d)}});
}

inline BipartiteState phi_plus() { return maximally_entangled(2); }

inline BipartiteState separable_mixture() {
    // 1/2 |0><0| (x) |+><+| + 1/2 |1><1| (x) |-><-|
    const Matrix a = 0.5 * tensor(bloch_effect(0, 0, 1), bloch_effect(1, 0, 0)) +
                     0.5 * tensor(bloch_effect(0, 0, -1), bloch_effect(-1, 0, 0));
    return BipartiteState(2, 2, a);
}

inline BipartiteState product_fixture() {
    return product_state(bloch_effect(0.6, 0.0, 0.8), bloch_effect(0.0, 1.0, 0.0));
}

inline BipartiteState maximally_mixed() { return BipartiteState(2, 2, 0.25 * identity(4)); }

inline std::map<std::string, DiscreteObservable> observables() {
    return {{"E", E()},
            {"F", F()},
            {"EF_mother", EF_mother()},
            {"A", A()},
            {"B", B()},
            {"A_rel", A_rel()},
            {"trine", trine()},
            {"sigma_z", sigma_z()},
            {"sigma_x", sigma_x()},
            {"half_half", half_half()}};
}

inline std::map<std::string, BipartiteState> states() {
    return {{"phi_plus", phi_plus()},
            {"separable_mixture", separable_mixture()},
            {"product", product_fixture()},
            {"maximally_mixed", maximally_mixed()}};
}

inline std::map<std::string, BipartiteState> separable_states() {
    return {{"separable_mixture", separable_mixture()},
            {"product", product_fixture()},
            {"maximally_mixed", maximally_mixed()}};
}

} // namespace qcompat::fixtures
