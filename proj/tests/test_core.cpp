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

#include <catch_amalgamated.hpp>

#include <qcompat/dilation.hpp>
#include <qcompat/fixtures.hpp>
#include <qcompat/observable.hpp>

#include "properties.hpp"

using namespace qcompat;
using Catch::Matchers::WithinAbs;

namespace {

Matrix diag(std::initializer_list<double> v) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        d(i++) = x;
    return d.cast<Complex>().asDiagonal();
}

void require_tallies(const props::Tallies &t) {
    for (const auto &tally : t.list()) {
        INFO(tally.name << ": " << tally.failures << "/" << tally.cases << " failed, first " << tally.first_failure);
        CHECK(tally.ok());
    }
}

} // namespace

TEST_CASE("check_effect", "[operator_core]") {
    CHECK(check_effect(fixtures::E1()));
    CHECK(check_effect(identity(2)));
    CHECK_FALSE(check_effect(2.0 * identity(2)));
    CHECK_THROWS_AS(check_effect(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("loewner_leq on the counterexample sums", "[operator_core]") {
    CHECK(loewner_leq(zeros(2), fixtures::F1()));
    CHECK_FALSE(loewner_leq(fixtures::E1() + fixtures::E2() + fixtures::F1(), identity(2)));
    CHECK(loewner_leq(fixtures::E3() + fixtures::F1(), identity(2)));
    CHECK_THROWS_AS(loewner_leq(identity(2), identity(3)), DimensionError);
}

TEST_CASE("max_eigenvalue closed forms", "[operator_core]") {
    CHECK_THAT(max_eigenvalue(fixtures::E1() + fixtures::E2() + fixtures::F1()), WithinAbs(8.0 / 7.0, 1e-12));
    CHECK_THAT(max_eigenvalue(identity(4)), WithinAbs(1.0, 1e-12));
    // 2x2 matrix with trace 2 and determinant 1/2, scaled by 4/7
    const double oracle = (4.0 / 7.0) * (1.0 + std::sqrt(1.0 - 0.5));
    CHECK_THAT(max_eigenvalue(fixtures::E1() + fixtures::F1()), WithinAbs(oracle, 1e-12));
    CHECK_THAT(oracle, WithinAbs(0.9754895892494555, 1e-15));
    Matrix nonherm = zeros(2);
    nonherm(0, 1) = 1.0;
    CHECK_THROWS_AS(max_eigenvalue(nonherm), PreconditionError);
}

TEST_CASE("sqrt_psd", "[operator_core]") {
    CHECK(distance(sqrt_psd(diag({4, 9})), diag({2, 3})) < 1e-12);
    const Matrix p = fixtures::ket_bra(fixtures::psi_minus());
    CHECK(distance(sqrt_psd(p), p) < 1e-12);
    CHECK(distance(sqrt_psd(fixtures::F1()), (2.0 / std::sqrt(7.0)) * p) < 1e-12);
    CHECK(distance(sqrt_psd(diag({1, -1e-12})), diag({1, 0})) < 1e-12);
    CHECK_THROWS_AS(sqrt_psd(diag({1, -1e-3})), NotPsdError);
}

TEST_CASE("pinv", "[operator_core]") {
    CHECK(distance(pinv(diag({2, 0})), diag({0.5, 0})) < 1e-15);
    CHECK(distance(pinv(2.0 * identity(2)), 0.5 * identity(2)) < 1e-15);
    random::Rng rng(1);
    const Matrix u = random::unitary(rng, 3);
    CHECK(distance(pinv(u), u.adjoint()) < 1e-12);
}

TEST_CASE("douglas_factor", "[operator_core]") {
    const Matrix e = fixtures::F1();
    CHECK(distance(douglas_factor(identity(2), e), e) < 1e-12);
    CHECK(distance(douglas_factor(2.0 * identity(2), identity(2)), 0.25 * identity(2)) < 1e-12);
    CHECK_THROWS_AS(douglas_factor(identity(2), 2.0 * identity(2)), OrderError);

    const auto trine = fixtures::trine();
    const auto dil = dilate_minimal(trine);
    const Matrix pj = dil.blocks[0] * dil.isometry;
    const Matrix b = 0.5 * trine.effect(0);
    const Matrix c = douglas_factor(pj, b);
    CHECK(distance(pj.adjoint() * c * pj, b) < 1e-10);
    CHECK(min_eigenvalue(c) >= -1e-9);
    CHECK(max_eigenvalue(c - dil.blocks[0]) <= 1e-9);
}

TEST_CASE("tensor and partial trace", "[operator_core]") {
    CHECK(distance(tensor(identity(2), identity(2)), identity(4)) == 0.0);
    CHECK(distance(tensor(diag({1, 0}), identity(2)), diag({1, 1, 0, 0})) == 0.0);
    CHECK(distance(tensor(fixtures::pauli_z(), fixtures::pauli_z()), diag({1, -1, -1, 1})) == 0.0);
    CHECK(distance(partial_trace_first(identity(4), 2, 2), 2.0 * identity(2)) == 0.0);
    CHECK(distance(partial_trace_first(fixtures::phi_plus().rho(), 2, 2), 0.5 * identity(2)) < 1e-15);
    const Matrix ra = fixtures::bloch_effect(0.6, 0, 0.8), rb = fixtures::bloch_effect(0, 0.3, 0.1);
    CHECK(distance(partial_trace_first(tensor(ra, rb), 2, 2), ra.trace() * rb) < 1e-15);
    CHECK_THROWS_AS(partial_trace_first(identity(4), 3, 2), DimensionError);
}

TEST_CASE("Tolerance bounds", "[operator_core]") {
    CHECK_NOTHROW(Tolerance{}.check());
    CHECK_THROWS(Tolerance{0.0, 1e-9}.check());
    CHECK_THROWS(Tolerance{1e-9, 1e-2}.check());
}

TEST_CASE("validate", "[observable]") {
    CHECK(validate(fixtures::E()).passes);
    const DiscreteObservable bad(2, {{"1", 0.5 * identity(2)}, {"2", identity(2) / 3.0}});
    const auto rep = validate(bad);
    CHECK_FALSE(rep.passes);
    CHECK_THAT(rep.normalization_residual, WithinAbs((identity(2) / 6.0).norm(), 1e-15));

    const DiscreteObservable with_zero(2, {{"1", identity(2)}, {"0", zeros(2)}});
    const auto z = validate(with_zero);
    CHECK(z.passes);
    CHECK_FALSE(z.strict_passes());
    REQUIRE(z.null_labels.size() == 1);
    CHECK(z.null_labels[0] == "0");
}

TEST_CASE("construction errors", "[observable]") {
    CHECK_THROWS_AS(DiscreteObservable(2, {{"1", identity(3)}}), DimensionError);
    CHECK_THROWS_AS(DiscreteObservable(2, {{"1", 0.5 * identity(2)}, {"1", 0.5 * identity(2)}}), PreconditionError);
    CHECK_THROWS_AS(DiscreteObservable(2, {}), PreconditionError);
}

TEST_CASE("is_pvm", "[observable]") {
    CHECK(is_pvm(fixtures::A()));
    CHECK_FALSE(is_pvm(fixtures::trine()));
    CHECK(is_pvm(DiscreteObservable(2, {{"1", identity(2)}})));
}

TEST_CASE("subset_effect and binarize", "[observable]") {
    const auto e = fixtures::E();
    CHECK(subset_effect(e, SubsetMask::none(3)).norm() == 0.0);
    CHECK(distance(subset_effect(e, SubsetMask::all(3)), identity(2)) < 1e-15);
    CHECK(distance(subset_effect(e, SubsetMask::from_indices(3, {0, 1})), (4.0 / 7.0) * identity(2)) < 1e-15);
    CHECK_THROWS(subset_effect(e, SubsetMask::all(4)));

    const auto b = binarize(e, SubsetMask::from_indices(3, {0}));
    REQUIRE(b.size() == 2);
    CHECK(b.label(0) == kPlus);
    CHECK(b.label(1) == kMinus);
    CHECK(distance(b.effect(0), fixtures::E1()) == 0.0);

    const auto empty = binarize(e, SubsetMask::none(3));
    REQUIRE(empty.size() == 1);
    CHECK(empty.label(0) == kMinus);

    const auto rel = binarize(fixtures::A(), SubsetMask::from_indices(3, {0, 1}));
    CHECK(distance(rel.effect(0), fixtures::A_rel().effect(0)) == 0.0);
    CHECK(distance(rel.effect(1), fixtures::A_rel().effect(1)) == 0.0);
}

TEST_CASE("commutes and product_joint", "[observable]") {
    CHECK_FALSE(commutes(fixtures::A(), fixtures::B()));
    CHECK(commutes(fixtures::A_rel(), fixtures::B()));
    const auto triv = trivial_observable(3, {1.0}, {"t"});
    CHECK(commutes(fixtures::B(), triv));
    CHECK_THROWS_AS(product_joint(fixtures::A(), fixtures::B()), PreconditionError);

    const auto g = product_joint(fixtures::A_rel(), fixtures::B());
    CHECK(std::max(g.marginal_residuals[0], g.marginal_residuals[1]) < 1e-15);
    CHECK(g.cell_label(1) == "(12,-)");

    const auto a = fixtures::A();
    const auto self = product_joint(a, a);
    for (std::size_t c = 0; c < self.cells.size(); ++c) {
        const auto t = self.tuple_of(c);
        CHECK(distance(self.cells[c], t[0] == t[1] ? a.effect(t[0]) : zeros(3)) == 0.0);
    }
    const auto with_triv = product_joint(a, triv);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(distance(with_triv.cells[i], a.effect(i)) == 0.0);
}

TEST_CASE("post_process and relabel", "[observable]") {
    const auto m = fixtures::trine();
    const RealMatrix id = RealMatrix::Identity(3, 3);
    CHECK(props::observable_distance(post_process(m, StochasticMatrix(id, m.labels())), m) == 0.0);

    RealMatrix rows(3, 2);
    rows << 0.25, 0.75, 0.25, 0.75, 0.25, 0.75;
    const auto t = post_process(m, StochasticMatrix(rows, {"a", "b"}));
    CHECK(distance(t.effect(0), 0.25 * identity(2)) < 1e-15);

    const auto a = fixtures::A();
    const RelabelingMap merge({0, 0, 1}, {"12", "3"});
    CHECK(props::observable_distance(relabel(a, merge), fixtures::A_rel()) == 0.0);
    CHECK(props::bit_equal(relabel(a, RelabelingMap({0, 1, 2}, a.labels())), a));
    const auto constant = relabel(a, RelabelingMap({0, 0, 0}, {"only", "never"}));
    REQUIRE(constant.size() == 1);
    CHECK(distance(constant.effect(0), identity(3)) == 0.0);

    CHECK_THROWS_AS(post_process(a, StochasticMatrix(RealMatrix::Constant(2, 2, 0.5), {"a", "b"})), DimensionError);
    CHECK_THROWS_AS(StochasticMatrix(RealMatrix::Constant(1, 2, 0.6), {"a", "b"}), PreconditionError);
}

TEST_CASE("mixtures", "[observable]") {
    const auto z = fixtures::sigma_z(), x = fixtures::sigma_x();
    CHECK(props::bit_equal(convex_mixture(z, x, 1.0), z));
    CHECK(props::observable_distance(convex_mixture(z, x, 0.0), x) == 0.0);
    CHECK(validate(convex_mixture(z, x, 0.5)).passes);

    const DiscreteObservable first(2, {{"1", identity(2)}, {"2", zeros(2)}});
    const DiscreteObservable second(2, {{"1", zeros(2)}, {"2", identity(2)}});
    CHECK(props::observable_distance(convex_mixture(first, second, 0.5), fixtures::half_half()) == 0.0);
    CHECK_THROWS_AS(convex_mixture(z, fixtures::half_half(), 0.5), PreconditionError);

    const double eta = 0.37;
    const auto s = mix_with_trivial(z, eta, uniform(2));
    CHECK(distance(s.effect(0), 0.5 * (identity(2) + eta * fixtures::pauli_z())) < 1e-15);
    CHECK(props::bit_equal(mix_with_trivial(z, 1.0, uniform(2)), z));
    CHECK(distance(mix_with_trivial(z, 0.0, {0.3, 0.7}).effect(1), 0.7 * identity(2)) < 1e-15);
    CHECK_THROWS_AS(mix_with_trivial(z, 0.5, {0.5}), DimensionError);
    CHECK_THROWS_AS(mix_with_trivial(z, 0.5, {0.6, 0.6}), PreconditionError);
}

TEST_CASE("dilate_minimal", "[dilation]") {
    const auto a = fixtures::A();
    const auto d = dilate_minimal(a);
    CHECK(d.dilation_dim == 3);
    CHECK(verify_dilation(a, d).ok(1e-10));
    CHECK(dilate_minimal(fixtures::trine()).dilation_dim == 3);
    CHECK(dilate_minimal(fixtures::F()).dilation_dim == 3);
    CHECK(verify_dilation(fixtures::trine(), dilate_minimal(fixtures::trine())).ok(1e-10));
}

TEST_CASE("verify_dilation detects defects", "[dilation]") {
    const auto t = fixtures::trine();
    auto d = dilate_minimal(t);

    auto padded = d;
    padded.dilation_dim += 1;
    padded.isometry.conservativeResize(4, 2);
    padded.isometry.row(3).setZero();
    for (auto &p : padded.blocks) {
        p.conservativeResize(4, 4);
        p.row(3).setZero();
        p.col(3).setZero();
    }
    padded.blocks.back()(3, 3) = 1.0;
    const auto pd = verify_dilation(t, padded);
    CHECK_FALSE(pd.minimal);
    CHECK(pd.reconstruction_residual < 1e-10);

    auto scaled = d;
    scaled.isometry *= 2.0;
    CHECK_THAT(verify_dilation(t, scaled).isometry_residual, WithinAbs(3.0 * identity(2).norm(), 1e-12));

    auto wrong = d;
    wrong.blocks.pop_back();
    CHECK_THROWS_AS(verify_dilation(t, wrong), DimensionError);
}

TEST_CASE("is_extreme", "[dilation]") {
    CHECK(is_extreme(fixtures::A()).is_extreme);
    CHECK(is_extreme(fixtures::B()).is_extreme);
    for (Eigen::Index d : {2, 3}) {
        const auto r = is_extreme(fixtures::half_half(d));
        CHECK_FALSE(r.is_extreme);
        CHECK(r.kernel_dim == static_cast<std::size_t>(d * d));
    }

    // oracle: the trine effects are rank one, so the kernel is trivial iff
    // their Pauli coefficient vectors (tr A_i, tr A_i sigma_k) are independent
    const auto t = fixtures::trine();
    Eigen::MatrixXd coeff(4, 3);
    const Matrix paulis[] = {identity(2), fixtures::pauli_x(), fixtures::pauli_y(), fixtures::pauli_z()};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 4; ++k)
            coeff(k, i) = (t.effect(static_cast<std::size_t>(i)) * paulis[k]).trace().real();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(coeff);
    REQUIRE(lu.rank() == 3);
    const auto rep = is_extreme(t);
    CHECK(rep.is_extreme);
    CHECK(rep.kernel_dim == 0);
    CHECK(rep.dilation.dilation_dim == 3);

    const auto mix = is_extreme(convex_mixture(fixtures::sigma_z(), fixtures::sigma_x(), 0.5));
    CHECK_FALSE(mix.is_extreme);
    for (std::size_t k = 0; k < mix.kernel_dim; ++k) {
        const Matrix &d = mix.kernel_basis[k];
        CHECK(distance(mix.dilation.isometry.adjoint() * d * mix.dilation.isometry, zeros(2)) < 1e-9);
        for (const auto &p : mix.dilation.blocks)
            CHECK((d * p - p * d).norm() < 1e-12);
    }
}

TEST_CASE("core, observable and dilation properties", "[properties]") {
    props::Tallies t;
    props::Rng rng(42);
    for (const auto &c : props::shape_classes()) {
        props::core_suite(t, rng, c, 10);
        props::observable_suite(t, rng, c, 10);
        props::dilation_suite(t, rng, c, 10);
    }
    require_tallies(t);
}
