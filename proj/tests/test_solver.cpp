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

#include <qcompat/fixtures.hpp>

#include "properties.hpp"

using namespace qcompat;
using Catch::Matchers::WithinAbs;

namespace {

void require_tallies(const props::Tallies &t) {
    for (const auto &tally : t.list()) {
        INFO(tally.name << ": " << tally.failures << "/" << tally.cases << " failed, first " << tally.first_failure);
        CHECK(tally.ok());
    }
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, Complex(v, 0.0)); }

FeasibilityProblem simplex(double total) {
    FeasibilityProblem p;
    const auto a = p.add_block(1), b = p.add_block(1);
    p.add_constraint({Term::scaled(a), Term::scaled(b)}, scalar(total));
    return p;
}

} // namespace

TEST_CASE("project_psd", "[feasibility]") {
    Matrix m = zeros(2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    Matrix clipped = zeros(2);
    clipped(0, 0) = 1.0;
    CHECK(distance(project_psd(m), clipped) < 1e-15);
    m(0, 0) = 2.0;
    CHECK(distance(project_psd(m, identity(2)), clipped) < 1e-15);
}

TEST_CASE("scalar simplex", "[feasibility]") {
    const auto ok = dykstra_solve(simplex(1.0));
    REQUIRE(ok.feasible());
    CHECK(ok.residual <= 1e-8);
    CHECK_THAT(ok.point[0](0, 0).real() + ok.point[1](0, 0).real(), WithinAbs(1.0, 1e-8));
    CHECK(ok.point[0](0, 0).real() >= -1e-12);

    // the line x + y = -1 lies at distance 1/sqrt(2) from the orthant
    const auto bad = dykstra_solve(simplex(-1.0));
    REQUIRE(bad.status == FeasibilityStatus::NumericallyInfeasible);
    CHECK_THAT(bad.separation_gap, WithinAbs(1.0 / std::sqrt(2.0), 1e-6));
    CHECK(bad.point.empty());

    SolverOptions d;
    d.dykstra = true;
    CHECK(dykstra_solve(simplex(1.0), d).feasible());
    CHECK(dykstra_solve(simplex(-1.0), d).status == FeasibilityStatus::NumericallyInfeasible);
}

TEST_CASE("upper bounds and inconsistent systems", "[feasibility]") {
    FeasibilityProblem p;
    const auto x = p.add_block(1, scalar(0.5));
    p.add_constraint({Term::scaled(x)}, scalar(0.8));
    const auto v = dykstra_solve(p);
    REQUIRE(v.status == FeasibilityStatus::NumericallyInfeasible);
    CHECK_THAT(v.separation_gap, WithinAbs(0.3, 1e-6));

    FeasibilityProblem q;
    const auto y = q.add_block(1);
    q.add_constraint({Term::scaled(y)}, scalar(1.0));
    q.add_constraint({Term::scaled(y)}, scalar(2.0));
    const auto w = dykstra_solve(q);
    CHECK(w.status == FeasibilityStatus::NumericallyInfeasible);
    CHECK(std::isinf(w.separation_gap));
}

TEST_CASE("problem construction errors", "[feasibility]") {
    FeasibilityProblem p;
    CHECK_THROWS_AS(p.add_block(0), DimensionError);
    CHECK_THROWS_AS(p.add_block(2, identity(3)), DimensionError);
    const auto b = p.add_block(2);
    CHECK_THROWS_AS(p.add_constraint({Term::scaled(b)}, identity(3)), DimensionError);
    CHECK_THROWS_AS(p.add_constraint({Term::scaled(7)}, identity(2)), DimensionError);
    Matrix nh = zeros(2);
    nh(0, 1) = 1.0;
    CHECK_THROWS_AS(p.add_constraint({Term::scaled(b)}, nh), PreconditionError);
}

TEST_CASE("gap history is monotone without the correction", "[feasibility]") {
    SolverOptions o;
    o.record_gaps = true;
    const auto v = dykstra_solve(simplex(-1.0), o);
    REQUIRE(v.gap_history.size() >= 2);
    for (std::size_t k = 1; k < v.gap_history.size(); ++k)
        CHECK(v.gap_history[k] <= v.gap_history[k - 1] + 1e-15);
}

TEST_CASE("jm_check shortcuts", "[compatibility]") {
    const auto z = fixtures::sigma_z(), x = fixtures::sigma_x();
    const auto sharp = jm_check(z, x);
    CHECK(sharp.status == Status::No);
    CHECK_FALSE(sharp.solver.has_value());

    const auto self = jm_check(z, z);
    REQUIRE(self.status == Status::Yes);
    CHECK(self.joint->provenance == "product");

    const auto pair = effect_pair_joint(fixtures::E1(), fixtures::F1());
    REQUIRE(pair.status == Status::Yes);
    CHECK(pair.joint->min_cell_eigenvalue() >= -1e-12);
    CHECK(std::max(pair.joint->marginal_residuals[0], pair.joint->marginal_residuals[1]) < 1e-12);

    const DiscreteObservable bad(2, {{"1", 0.7 * identity(2)}, {"2", 0.7 * identity(2)}});
    CHECK_THROWS_AS(jm_check(bad, z), PreconditionError);
    CHECK_THROWS_AS(jm_check(z, fixtures::A()), DimensionError);
}

TEST_CASE("jm_check on smeared sigma_z and sigma_x", "[compatibility]") {
    auto at = [](double eta) {
        return jm_check(mix_with_trivial(fixtures::sigma_z(), eta, uniform(2)),
                        mix_with_trivial(fixtures::sigma_x(), eta, uniform(2)));
    };
    const auto yes = at(0.65);
    REQUIRE(yes.status == Status::Yes);
    CHECK(yes.joint->min_cell_eigenvalue() >= -1e-9);
    CHECK(std::max(yes.joint->marginal_residuals[0], yes.joint->marginal_residuals[1]) <= 1e-7);
    CHECK(at(0.8).status == Status::No);
}

TEST_CASE("the counterexample pair", "[compatibility]") {
    const auto e = fixtures::E(), f = fixtures::F();
    const auto bins = binarization_jm_all(e, f);
    CHECK(bins.status == Status::Yes);
    CHECK(bins.witnesses.size() == 12);

    const auto co = coexistence_check(e, f);
    CHECK(co.status == Status::No);
    REQUIRE(co.condition_value.has_value());
    CHECK_THAT(*co.condition_value, WithinAbs(8.0 / 7.0, 1e-12));
    CHECK(jm_check(e, f).status != Status::Yes);

    const auto r1 = rank1_packing_condition({fixtures::E1(), fixtures::E2(), fixtures::F1()});
    CHECK(r1.applicable);
    CHECK(r1.violated);
    CHECK_THAT(r1.max_eigenvalue, WithinAbs(8.0 / 7.0, 1e-12));
    CHECK_FALSE(rank1_packing_condition({fixtures::E1(), fixtures::E1()}).applicable);
    CHECK_FALSE(rank1_packing_condition({fixtures::E3()}).violated);
}

TEST_CASE("coexistence through a mother", "[compatibility]") {
    const auto v = coexistence_check(fixtures::A_rel(), fixtures::B());
    REQUIRE(v.status == Status::Yes);
    if (v.mother)
        CHECK(verify_mother(*v.mother, fixtures::A_rel(), fixtures::B()) <= 1e-7);

    const auto n = joint_from_mother_binary(fixtures::EF_mother(), {SubsetMask::from_indices(3, {0}),
                                                                    SubsetMask::from_indices(3, {1})});
    CHECK(n.cells[0].norm() == 0.0);
    CHECK(distance(n.cells[3], fixtures::EF_mother().effect(2)) == 0.0);
    CHECK(std::max(n.marginal_residuals[0], n.marginal_residuals[1]) == 0.0);
}

TEST_CASE("extreme constructions", "[compatibility]") {
    const auto a = fixtures::A();
    std::vector<SubsetMask> z;
    for (std::size_t i = 0; i < 3; ++i)
        z.push_back(SubsetMask::from_indices(3, {i}));
    const auto out = extreme_joint_with_mother(a, a, z);
    REQUIRE(out.applicable);
    CHECK(out.dilation_residual <= 1e-10);
    CHECK(out.dilation_order_violation <= 1e-10);

    const auto merged = std::vector<SubsetMask>{SubsetMask::from_indices(3, {0, 1}), SubsetMask::from_indices(3, {2})};
    const auto pair = extreme_pair_joint(fixtures::A_rel(), a, a, merged, z);
    REQUIRE(pair.applicable);
    CHECK(distance(pair.joint->cells[0], a.effect(0)) == 0.0);
    CHECK(pair.joint->cells[2].norm() == 0.0);

    // the trine is not realized by disjoint subsets of the sigma_z outcomes
    CHECK_THROWS(extreme_joint_with_mother(fixtures::trine(), fixtures::sigma_z(),
                                           {SubsetMask::from_indices(2, {0}), SubsetMask::from_indices(2, {1}),
                                            SubsetMask::none(2)}));
}

TEST_CASE("relabeling and post-processing finders", "[compatibility]") {
    const auto f = relabeling_finder(fixtures::A_rel(), fixtures::A());
    REQUIRE(f.has_value());
    CHECK(f->assignment() == std::vector<std::size_t>{0, 0, 1});
    CHECK_FALSE(relabeling_finder(fixtures::A(), fixtures::A_rel()).has_value());
    CHECK_FALSE(relabeling_finder(fixtures::B(), fixtures::A()).has_value());

    const auto pp = post_processing_finder(fixtures::A_rel(), fixtures::A());
    REQUIRE(pp.kernel.has_value());
    CHECK(pp.reconstruction_residual <= 1e-7);
    CHECK(pp.mother_extreme);
    CHECK_FALSE(post_processing_finder(fixtures::B(), fixtures::A()).kernel.has_value());

    // the uniform observable is a post-processing of anything
    const auto half = post_processing_finder(fixtures::half_half(2), fixtures::trine());
    REQUIRE(half.kernel.has_value());
    CHECK(half.reconstruction_residual <= 1e-7);
}

TEST_CASE("cone membership in the trine", "[compatibility]") {
    // (I + sigma_z)/2 = sum_k c_k (I + n_k.sigma)/3 forces c = (3/2, 0, 0)
    const auto up = cone_membership(fixtures::bloch_effect(0, 0, 1), fixtures::trine());
    REQUIRE(up.member());
    REQUIRE(up.coefficients.size() == 3);
    CHECK_THAT(up.coefficients[0], WithinAbs(1.5, 1e-6));
    CHECK_THAT(up.coefficients[1], WithinAbs(0.0, 1e-6));
    CHECK_THAT(up.coefficients[2], WithinAbs(0.0, 1e-6));

    // sigma_y lies outside the real span of the trine
    CHECK_FALSE(cone_membership(fixtures::bloch_effect(0, 1, 0), fixtures::trine()).member());
    // (I - sigma_z)/2 needs c_0 = -1/2
    CHECK_FALSE(cone_membership(fixtures::bloch_effect(0, 0, -1), fixtures::trine()).member());
}

TEST_CASE("noise threshold", "[compatibility]") {
    const auto t = jm_threshold(fixtures::sigma_z(), fixtures::sigma_x(), uniform(2), uniform(2));
    CHECK_THAT(t.eta, WithinAbs(1.0 / std::sqrt(2.0), 0.01));
    CHECK(t.trace.front().first == 1.0);
    CHECK(t.trace.front().second == Status::No);
}

TEST_CASE("bipartite states", "[steering]") {
    CHECK_THROWS_AS(BipartiteState(2, 2, identity(4)), PreconditionError);
    Matrix neg = 0.25 * identity(4);
    neg(0, 0) = -0.25;
    neg(3, 3) = 0.75;
    CHECK_THROWS_AS(BipartiteState(2, 2, neg), NotPsdError);
    CHECK_THROWS_AS(BipartiteState(2, 3, 0.25 * identity(4)), DimensionError);
    CHECK(distance(fixtures::phi_plus().reduced_b(), 0.5 * identity(2)) < 1e-15);
}

TEST_CASE("assemblage of the maximally entangled pair", "[steering]") {
    const auto as = assemblage_from(fixtures::phi_plus(), {fixtures::sigma_z(), fixtures::sigma_x()});
    REQUIRE(as.settings() == 2);
    CHECK(distance(as.sigma[0][0], 0.25 * (identity(2) + fixtures::pauli_z())) < 1e-15);
    CHECK(distance(as.sigma[0][1], 0.25 * (identity(2) - fixtures::pauli_z())) < 1e-15);
    CHECK(distance(as.sigma[1][0], 0.25 * (identity(2) + fixtures::pauli_x())) < 1e-15);
    CHECK(as.signaling_defect() < 1e-15);

    // Bob's conditional states are transposes of Alice's effects
    const DiscreteObservable y(2, {{"+", fixtures::bloch_effect(0, 1, 0)}, {"-", fixtures::bloch_effect(0, -1, 0)}});
    const auto ay = assemblage_from(fixtures::phi_plus(), {y});
    CHECK(distance(ay.sigma[0][0], 0.25 * (identity(2) - fixtures::pauli_y())) < 1e-15);
    CHECK_THROWS_AS(assemblage_from(fixtures::phi_plus(), {fixtures::A()}), DimensionError);
}

TEST_CASE("deterministic strategies", "[steering]") {
    const auto s = deterministic_strategies({2, 3});
    REQUIRE(s.size() == 6);
    CHECK(s.front() == std::vector<std::size_t>{0, 0});
    CHECK(s.back() == std::vector<std::size_t>{1, 2});
    CHECK(deterministic_strategies(std::vector<std::size_t>(12, 2)).size() == 4096);
    CHECK_THROWS_AS(deterministic_strategies(std::vector<std::size_t>(13, 2)), PreconditionError);
}

TEST_CASE("steering verdicts", "[steering]") {
    const auto phi = fixtures::phi_plus();
    const auto sharp = steerable(phi, {fixtures::sigma_z(), fixtures::sigma_x()});
    CHECK(sharp.status == SteeringStatus::Steerable);
    CHECK(sharp.lhs.solver.separation_gap > 1e-3);

    const auto smeared = steerable(phi, {mix_with_trivial(fixtures::sigma_z(), 0.6, uniform(2)),
                                         mix_with_trivial(fixtures::sigma_x(), 0.6, uniform(2))});
    REQUIRE(smeared.status == SteeringStatus::Unsteerable);
    CHECK(smeared.lhs.model->min_eigenvalue() >= -1e-9);
    CHECK(smeared.lhs.reconstruction_residual <= 1e-7);

    const auto product = steerable(fixtures::product_fixture(), {fixtures::sigma_z(), fixtures::sigma_x()});
    CHECK(product.status == SteeringStatus::Unsteerable);
}

TEST_CASE("LHS model from a joint", "[steering]") {
    const auto z = mix_with_trivial(fixtures::sigma_z(), 0.6, uniform(2));
    const auto x = mix_with_trivial(fixtures::sigma_x(), 0.6, uniform(2));
    const auto jm = jm_check(z, x);
    REQUIRE(jm.status == Status::Yes);
    const auto phi = fixtures::phi_plus();
    const auto m = lhs_from_joint(phi, *jm.joint);
    CHECK(m.reconstruction_residual(assemblage_from(phi, {z, x})) <= 1e-7);
    CHECK(m.min_eigenvalue() >= -1e-9);
}

TEST_CASE("solver, compatibility and steering properties", "[properties]") {
    props::Tallies t;
    props::Rng rng(7);
    props::feasibility_suite(t, rng, 10);
    props::compatibility_suite(t, rng, 6, 6);
    props::steering_suite(t, rng, 4);
    require_tallies(t);
}
