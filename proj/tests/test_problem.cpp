// Copyright 2026 The duom Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include "duom/problem.hpp"
#include "random_problems.hpp"

namespace duom {

using Catch::Approx;

namespace {

ConstrainedProblem two_var_problem() {
    // f0 = 2 x0 x1 - x0, one constraint x0 + 2 x1 = 2
    QuadraticObjective f0(2, {{1, 0, 2.0}, {0, 0, -1.0}});
    return ConstrainedProblem(f0, {LinearConstraint({1.0, 2.0}, 2.0)});
}

}  // namespace

SCENARIO("quadratic objectives normalize their terms") {
    GIVEN("terms in mixed orientation") {
        QuadraticObjective f0(3, {{2, 1, 0.5}, {0, 0, 1.0}, {1, 0, -2.0}});

        THEN("terms are stored with i <= j in sorted order") {
            REQUIRE(f0.terms().size() == 3);
            CHECK(f0.terms()[0].i == 0);
            CHECK(f0.terms()[0].j == 0);
            CHECK(f0.terms()[1].i == 0);
            CHECK(f0.terms()[1].j == 1);
            CHECK(f0.terms()[2].i == 1);
            CHECK(f0.terms()[2].j == 2);
        }

        THEN("evaluation matches a hand computation") {
            const BinaryVector x{1, 1, 1};
            CHECK(f0.evaluate(x) == Approx(1.0 - 2.0 + 0.5));
            const BinaryVector y{1, 0, 1};
            CHECK(f0.evaluate(y) == Approx(1.0));
        }
    }

    GIVEN("a pair given twice") {
        THEN("construction fails") {
            CHECK_THROWS_AS(QuadraticObjective(2, {{0, 1, 1.0}, {1, 0, 1.0}}), InvalidArgument);
        }
    }

    GIVEN("an index outside the variable range") {
        THEN("construction fails with a dimension error") {
            CHECK_THROWS_AS(QuadraticObjective(2, {{0, 2, 1.0}}), DimensionError);
        }
    }

    GIVEN("a non-finite weight") {
        THEN("construction fails") { CHECK_THROWS_AS(QuadraticObjective(2, {{0, 1, NAN}}), InvalidArgument); }
    }
}

SCENARIO("constrained problems validate their inputs") {
    const auto p = two_var_problem();

    THEN("constraint length must match the variable count") {
        CHECK_THROWS_AS(ConstrainedProblem(p.objective(), {LinearConstraint({1.0}, 1.0)}), DimensionError);
    }

    THEN("non-binary and wrong-length vectors are rejected") {
        const BinaryVector bad{1, 2};
        CHECK_THROWS_AS(penalty_loss(bad, p, 1.0), InvalidArgument);
        const BinaryVector short_x{1};
        CHECK_THROWS_AS(penalty_loss(short_x, p, 1.0), DimensionError);
    }

    THEN("penalty parameters must be positive") {
        CHECK_THROWS_AS((PenaltyParams{0.0, 1.0}.validate()), InvalidArgument);
        CHECK_THROWS_AS((PenaltyParams{1.0, -1.0}.validate()), InvalidArgument);
        CHECK_NOTHROW((PenaltyParams{1.0, 1.0}.validate()));
    }
}

SCENARIO("penalty loss and residuals") {
    const auto p = two_var_problem();

    WHEN("x = (1, 1)") {
        const BinaryVector x{1, 1};
        THEN("f0 = 1, f = 3 and L = 1 + lambda") {
            CHECK(p.objective().evaluate(x) == Approx(1.0));
            CHECK(constraint_residuals(x, p)[0] == Approx(1.0));
            CHECK(penalty_loss(x, p, 3.0) == Approx(4.0));
        }
    }

    WHEN("x is feasible") {
        const BinaryVector x{0, 1};
        THEN("the loss is f0") {
            CHECK(constraint_residuals(x, p)[0] == 0.0);
            CHECK(penalty_loss(x, p, 100.0) == 0.0);
        }
    }
}

SCENARIO("the effective QUBO is f0 - v . f") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = testing::random_problem(6, 3, seed);
        const std::vector<double> v{0.3, -1.2, 2.5};
        const auto q = effective_qubo(p, v);
        for (std::uint64_t idx = 0; idx < 64; ++idx) {
            const auto x = state_from_index(idx, 6);
            const auto f = p.constraint_values(x);
            double want = p.objective().evaluate(x);
            for (std::size_t k = 0; k < 3; ++k) want -= v[k] * f[k];
            CHECK(energy(q, x) == Approx(want).margin(1e-12));
        }
    }

    THEN("zero auxiliary variables leave f0 unchanged") {
        const auto p = testing::random_problem(5, 2, 99);
        const auto q = effective_qubo(p, AuxiliaryState::zeros(2));
        for (std::uint64_t idx = 0; idx < 32; ++idx) {
            const auto x = state_from_index(idx, 5);
            CHECK(energy(q, x) == Approx(p.objective().evaluate(x)).margin(1e-12));
        }
    }

    THEN("a wrong-length auxiliary vector is rejected") {
        const auto p = testing::random_problem(4, 2, 1);
        CHECK_THROWS_AS(effective_qubo(p, AuxiliaryState::zeros(3)), DimensionError);
    }
}

SCENARIO("the Ising view preserves energies") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto p = testing::random_problem(7, 2, 100 + seed);
        const auto q = effective_qubo(p, std::vector<double>{0.7, -0.4});
        const auto ising = ising_view(q);
        for (std::uint64_t idx = 0; idx < 128; ++idx) {
            const auto x = state_from_index(idx, 7);
            const auto s = to_spins(x);
            CHECK(ising.energy(s) == Approx(energy(q, x)).margin(1e-12));
            CHECK(to_binary(s) == x);
        }
    }
}

SCENARIO("diagonal QUBO terms fold into the linear part") {
    EffectiveQubo q({1.0, 0.0}, {{1, 1, 2.0}, {0, 1, -3.0}}, 0.5);
    CHECK(q.linear()[1] == 2.0);
    REQUIRE(q.quadratic().size() == 1);
    const BinaryVector x{1, 1};
    CHECK(energy(q, x) == Approx(0.5 + 1.0 + 2.0 - 3.0));
}

}  // namespace duom
