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

#include "duom/benchmark.hpp"
#include "duom/solver.hpp"
#include "random_problems.hpp"

namespace duom {

using Catch::Approx;

namespace {

/// Sampler that always returns the same set and records the stream seeds it saw.
Sampler constant_sampler(SampleSet s, std::vector<std::uint64_t>* seeds = nullptr) {
    return {"fixed", SamplerConfig{}, [s, seeds](const EffectiveQubo&, std::uint64_t seed) {
                if (seeds) seeds->push_back(seed);
                return s;
            }};
}

ConstrainedProblem one_bit_problem(double target) {
    return ConstrainedProblem(QuadraticObjective(1, {}), {LinearConstraint({1.0}, target)});
}

Sampler exact_sampler(double beta) {
    SamplerConfig cfg;
    cfg.beta = beta;
    return make_sampler(SamplerKind::exact, cfg);
}

}  // namespace

TEST_CASE("one auxiliary-variable step") {
    const AuxiliaryState v{{1.0, -2.0}, 4};
    const ExpectationEstimate est{{0.5, 3.0}, {0.0, 0.0}};
    const std::vector<double> c{1.5, 1.0};
    const auto next = ohzeki_step(v, est, c, 0.1);
    CHECK(next.v[0] == Approx(1.1));
    CHECK(next.v[1] == Approx(-2.2));
    CHECK(next.iteration == 5);
    CHECK_THROWS_AS(ohzeki_step(v, est, std::vector<double>{1.0}, 0.1), DimensionError);
}

TEST_CASE("best sample selection") {
    // f0 = -x0, constraint x0 + x1 = 1
    ConstrainedProblem p(QuadraticObjective(2, {{0, 0, -1.0}}), {LinearConstraint({1.0, 1.0}, 1.0)});
    SampleSet s;
    s.push_back({1, 1}, 0.0);
    s.push_back({0, 1}, 0.0);
    s.push_back({1, 0}, 0.0);
    auto [x, loss] = best_feasible(s, p, 1.0);
    CHECK(x == BinaryVector{1, 0});
    CHECK(loss == -1.0);

    SECTION("equal loss falls back to f0, then lexicographic order") {
        ConstrainedProblem flat(QuadraticObjective(2, {}), {LinearConstraint({1.0, 1.0}, 1.0)});
        SampleSet t;
        t.push_back({1, 0}, 0.0);
        t.push_back({0, 1}, 0.0);
        CHECK(best_feasible(t, flat, 1.0).first == BinaryVector{0, 1});

        ConstrainedProblem tilted(QuadraticObjective(2, {{1, 1, 0.5}}), {LinearConstraint({1.0, 1.0}, 0.0)});
        SampleSet u;
        u.push_back({0, 1}, 0.0);  // loss 0.5 + 1 = 1.5
        u.push_back({1, 0}, 0.0);  // loss 0 + 1 = 1
        CHECK(best_feasible(u, tilted, 1.0).first == BinaryVector{1, 0});
    }

    CHECK_THROWS_AS(best_feasible(SampleSet{}, p, 1.0), InvalidArgument);
}

SCENARIO("solver traces") {
    const auto p = testing::random_problem(6, 2, 9);
    SamplerConfig cfg;
    cfg.num_reads = 20;
    cfg.sweeps_per_read = 10;
    const auto mh = make_sampler(SamplerKind::mh, cfg);

    GIVEN("a run of T = 7 constant steps") {
        const auto res = ohzeki_run(p, mh, StepSchedule::constant(7, 0.05), {1.0, 1.0}, {17, std::nullopt});

        THEN("there are T + 1 records and the last carries no step") {
            REQUIRE(res.trace.records.size() == 8);
            for (std::size_t t = 0; t < 7; ++t) {
                CHECK(res.trace.records[t].iteration == t);
                CHECK(res.trace.records[t].eta == 0.05);
            }
            CHECK_FALSE(res.trace.records.back().eta.has_value());
        }

        THEN("the running best loss never increases and matches the result") {
            for (std::size_t t = 1; t < 8; ++t) {
                CHECK(res.trace.records[t].best_loss <= res.trace.records[t - 1].best_loss);
            }
            CHECK(res.best_loss == res.trace.records.back().best_loss);
            CHECK(res.best_loss == Approx(penalty_loss(res.best_x, p, 1.0)));
        }

        THEN("the trace v follows the update rule") {
            for (std::size_t t = 0; t < 7; ++t) {
                const auto& r = res.trace.records[t];
                for (std::size_t k = 0; k < 2; ++k) {
                    CHECK(res.trace.records[t + 1].v[k] == Approx(r.v[k] + 0.05 * r.residuals[k]));
                }
            }
            CHECK(res.final_v.v == res.trace.records.back().v);
            CHECK(res.final_v.iteration == 7);
        }

        THEN("the same seed reproduces the run") {
            const auto again = ohzeki_run(p, mh, StepSchedule::constant(7, 0.05), {1.0, 1.0}, {17, std::nullopt});
            CHECK(again.best_x == res.best_x);
            for (std::size_t t = 0; t < 8; ++t) CHECK(again.trace.records[t].v == res.trace.records[t].v);
        }
    }

    GIVEN("a sampler that records its seeds") {
        std::vector<std::uint64_t> seeds;
        SampleSet s;
        s.push_back(BinaryVector(6, 0), 0.0);
        ohzeki_run(p, constant_sampler(s, &seeds), StepSchedule::constant(3, 0.1), {1.0, 1.0}, {5, std::nullopt});
        THEN("round t uses derive_seed(seed, t)") {
            REQUIRE(seeds.size() == 4);
            for (std::uint64_t t = 0; t < 4; ++t) CHECK(seeds[t] == derive_seed(5, t));
        }
    }

    GIVEN("a nonzero starting field") {
        SampleSet s;
        s.push_back(BinaryVector(6, 0), 0.0);
        const AuxiliaryState v0{{1.0, 2.0}, 0};
        const auto res = ohzeki_run(p, constant_sampler(s), StepSchedule::constant(0, 0.1), {1.0, 1.0}, v0);
        THEN("T = 0 samples once at v0") {
            REQUIRE(res.trace.records.size() == 1);
            CHECK(res.trace.records[0].v == v0.v);
        }
        THEN("a wrong-length start is rejected") {
            CHECK_THROWS_AS(ohzeki_run(p, constant_sampler(s), StepSchedule::constant(1, 0.1), {1.0, 1.0},
                                       AuxiliaryState::zeros(3)),
                            DimensionError);
        }
    }
}

TEST_CASE("solver failure modes") {
    const auto p = one_bit_problem(1.0);
    SampleSet zero;
    zero.push_back({0}, 0.0);

    SECTION("divergence names the iteration") {
        // residual stays 1, so v = 1e12 after one step and 2e12 after two
        try {
            ohzeki_run(p, constant_sampler(zero), StepSchedule::constant(5, 1e12), {1.0, 1.0});
            FAIL("no exception");
        } catch (const DivergenceError& e) {
            CHECK(e.iteration() == 2);
        }
    }

    SECTION("an empty sample set is an error") {
        CHECK_THROWS_AS(ohzeki_run(p, constant_sampler(SampleSet{}), StepSchedule::constant(2, 0.1), {1.0, 1.0}),
                        SolverError);
    }

    SECTION("sampler exceptions are nested inside a solver error") {
        Sampler broken{"broken", SamplerConfig{}, [](const EffectiveQubo&, std::uint64_t) -> SampleSet {
                           throw std::runtime_error("device offline");
                       }};
        try {
            ohzeki_run(p, broken, StepSchedule::constant(2, 0.1), {1.0, 1.0});
            FAIL("no exception");
        } catch (const SolverError& e) {
            CHECK(e.iteration() == 0);
            CHECK(std::string(e.what()).find("device offline") != std::string::npos);
            CHECK_THROWS_AS(std::rethrow_if_nested(e), std::runtime_error);
        }
    }

    SECTION("a ground truth of the wrong length is rejected") {
        CHECK_THROWS_AS(ohzeki_run(p, constant_sampler(zero), StepSchedule::constant(1, 0.1), {1.0, 1.0},
                                   {0, BinaryVector{0, 1}}),
                        DimensionError);
    }
}

TEST_CASE("exact-sampler runs shrink the residual on a small image") {
    DatasetSpec spec{4, 4, 0.6, 3, 2, {}};
    for (const auto& inst : generate_dataset(spec)) {
        const auto res = ohzeki_run(inst.problem, exact_sampler(1.0), StepSchedule::constant(30, 1e-2), {1.0, 1.0});
        CHECK(res.trace.records[30].residual_l2() < res.trace.records[0].residual_l2());
    }
}

TEST_CASE("with one constraint and a small step the residual changes sign at most once") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto p = testing::random_problem(4 + seed % 6, 1, 300 + seed);
        const auto res = ohzeki_run(p, exact_sampler(1.0), StepSchedule::constant(300, 1e-3), {1.0, 1.0});
        int changes = 0;
        for (std::size_t t = 1; t < res.trace.records.size(); ++t) {
            const double a = res.trace.records[t - 1].residuals[0];
            const double b = res.trace.records[t].residuals[0];
            CHECK(res.trace.records[t].estimate.variance[0] > 0.0);
            if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) ++changes;
        }
        CHECK(changes <= 1);
    }
}

TEST_CASE("iterations to zero") {
    SolverTrace trace;
    for (std::size_t t = 0; t < 4; ++t) {
        TraceRecord r;
        r.iteration = t;
        r.best_mse = t == 2 || t == 3 ? 0.0 : 0.25;
        trace.records.push_back(r);
    }
    CHECK(iterations_to_zero(trace) == 2);
    trace.records[2].best_mse = 0.1;
    trace.records[3].best_mse.reset();
    CHECK_FALSE(iterations_to_zero(trace).has_value());
}

SCENARIO("grid search over constant step sizes") {
    DatasetSpec spec{4, 4, 0.5, 2, 31, {}};
    std::vector<LabeledProblem> labeled;
    for (const auto& inst : generate_dataset(spec)) labeled.push_back(inst.labeled());
    const std::vector<double> candidates{1e-3, 1e-2, 1e13};
    static const auto result = grid_search_step(labeled, candidates, {1.0, 1.0}, exact_sampler(4.0), 10, 3);

    THEN("every candidate has a row") {
        REQUIRE(result.table.size() == 3);
        for (std::size_t c = 0; c < 3; ++c) CHECK(result.table[c].eta == candidates[c]);
    }

    THEN("a diverging step scores infinity and is never chosen") {
        CHECK(result.table[2].diverged == 2);
        CHECK(std::isinf(result.table[2].mean_final_mse));
        CHECK(result.best_eta != 1e13);
    }

    THEN("the chosen step has the lowest mean final MSE") {
        const auto best = std::min_element(result.table.begin(), result.table.end(), [](auto& a, auto& b) {
            return a.mean_final_mse < b.mean_final_mse;
        });
        CHECK(best->mean_final_mse ==
              std::find_if(result.table.begin(), result.table.end(), [&](auto& r) {
                  return r.eta == result.best_eta;
              })->mean_final_mse);
    }

    THEN("ties go to the smaller step") {
        const std::vector<double> same{2e-3, 1e-3};
        SampleSet s;
        s.push_back(BinaryVector(16, 0), 0.0);
        const auto tie = grid_search_step(labeled, same, {1.0, 1.0}, constant_sampler(s), 4);
        CHECK(tie.best_eta == 1e-3);
    }

    THEN("instances need ground truths") {
        std::vector<LabeledProblem> unlabeled{{labeled[0].problem, std::nullopt}};
        CHECK_THROWS_AS(grid_search_step(unlabeled, candidates, {1.0, 1.0}, exact_sampler(1.0), 2), InvalidArgument);
    }
}

}  // namespace duom
