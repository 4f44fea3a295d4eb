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

#include <filesystem>
#include <sstream>

#include "duom/io.hpp"

namespace duom {

namespace {

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("problems and instances survive a JSON round trip") {
    DatasetSpec spec{4, 3, 0.5, 2, 77, {}};
    const auto inst = generate_instance(spec, 1);
    const auto text = io::instance_to_json(inst).dump();
    const auto back = io::instance_from_json(nlohmann::json::parse(text));
    CHECK(back.problem == inst.problem);
    CHECK(back.x_star == inst.x_star);
    CHECK(back.width == 4);
    CHECK(back.height == 3);
    CHECK(back.index == 1);
    CHECK(back.seed == inst.seed);

    SECTION("a bare problem has no ground truth") {
        const auto lp = io::labeled_from_json(io::problem_to_json(inst.problem));
        CHECK(lp.problem == inst.problem);
        CHECK_FALSE(lp.ground_truth.has_value());
        CHECK_THROWS_AS(io::instance_from_json(io::problem_to_json(inst.problem)), InvalidArgument);
    }

    SECTION("an x_star of the wrong length is rejected") {
        auto j = io::instance_to_json(inst);
        j["x_star"] = BinaryVector{1, 0};
        CHECK_THROWS_AS(io::instance_from_json(j), DimensionError);
    }
}

TEST_CASE("learned schedules round-trip bit-exactly") {
    LearnedSchedule s;
    s.etas = {0.1, 1.0 / 3.0, 2.718281828459045e-7, -0.0123456789012345678};
    s.trained_with = {"sqa", 4, 4.0};
    s.lambda = 1.0;
    s.seed = 0xFFFFFFFFFFFFFFFFULL;
    s.dataset_digest = "0123456789abcdef";
    s.loss_curve = {43.2, 28.6};
    const auto text = io::schedule_to_json(s).dump(2);
    const auto back = io::schedule_from_json(nlohmann::json::parse(text));
    CHECK(back == s);
    for (std::size_t t = 0; t < s.etas.size(); ++t) {
        CHECK(std::bit_cast<std::uint64_t>(back.etas[t]) == std::bit_cast<std::uint64_t>(s.etas[t]));
    }

    SECTION("schedules without a Trotter number") {
        s.trained_with = {"mh", std::nullopt, 1.0};
        CHECK(io::schedule_from_json(io::schedule_to_json(s)) == s);
    }

    SECTION("malformed schedules") {
        auto j = io::schedule_to_json(s);
        j["T"] = 3;
        CHECK_THROWS_AS(io::schedule_from_json(j), DimensionError);
        j = io::schedule_to_json(s);
        j.erase("etas");
        CHECK_THROWS_AS(io::schedule_from_json(j), InvalidArgument);
        j = io::schedule_to_json(s);
        j["trained_with"]["sampler"] = "gibbs";
        CHECK_THROWS_AS(io::schedule_from_json(j), InvalidArgument);
    }
}

TEST_CASE("trace CSV layout") {
    SolverTrace trace;
    for (std::size_t t = 0; t < 3; ++t) {
        TraceRecord r;
        r.iteration = t;
        r.v = {0.5 * static_cast<double>(t), -1.0};
        r.residuals = {3.0, 4.0};
        r.best_loss = 2.0;
        if (t > 0) r.best_mse = 0.25;
        if (t < 2) r.eta = 0.01;
        trace.records.push_back(r);
    }
    std::ostringstream out;
    io::write_trace_csv(out, trace);
    const auto lines = lines_of(out.str());
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "iteration,residual_l2,best_loss,best_mse,eta,v_0,v_1");
    CHECK(lines[1] == "0,5.0,2.0,,0.01,0.0,-1.0");
    CHECK(lines[3] == "2,5.0,2.0,0.25,,1.0,-1.0");

    SECTION("at most 32 auxiliary columns") {
        for (auto& r : trace.records) r.v.assign(40, 0.0);
        std::ostringstream wide;
        io::write_trace_csv(wide, trace);
        const auto header = lines_of(wide.str())[0];
        CHECK(std::count(header.begin(), header.end(), ',') == 4 + 32);
    }

    SECTION("timings are written separately") {
        std::ostringstream t;
        io::write_timing_csv(t, trace);
        CHECK(lines_of(t.str())[0] == "iteration,sample_seconds,update_seconds");
        CHECK(lines_of(t.str()).size() == 4);
    }
}

TEST_CASE("benchmark CSV leaves undefined intervals empty") {
    MethodEvaluation e;
    e.label = "DUOM";
    e.series.mean_best_mse = {0.5};
    e.series.ci_half_width = {std::numeric_limits<double>::quiet_NaN()};
    e.series.frac_solved = {0.0};
    std::ostringstream out;
    io::write_benchmark_csv(out, std::span<const MethodEvaluation>(&e, 1));
    const auto lines = lines_of(out.str());
    CHECK(lines[0] == "method,iteration,mean_best_mse,ci_halfwidth,frac_solved");
    CHECK(lines[1] == "DUOM,0,0.5,,0.0");
}

TEST_CASE("result JSON reports iterations to zero") {
    SolveResult r;
    r.best_x = {1, 0};
    r.best_loss = -1.0;
    r.final_v = {{0.5}, 2};
    TraceRecord a;
    a.best_mse = 0.5;
    TraceRecord b;
    b.iteration = 1;
    b.best_mse = 0.0;
    r.trace.records = {a, b};
    const auto j = io::result_to_json(r, BinaryVector{1, 0}, "SQA-SQA");
    CHECK(j["iterations_to_zero"] == 1);
    CHECK(j["final_mse"] == 0.0);
    CHECK(j["method"] == "SQA-SQA");
    CHECK_FALSE(io::result_to_json(r, std::nullopt).contains("final_mse"));
}

TEST_CASE("plain PBM bitmaps") {
    const auto bm = io::parse_pbm("P1\n# a comment\n3 2\n1 0 1\n010\n");
    CHECK(bm.width == 3);
    CHECK(bm.height == 2);
    CHECK(bm.pixels == BinaryVector{1, 0, 1, 0, 1, 0});
    CHECK(io::parse_pbm(io::format_pbm(bm)).pixels == bm.pixels);
    CHECK_THROWS_AS(io::parse_pbm("P4\n1 1\n1\n"), InvalidArgument);
    CHECK_THROWS_AS(io::parse_pbm("P1\n2 2\n1 0 1\n"), DimensionError);
    CHECK_THROWS_AS(io::parse_pbm("P1\n1 1\n2\n"), InvalidArgument);
}

TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / "duom_io_test";
    std::filesystem::remove_all(dir);
    io::write_json(dir / "nested" / "a.json", {{"k", 1}});
    CHECK(io::read_json(dir / "nested" / "a.json")["k"] == 1);
    CHECK_THROWS_AS(io::read_text(dir / "missing.txt"), Error);
    io::write_text(dir / "bad.json", "{");
    CHECK_THROWS_AS(io::read_json(dir / "bad.json"), Error);
    std::filesystem::remove_all(dir);
}

}  // namespace duom
