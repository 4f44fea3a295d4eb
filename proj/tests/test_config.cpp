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

#include "duom/config.hpp"

namespace duom {

using config::ConfigError;
using config::parse_run_config;
using config::parse_toml;

TEST_CASE("TOML subset parsing") {
    const auto j = parse_toml(R"(
# comment
seed = 7
name = "run # one"   # trailing comment
flag = true
ratio = 0.6
big = 1e-3
list = [1.0, 2, 3e-1]

[sampler]
kind = "sqa"
beta = 4.0

[a.b]
c = -2

[[benchmark.methods]]
label = "one"
[[benchmark.methods]]
label = "two"
eta = 0.01
)");
    CHECK(j["seed"] == 7);
    CHECK(j["name"] == "run # one");
    CHECK(j["flag"] == true);
    CHECK(j["ratio"] == 0.6);
    CHECK(j["big"] == 1e-3);
    CHECK(j["list"].size() == 3);
    CHECK(j["sampler"]["kind"] == "sqa");
    CHECK(j["a"]["b"]["c"] == -2);
    REQUIRE(j["benchmark"]["methods"].size() == 2);
    CHECK(j["benchmark"]["methods"][1]["eta"] == 0.01);

    SECTION("errors carry line numbers") {
        try {
            parse_toml("a = 1\nb\n");
            FAIL("no exception");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
        CHECK_THROWS_AS(parse_toml("a = \"open\n"), ConfigError);
        CHECK_THROWS_AS(parse_toml("[table\n"), ConfigError);
        CHECK_THROWS_AS(parse_toml("a = [1, 2\n"), ConfigError);
    }

    SECTION("canonical text round-trips") {
        const auto again = parse_toml(config::to_toml(j));
        CHECK(again == j);
        CHECK(config::digest(again) == config::digest(j));
    }
}

TEST_CASE("dotted overrides") {
    auto j = parse_toml("[sampler]\nbeta = 1.0\n");
    config::set_path(j, "sampler.beta", 4.0);
    config::set_path(j, "training.epochs", 3);
    CHECK(j["sampler"]["beta"] == 4.0);
    CHECK(j["training"]["epochs"] == 3);
    const auto before = config::digest(parse_toml("[sampler]\nbeta = 1.0\n"));
    CHECK(config::digest(j) != before);
}

SCENARIO("typed run configuration") {
    GIVEN("a minimal config") {
        const auto rc = parse_run_config(parse_toml("seed = 3\n[sampler]\nbeta = 2.0\n"));
        THEN("defaults are filled in") {
            CHECK(rc.seed == 3);
            CHECK(rc.sampler.kind == SamplerKind::mh);
            CHECK(rc.sampler.config.beta == 2.0);
            CHECK(rc.sampler.config.num_reads == 100);
            CHECK(rc.sampler.config.sweeps_per_read == 1000);
            CHECK(rc.training.beta == 2.0);
            CHECK(rc.training.seed == 3);
            CHECK(rc.training.minibatches_per_epoch == 20);
            CHECK(rc.training.minibatch_size == 4);
            CHECK(rc.training.lr_init == 5e-2);
            CHECK(rc.training.lr_decay == 0.8);
            CHECK(rc.dataset.seed == 3);
            CHECK(rc.grid_candidates == std::vector<double>{1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
        }
    }

    GIVEN("a full config") {
        const auto rc = parse_run_config(parse_toml(R"(
seed = 11
[output]
directory = "results"
[sampler]
kind = "sqa"
beta = 4.0
num_reads = 20
sweeps = 50
trotter = 8
[solver]
T = 15
eta = 0.03
[training]
epochs = 6
incremental = false
name = "sqa15"
[dataset]
width = 6
height = 6
count = 20
[[benchmark.methods]]
label = "DUOM"
schedule = "results/schedules/sqa15.json"
[[benchmark.methods]]
label = "fixed"
eta = 0.1
sampler = "mh"
)"));
        THEN("every section is read") {
            CHECK(rc.out == "results");
            CHECK(rc.sampler.kind == SamplerKind::sqa);
            CHECK(rc.sampler.config.trotter == 8);
            CHECK(rc.sampler.config.sweeps_per_read == 50);
            CHECK(rc.T == 15);
            CHECK(rc.training.T == 15);
            CHECK_FALSE(rc.training.incremental);
            CHECK(rc.schedule_name == "sqa15");
            CHECK(rc.training_dataset == "results/instances");
            CHECK(rc.dataset.n_measurements() == 22);
            REQUIRE(rc.methods.size() == 2);
            CHECK(rc.methods[0].schedule == "results/schedules/sqa15.json");
            CHECK(rc.methods[1].sampler.kind == SamplerKind::mh);
            CHECK(rc.methods[1].sampler.config.num_reads == 20);
        }
    }

    GIVEN("invalid configs") {
        THEN("beta must be explicit") { CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nkind = \"mh\"\n")), ConfigError); }
        THEN("remote needs an endpoint") {
            CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nkind = \"remote\"\nbeta = 1.0\n")), ConfigError);
        }
        THEN("types are checked") {
            CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nbeta = \"hot\"\n")), ConfigError);
        }
        THEN("SQA needs positive beta") {
            CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nkind = \"sqa\"\nbeta = 0.0\n")), ConfigError);
        }
        THEN("methods need exactly one step source") {
            CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nbeta = 1.0\n[[benchmark.methods]]\nlabel = \"x\"\n")),
                            ConfigError);
        }
        THEN("serve mode is checked") {
            CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nbeta = 1.0\n[serve]\nmode = \"echo\"\n")), ConfigError);
        }
        THEN("dataset ratio is checked") {
            CHECK_THROWS_AS(parse_run_config(parse_toml("[sampler]\nbeta = 1.0\n[dataset]\nm_ratio = 1.5\n")), ConfigError);
        }
    }
}

}  // namespace duom
