// Copyright 2026 The fjsplb Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <set>

#include "fjsplb/error.hpp"
#include "fjsplb/instance.hpp"

using namespace fjsplb;

#ifndef FJSPLB_TEST_DATA
#define FJSPLB_TEST_DATA "tests/data"
#endif

TEST_CASE("generated 10x5 instance has the preset shape") {
    const Instance inst = generate_instance(GeneratorConfig::for_size("10x5", 7));
    CHECK(inst.jobs.size() == 10);
    CHECK(inst.machine_count == 5);
    CHECK(inst.category_count == 10);
    CHECK(inst.pallet_count == 6);
    CHECK(inst.place_time == 2);
    CHECK(inst.switch_time == 5);
    CHECK(inst.part_sorting_machines == std::vector<int>{4});
    CHECK(validate_instance(inst).empty());
    for (const auto &job : inst.jobs) {
        CHECK(job.operations.size() >= 4);
        CHECK(job.operations.size() <= 6);
        int ps = 0;
        for (const auto &op : job.operations) {
            ps += op.is_part_sorting;
            CHECK(!op.compatible.empty());
            for (const auto &m : op.compatible) {
                CHECK(m.time >= 1);
                CHECK(m.time <= 20);
                CHECK(inst.is_part_sorting_machine(m.machine) == op.is_part_sorting);
            }
        }
        CHECK(ps == 1);
        CHECK(job.parts.size() >= 3);
        CHECK(job.parts.size() <= 5);
        std::set<int> cats;
        for (const auto &p : job.parts) {
            cats.insert(p.category);
            CHECK(p.count >= 1);
            CHECK(p.count <= 3);
        }
        CHECK(cats.size() == job.parts.size());
    }
}

TEST_CASE("degenerate ranges make every op compatible with every machine") {
    GeneratorConfig c;
    c.n_machines = 4;
    c.ops_per_job = {1, 1};
    c.machines_per_op = {4, 4};
    c.part_sorting_ops_per_job = 0;
    c.categories_per_job = {0, 0};
    c.seed = 3;
    const Instance inst = generate_instance(c);
    CHECK(inst.part_sorting_machines.empty());
    for (const auto &job : inst.jobs) {
        REQUIRE(job.operations.size() == 1);
        CHECK(job.operations[0].compatible.size() == 4);
    }
}

TEST_CASE("generation is a pure function of the config") {
    const auto c = GeneratorConfig::for_size("20x10", 99);
    CHECK(save_instance(generate_instance(c)) == save_instance(generate_instance(c)));
    auto d = c;
    d.seed = 100;
    CHECK(save_instance(generate_instance(c)) != save_instance(generate_instance(d)));
}

TEST_CASE("ops per job cover the whole range over many draws") {
    std::set<std::size_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const Instance inst = generate_instance(GeneratorConfig::for_size("10x5", s));
        for (const auto &j : inst.jobs) seen.insert(j.operations.size());
    }
    CHECK(seen == std::set<std::size_t>{4, 5, 6});
}

TEST_CASE("invalid generator ranges are rejected") {
    GeneratorConfig c;
    c.proc_time = {5, 2};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS((void)generate_instance(c), ConfigError);
    GeneratorConfig d;
    d.categories_per_job = {3, 7}; // above P = 6
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("validation names the offending entity") {
    Instance inst = generate_instance(GeneratorConfig::for_size("10x5", 1));
    SUBCASE("too many categories for the pallets") {
        inst.category_count = 10;
        inst.jobs[2].parts.clear();
        for (int c = 0; c < 7; ++c) inst.jobs[2].parts.push_back({c, 1});
        const auto v = validate_instance(inst);
        REQUIRE(v.size() == 1);
        CHECK(v[0].message.find("exceeds pallet count") != std::string::npos);
        CHECK(v[0].entity.find("2") != std::string::npos);
    }
    SUBCASE("operation without machines") {
        inst.jobs[0].operations[0].compatible.clear();
        const auto v = validate_instance(inst);
        REQUIRE(v.size() == 1);
        CHECK(v[0].message.find("no compatible machine") != std::string::npos);
    }
    SUBCASE("machine id out of range") {
        inst.jobs[1].operations[1].compatible[0].machine = 17;
        CHECK(!validate_instance(inst).empty());
        CHECK_THROWS_AS(require_valid(inst), ValidationError);
    }
}

TEST_CASE("instance documents round-trip") {
    const Instance inst = generate_instance(GeneratorConfig::for_size("10x5", 5));
    const std::string text = save_instance(inst);
    CHECK(load_instance(text) == inst);
    CHECK(save_instance(load_instance(text)) == text);
}

TEST_CASE("malformed documents raise parse errors") {
    const std::string text = save_instance(generate_instance(GeneratorConfig::for_size("10x5", 5)));
    CHECK_THROWS_AS((void)load_instance(text.substr(0, text.size() / 2)), ParseError);
    CHECK_THROWS_AS((void)load_instance("{\"format\": \"something-else\"}"), ParseError);
}

TEST_CASE("documents that parse but break invariants raise validation errors") {
    Instance inst = generate_instance(GeneratorConfig::for_size("10x5", 5));
    std::string text = save_instance(inst);
    const auto pos = text.find("\"pallets\": 6");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"pallets\": 1");
    CHECK_THROWS_AS((void)load_instance(text), ValidationError);
}

TEST_CASE("production-line sized instance loads") {
    const Instance inst = read_instance_file(std::string(FJSPLB_TEST_DATA) + "/line_c.json");
    CHECK(inst.jobs.size() == 20);
    CHECK(inst.machine_count == 10);
    CHECK(inst.place_time == 14);
    CHECK(inst.switch_time == 180);
    CHECK(inst.pallet_count == 24);
    for (const auto &j : inst.jobs) {
        CHECK(j.operations.size() == 9);
        int ps = 0;
        for (const auto &op : j.operations) ps += op.is_part_sorting;
        CHECK(ps == 3);
    }
}
