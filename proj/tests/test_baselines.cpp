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

#include <limits>

#include "fjsplb/baselines.hpp"
#include "fjsplb/error.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fjsplb;
using testing_support::make_instance;

TEST_CASE("rule names") {
    CHECK(rule_from_string("mwr") == Rule::MWR);
    CHECK(rule_from_string("FIFO") == Rule::FIFO);
    CHECK_THROWS_AS((void)rule_from_string("edd"), ConfigError);
}

TEST_CASE("earliest end time picks the faster machine") {
    const Environment env(make_instance(2, {}, 1, 1, 0, 0, {{{{false, {{0, 7}, {1, 4}}}}, {}}}));
    for (Rule r : kAllRules) {
        const auto t = pdr_schedule(env, r);
        CHECK(t.makespan == 4);
        CHECK(t.steps[0].action.machine == 1);
    }
}

TEST_CASE("ties go to the lowest job") {
    const Environment env(make_instance(1, {}, 1, 1, 0, 0, {{{{false, {{0, 3}}}}, {}}, {{{false, {{0, 3}}}}, {}}}));
    CHECK(pdr_schedule(env, Rule::FIFO).steps[0].job == 0);
}

TEST_CASE("rule priorities") {
    // Job 0: one long op. Job 1: three short ops.
    const Environment env(make_instance(
        2, {}, 1, 1, 0, 0,
        {{{{false, {{0, 10}}}}, {}}, {{{false, {{1, 2}}}, {false, {{1, 2}}}, {false, {{1, 2}}}}, {}}}));
    // Both first ops are eligible at time 0 on different machines, so compare the first pick.
    CHECK(pdr_schedule(env, Rule::MOR).steps[0].job == 1);
    CHECK(pdr_schedule(env, Rule::SPT).steps[0].job == 1);
    CHECK(pdr_schedule(env, Rule::MWR).steps[0].job == 0);
    CHECK(pdr_schedule(env, Rule::LWR).steps[0].job == 1);
    CHECK(pdr_schedule(env, Rule::FIFO).steps[0].job == 0);
}

TEST_CASE("earliest end time is locally optimal") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Environment env(generate_instance(GeneratorConfig::for_size("10x5", seed)));
        ScheduleState s = env.reset();
        while (!s.done()) {
            const auto a = env.eligible_actions(s);
            const std::size_t k = pdr_choose(env, s, a, Rule::MWR);
            const Time mine = env.action_duration(s, a[k]);
            for (const auto &b : a)
                if (b.op == a[k].op) CHECK(mine <= env.action_duration(s, b));
            s = env.step(s, a[k]).next;
        }
    }
}

TEST_CASE("baselines are deterministic and valid") {
    const Instance inst = generate_instance(GeneratorConfig::for_size("10x5", 21));
    const Environment env(inst);
    for (Rule r : kAllRules) {
        const auto t = pdr_schedule(env, r);
        CHECK(save_trace(t) == save_trace(pdr_schedule(env, r)));
        CHECK(check_trace(inst, t).empty());
    }
    CHECK(save_trace(random_policy(env, 3)) == save_trace(random_policy(env, 3)));
    CHECK(check_trace(inst, random_policy(env, 3)).empty());
}

TEST_CASE("singleton choices make every policy agree") {
    const Environment env(
        make_instance(1, {}, 1, 1, 0, 0, {{{{false, {{0, 3}}}, {false, {{0, 2}}}, {false, {{0, 5}}}}, {}}}));
    const auto ref = save_trace(pdr_schedule(env, Rule::FIFO));
    CHECK(save_trace(random_policy(env, 42)) == ref);
    for (Rule r : kAllRules) CHECK(save_trace(pdr_schedule(env, r)) == ref);
}

TEST_CASE("random policy is no better than the best rule in aggregate") {
    const Environment env(generate_instance(GeneratorConfig::for_size("10x5", 31)));
    Time best_rule = std::numeric_limits<Time>::max();
    for (Rule r : kAllRules) best_rule = std::min(best_rule, pdr_schedule(env, r).makespan);
    double mean = 0;
    for (std::uint64_t s = 0; s < 100; ++s) mean += static_cast<double>(random_policy(env, s).makespan) / 100.0;
    CHECK(mean >= static_cast<double>(best_rule));
}

TEST_CASE("oracle on forced instances") {
    const Environment chain(
        make_instance(1, {}, 1, 1, 0, 0, {{{{false, {{0, 3}}}, {false, {{0, 4}}}, {false, {{0, 2}}}}, {}}}));
    auto r = branch_and_bound(chain);
    CHECK(r.optimal);
    CHECK(r.optimal_makespan == 9);
    const Environment shared(make_instance(1, {}, 1, 1, 0, 0, {{{{false, {{0, 3}}}}, {}}, {{{false, {{0, 5}}}}, {}}}));
    r = branch_and_bound(shared);
    CHECK(r.optimal);
    CHECK(r.optimal_makespan == 8);
}

TEST_CASE("oracle equals exhaustive enumeration on tiny instances") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto cfg = oracle::tiny_config(seed);
        if (seed % 2) {
            cfg.part_sorting_ops_per_job = 0;
            cfg.categories_per_job = {0, 0};
        }
        const Instance inst = generate_instance(cfg);
        const Environment env(inst);
        const auto r = branch_and_bound(env);
        REQUIRE(r.optimal);
        CHECK(r.optimal_makespan == oracle::enumerate_best_makespan(env, env.reset()));
        CHECK(check_trace(inst, r.best_schedule).empty());
        for (Rule rule : kAllRules) CHECK(pdr_schedule(env, rule).makespan >= r.optimal_makespan);
    }
}

TEST_CASE("oracle limits are reported") {
    const Environment env(generate_instance(GeneratorConfig::for_size("10x5", 2)));
    const auto r = branch_and_bound(env, 50, 10.0);
    CHECK(!r.optimal);
    CHECK(r.nodes_explored <= 51);
    CHECK(r.best_schedule.steps.size() == static_cast<std::size_t>(env.problem().op_count()));
}
