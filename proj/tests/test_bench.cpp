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

#include <json.hpp>

#include "fjsplb/bench.hpp"
#include "fjsplb/error.hpp"
#include "fjsplb/ppo.hpp"
#include "helpers.hpp"

using namespace fjsplb;
using testing_support::make_instance;

namespace {

NetConfig tiny_net(std::uint64_t seed = 0) {
    NetConfig c;
    c.embed_dim = 4;
    c.hidden_dim = 8;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("method parsing") {
    CHECK(Method::parse("mwr").kind == Method::Kind::Rule);
    CHECK(Method::parse("random").kind == Method::Kind::Random);
    CHECK_THROWS_AS((void)Method::parse("ckpt:"), ConfigError);
    CHECK_THROWS_AS((void)Method::parse("ckpt:/nonexistent/file.ckpt"), Error);
    CHECK_THROWS_AS((void)Method::parse("nearest"), ConfigError);
    CHECK(strategy_from_string("Sampling") == Strategy::Sampling);
}

TEST_CASE("reports are deterministic and conserve switch counts") {
    const auto set = test_set("6x4", 6, 3);
    const auto ref = reference_makespans(set, Reference::BestPDR);
    EvalOptions opt;
    const Method policy = Method::from_policy(PolicyParams(tiny_net()), "policy");
    const auto a = evaluate(policy, set, ref, "best-PDR", opt);
    const auto b = evaluate(policy, set, ref, "best-PDR", opt);
    CHECK(detail_csv(a, false) == detail_csv(b, false));
    CHECK(summary_csv(std::span(&a, 1), false) == summary_csv(std::span(&b, 1), false));
    double sw = 0, mk = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto t = policy_episode(*policy.policy, Environment(set[i]), Decoding::Greedy);
        CHECK(a.rows[i].switches == t.total_switches);
        CHECK(a.rows[i].gap == doctest::Approx((static_cast<double>(t.makespan) - ref[i]) / ref[i]));
        sw += static_cast<double>(t.total_switches);
        mk += static_cast<double>(t.makespan);
    }
    CHECK(a.mean_switches == doctest::Approx(sw / 6.0));
    CHECK(a.mean_makespan == doctest::Approx(mk / 6.0));
    CHECK(a.reference == "best-PDR");
    CHECK(summary_csv(std::span(&a, 1), false).find("seconds") == std::string::npos);
    CHECK(summary_csv(std::span(&a, 1), true).find("mean_seconds") != std::string::npos);
}

TEST_CASE("sampling keeps the best of its draws") {
    const auto set = test_set("6x4", 4, 5);
    const Method policy = Method::from_policy(PolicyParams(tiny_net(3)), "policy");
    EvalOptions one;
    one.strategy = Strategy::Sampling;
    one.samples = 1;
    EvalOptions many = one;
    many.samples = 30;
    const auto r1 = evaluate(policy, set, {}, "", one);
    const auto r30 = evaluate(policy, set, {}, "", many);
    CHECK(r1.reference == "none");
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(r30.rows[i].makespan <= r1.rows[i].makespan);
    // Rules are deterministic, so their sampling runs equal greedy.
    EvalOptions greedy;
    const auto g = evaluate(Method::from_rule(Rule::SPT), set, {}, "", greedy);
    const auto s = evaluate(Method::from_rule(Rule::SPT), set, {}, "", many);
    CHECK(detail_csv(g, false) == detail_csv(s, false));
}

TEST_CASE("oracle reference on tiny sets and never against a missing optimum") {
    GeneratorConfig c;
    c.n_jobs = 3;
    c.n_machines = 2;
    c.ops_per_job = {2, 2};
    c.category_count = 3;
    c.pallet_count = 2;
    c.categories_per_job = {1, 2};
    std::vector<Instance> set;
    for (std::uint64_t s = 0; s < 3; ++s) {
        c.seed = s;
        set.push_back(generate_instance(c));
    }
    const auto ref = reference_makespans(set, Reference::Oracle);
    const auto rep = evaluate(Method::from_rule(Rule::MWR), set, ref, to_string(Reference::Oracle), {});
    for (const auto &row : rep.rows) CHECK(row.gap >= 0.0);
    CHECK(rep.reference == "oracle");
}

TEST_CASE("ablation matrix") {
    const auto set = test_set("6x4", 3, 2);
    auto variants = ablation_variants();
    REQUIRE(variants.size() == 8);
    EvalOptions opt;
    CHECK_THROWS_AS((void)ablation_matrix(variants, set, opt), Error);
    for (auto &v : variants) {
        if (v.name == "AllOps" || v.name == "PS+Type") continue;
        NetConfig c = tiny_net();
        c.graph = v.graph;
        v.policy = PolicyParams(c);
    }
    const auto rows = ablation_matrix(variants, set, opt);
    REQUIRE(rows.size() == 8);
    for (const auto &r : rows) {
        if (r.name == "SortOnly_Weighted") {
            CHECK(r.present);
            CHECK(r.makespan_gap == 0.0);
            CHECK(r.switches_gap == 0.0);
        }
        if (r.name == "AllOps" || r.name == "PS+Type") CHECK(!r.present);
    }
    const std::string csv = ablation_csv(rows);
    CHECK(csv.find("AllOps,absent") != std::string::npos);

    // The same weights under two variant names give identical rows.
    NetConfig c = tiny_net();
    std::vector<AblationVariant> twins{{"SortOnly_Weighted", c.graph, PolicyParams(c)}, {"copy", c.graph, PolicyParams(c)}};
    const auto tw = ablation_matrix(twins, set, opt);
    CHECK(tw[0].mean_makespan == tw[1].mean_makespan);
    CHECK(tw[0].mean_switches == tw[1].mean_switches);

    auto mismatched = ablation_variants();
    mismatched.back().policy = PolicyParams(tiny_net());
    CHECK_THROWS_AS((void)ablation_matrix(mismatched, set, opt), ConfigError);
}

TEST_CASE("gantt export") {
    SUBCASE("switch delays match the accounting") {
        const Instance inst = make_instance(1, {0}, 4, 2, 1, 5,
                                            {{{{true, {{0, 1}}}}, {{0, 1}, {1, 1}}},
                                             {{{true, {{0, 1}}}}, {{2, 1}, {3, 1}}}});
        const Environment env(inst);
        const auto t = pdr_schedule(env, Rule::FIFO);
        REQUIRE(t.total_switches == 2);
        const GanttDoc doc = export_gantt(inst, t);
        std::size_t delays = 0;
        for (const auto &lane : doc.pallets) {
            for (const auto &d : lane.delays) CHECK(d.end - d.start == 5);
            delays += lane.delays.size();
        }
        CHECK(delays == 2);
        CHECK(parse_gantt(gantt_json(doc)) == doc);
        CHECK(gantt_svg(doc).find("<svg") == 0);
    }
    SUBCASE("no parts means no pallet lanes") {
        const Instance inst = make_instance(2, {}, 1, 1, 0, 0, {{{{false, {{0, 2}, {1, 3}}}}, {}}});
        const GanttDoc doc = export_gantt(inst, pdr_schedule(Environment(inst), Rule::SPT));
        CHECK(doc.pallets.empty());
        CHECK(doc.machines.size() == 2);
    }
    SUBCASE("lanes hold disjoint intervals and round-trip") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Instance inst = generate_instance(GeneratorConfig::for_size("10x5", seed));
            const auto t = random_policy(Environment(inst), seed);
            const GanttDoc doc = export_gantt(inst, t);
            CHECK(parse_gantt(gantt_json(doc)) == doc);
            std::size_t ops = 0, delays = 0;
            for (const auto &lane : doc.machines) {
                ops += lane.size();
                for (std::size_t k = 1; k < lane.size(); ++k) CHECK(lane[k - 1].end <= lane[k].start);
            }
            CHECK(ops == static_cast<std::size_t>(inst.operation_count()));
            for (const auto &lane : doc.pallets) {
                std::vector<std::pair<Time, Time>> iv;
                for (const auto &c : lane.intervals) iv.emplace_back(c.start, c.end);
                for (const auto &d : lane.delays) iv.emplace_back(d.start, d.end);
                std::sort(iv.begin(), iv.end());
                for (std::size_t k = 1; k < iv.size(); ++k) CHECK(iv[k - 1].second <= iv[k].first);
                delays += lane.delays.size();
            }
            CHECK(static_cast<std::int64_t>(delays) == t.total_switches);
        }
    }
    SUBCASE("incomplete traces are rejected") {
        const Instance inst = generate_instance(GeneratorConfig::for_size("10x5", 1));
        auto t = pdr_schedule(Environment(inst), Rule::MOR);
        t.steps.pop_back();
        CHECK_THROWS_AS((void)export_gantt(inst, t), ContractError);
        CHECK_THROWS_AS((void)parse_gantt("[1,2"), ParseError);
    }
}
