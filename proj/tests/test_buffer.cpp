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

#include <numeric>
#include <random>
#include <set>

#include "fjsplb/buffer.hpp"
#include "fjsplb/error.hpp"
#include "oracles.hpp"

using namespace fjsplb;

namespace {

BufferState with(int P, int C, std::vector<std::optional<int>> cats) {
    BufferState b = BufferState::empty(P, C);
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i]) b.pallets[i] = Pallet{cats[i], 1};
    return b;
}

} // namespace

TEST_CASE("switch estimate counts new categories beyond the empty pallets") {
    // pallets {A, B, empty}, job over {A, C, D}
    const BufferState b = with(3, 4, {0, 1, std::nullopt});
    const std::vector<PartCount> parts{{0, 1}, {2, 1}, {3, 1}};
    CHECK(estimate_switches(b, parts) == 1);
    CHECK(estimate_switches(b, std::vector<PartCount>{{0, 2}, {1, 1}}) == 0);
    CHECK(estimate_switches(BufferState::empty(6, 10), std::vector<PartCount>{{1, 1}, {5, 1}, {9, 3}}) == 0);
    CHECK_THROWS_AS((void)estimate_switches(b, std::vector<PartCount>{{4, 1}}), DomainError);
}

TEST_CASE("kitting duration is parts times place time plus switches times switch time") {
    // four occupied pallets, no empties, two new categories, eight parts
    const BufferState b = with(4, 8, {0, 1, 2, 3});
    const std::vector<PartCount> parts{{0, 3}, {4, 2}, {5, 3}};
    const auto r = apply_kitting(b, parts, {2, 5});
    CHECK(r.switches == 2);
    CHECK(r.duration == 8 * 2 + 2 * 5);
    CHECK(r.state.total_switches == 2);
    CHECK(r.evictions.size() == 2);
    CHECK(r.state.pallets[0] == Pallet{0, 4});
}

TEST_CASE("empty part list leaves the buffer alone apart from the clock") {
    const BufferState b = with(3, 4, {0, std::nullopt, 2});
    const auto r = apply_kitting(b, std::vector<PartCount>{}, {2, 5});
    CHECK(r.switches == 0);
    CHECK(r.duration == 0);
    CHECK(r.state.pallets == b.pallets);
    CHECK(r.state.total_switches == b.total_switches);
}

TEST_CASE("too many categories for the buffer is infeasible") {
    const BufferState b = BufferState::empty(2, 5);
    CHECK_THROWS_AS((void)apply_kitting(b, std::vector<PartCount>{{0, 1}, {1, 1}, {2, 1}}, {1, 1}),
                    InfeasibleKittingError);
}

TEST_CASE("eviction choice per policy") {
    BufferState b = with(3, 5, {0, 1, 2});
    b.last_use = {3, 1, 7};
    CHECK(choose_evictions(b, 0, {}).empty());
    CHECK(choose_evictions(b, 1, {EvictionPolicy::LeastRecentlyUsed, {}}) == std::vector<int>{1});
    CHECK(choose_evictions(b, 1, {EvictionPolicy::LowestIndex, {}}) == std::vector<int>{0});
    const std::vector<std::int64_t> demand{4, 6, 0, 0, 0};
    CHECK(choose_evictions(b, 1, {EvictionPolicy::FewestRemainingDemand, demand}) == std::vector<int>{2});
    CHECK(choose_evictions(b, 2, {EvictionPolicy::FewestRemainingDemand, demand}) == std::vector<int>{2, 0});
    const std::vector<int> protect{2};
    CHECK(choose_evictions(b, 1, {EvictionPolicy::FewestRemainingDemand, demand}, protect) == std::vector<int>{0});
    CHECK_THROWS_AS((void)choose_evictions(b, 3, {}, protect), InfeasibleKittingError);
}

TEST_CASE("kitting matches the single-part reference simulation") {
    std::mt19937_64 rng(2024);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int trial = 0; trial < 500; ++trial) {
        const int P = uni(1, 8), C = uni(1, 12);
        BufferState b = BufferState::empty(P, C);
        std::vector<int> cats(static_cast<std::size_t>(C));
        std::iota(cats.begin(), cats.end(), 0);
        std::shuffle(cats.begin(), cats.end(), rng);
        std::vector<oracle::SlowPallet> slow(static_cast<std::size_t>(P));
        int next = 0;
        for (int i = 0; i < P; ++i) {
            b.last_use[static_cast<std::size_t>(i)] = uni(0, 5);
            slow[static_cast<std::size_t>(i)].last_use = b.last_use[static_cast<std::size_t>(i)];
            if (next < C && uni(0, 3) > 0) {
                const int f = uni(1, 5);
                b.pallets[static_cast<std::size_t>(i)] = Pallet{cats[static_cast<std::size_t>(next)], f};
                slow[static_cast<std::size_t>(i)] = {cats[static_cast<std::size_t>(next)], f, b.last_use[static_cast<std::size_t>(i)]};
                ++next;
            }
        }
        b.clock = 6;
        std::vector<std::int64_t> demand(static_cast<std::size_t>(C));
        for (auto &d : demand) d = uni(0, 3);
        std::shuffle(cats.begin(), cats.end(), rng);
        std::vector<PartCount> parts;
        const int k = uni(0, std::min(P, C));
        for (int i = 0; i < k; ++i) parts.push_back({cats[static_cast<std::size_t>(i)], uni(1, 4)});
        const auto policy = static_cast<EvictionPolicy>(uni(0, 2));
        const Time tp = uni(0, 4), ts = uni(0, 9);

        const int est = estimate_switches(b, parts);
        const auto fast = apply_kitting(b, parts, {tp, ts}, {policy, demand});
        const auto ref = oracle::slow_kitting(slow, b.clock, parts, tp, ts, policy, demand);
        INFO("trial " << trial);
        CHECK(fast.switches == ref.switches);
        CHECK(fast.duration == ref.duration);
        CHECK(est == fast.switches);
        for (int i = 0; i < P; ++i) {
            const auto &pf = fast.state.pallets[static_cast<std::size_t>(i)];
            const auto &ps = ref.pallets[static_cast<std::size_t>(i)];
            CHECK(pf.category.value_or(-1) == ps.category);
            CHECK(pf.fill_count == ps.fill);
            CHECK(fast.state.last_use[static_cast<std::size_t>(i)] == ps.last_use);
        }
    }
}

TEST_CASE("buffer invariants over long kitting sequences") {
    std::mt19937_64 rng(7);
    for (int run = 0; run < 50; ++run) {
        const int P = 4, C = 9;
        BufferState b = BufferState::empty(P, C);
        std::int64_t sum = 0;
        for (int step = 0; step < 40; ++step) {
            std::vector<int> cats(C);
            std::iota(cats.begin(), cats.end(), 0);
            std::shuffle(cats.begin(), cats.end(), rng);
            std::vector<PartCount> parts;
            const int k = std::uniform_int_distribution<int>(0, P)(rng);
            for (int i = 0; i < k; ++i) parts.push_back({cats[static_cast<std::size_t>(i)], 1});

            // One more empty pallet never raises the estimate.
            BufferState wider = b;
            wider.pallets.push_back({});
            wider.last_use.push_back(0);
            CHECK(estimate_switches(wider, parts) <= estimate_switches(b, parts));

            const auto r = apply_kitting(b, parts, {1, 1});
            sum += r.switches;
            b = r.state;
            CHECK(b.total_switches == sum);
            std::set<int> seen;
            for (const auto &p : b.pallets) {
                CHECK(p.empty() == (p.fill_count == 0));
                if (p.category) CHECK(seen.insert(*p.category).second);
            }
            for (const auto &p : parts) CHECK(b.pallet_of(p.category).has_value());
        }
    }
}
