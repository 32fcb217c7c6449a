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

#include "fjsplb/buffer.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

#include "fjsplb/error.hpp"

namespace fjsplb {

const char *to_string(EvictionPolicy p) {
    switch (p) {
    case EvictionPolicy::FewestRemainingDemand: return "demand";
    case EvictionPolicy::LeastRecentlyUsed: return "lru";
    case EvictionPolicy::LowestIndex: return "index";
    }
    return "?";
}

EvictionPolicy eviction_policy_from_string(const std::string &s) {
    if (s == "demand") return EvictionPolicy::FewestRemainingDemand;
    if (s == "lru") return EvictionPolicy::LeastRecentlyUsed;
    if (s == "index") return EvictionPolicy::LowestIndex;
    throw ConfigError("unknown eviction policy '" + s + "' (expected demand|lru|index)");
}

BufferState BufferState::empty(int pallet_count, int category_count) {
    if (pallet_count < 1) throw DomainError("buffer needs at least one pallet");
    BufferState b;
    b.pallets.resize(static_cast<std::size_t>(pallet_count));
    b.last_use.assign(static_cast<std::size_t>(pallet_count), 0);
    b.category_count = category_count;
    return b;
}

int BufferState::empty_count() const {
    return static_cast<int>(std::count_if(pallets.begin(), pallets.end(), [](const Pallet &p) { return p.empty(); }));
}

std::optional<int> BufferState::pallet_of(int category) const {
    for (std::size_t i = 0; i < pallets.size(); ++i)
        if (pallets[i].category == category) return static_cast<int>(i);
    return std::nullopt;
}

namespace {

// Distinct categories of `parts` that are not on any pallet, ascending.
std::vector<int> new_categories(const BufferState &buf, std::span<const PartCount> parts) {
    std::vector<int> out;
    for (const auto &p : parts) {
        if (p.category < 0 || p.category >= buf.category_count)
            throw DomainError("part category " + std::to_string(p.category) + " outside [0, " +
                              std::to_string(buf.category_count) + ")");
        if (!buf.pallet_of(p.category)) out.push_back(p.category);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

int distinct_categories(std::span<const PartCount> parts) {
    std::vector<int> c;
    for (const auto &p : parts) c.push_back(p.category);
    std::sort(c.begin(), c.end());
    return static_cast<int>(std::unique(c.begin(), c.end()) - c.begin());
}

} // namespace

int estimate_switches(const BufferState &buf, std::span<const PartCount> parts) {
    const int fresh = static_cast<int>(new_categories(buf, parts).size());
    return std::max(0, fresh - buf.empty_count());
}

std::vector<int> choose_evictions(const BufferState &buf, int n_needed, const EvictionContext &ctx,
                                  std::span<const int> protected_categories) {
    if (n_needed <= 0) return {};
    std::vector<int> candidates;
    for (int i = 0; i < buf.pallet_count(); ++i) {
        const auto &p = buf.pallets[static_cast<std::size_t>(i)];
        if (p.empty()) continue;
        if (std::find(protected_categories.begin(), protected_categories.end(), *p.category) !=
            protected_categories.end())
            continue;
        candidates.push_back(i);
    }
    if (static_cast<int>(candidates.size()) < n_needed)
        throw InfeasibleKittingError("need " + std::to_string(n_needed) + " evictions but only " +
                                     std::to_string(candidates.size()) + " pallets can be replaced");

    auto demand = [&](int pallet) -> std::int64_t {
        const int cat = *buf.pallets[static_cast<std::size_t>(pallet)].category;
        if (ctx.remaining_demand.empty()) return 0;
        return ctx.remaining_demand[static_cast<std::size_t>(cat)];
    };
    auto key = [&](int pallet) {
        const auto lu = buf.last_use[static_cast<std::size_t>(pallet)];
        switch (ctx.policy) {
        case EvictionPolicy::FewestRemainingDemand: return std::tuple{demand(pallet), lu, pallet};
        case EvictionPolicy::LeastRecentlyUsed: return std::tuple{std::int64_t{0}, lu, pallet};
        case EvictionPolicy::LowestIndex: break;
        }
        return std::tuple{std::int64_t{0}, std::int64_t{0}, pallet};
    };
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) { return key(a) < key(b); });
    candidates.resize(static_cast<std::size_t>(n_needed));
    return candidates;
}

KittingResult apply_kitting(const BufferState &buf, std::span<const PartCount> parts, const KittingTimes &times,
                            const EvictionContext &ctx) {
    if (distinct_categories(parts) > buf.pallet_count())
        throw InfeasibleKittingError("job carries more distinct categories than there are pallets");
    const auto fresh = new_categories(buf, parts);

    KittingResult r;
    r.state = buf;
    BufferState &out = r.state;
    out.clock += 1;

    std::vector<int> empties;
    for (int i = 0; i < out.pallet_count(); ++i)
        if (out.pallets[static_cast<std::size_t>(i)].empty()) empties.push_back(i);

    const int n_evict = std::max(0, static_cast<int>(fresh.size()) - static_cast<int>(empties.size()));
    std::vector<int> protect;
    for (const auto &p : parts) protect.push_back(p.category);
    const auto victims = choose_evictions(buf, n_evict, ctx, protect);

    // Slots for new categories: empty pallets (ascending) then replaced ones.
    std::vector<int> slots(empties.begin(), empties.begin() + std::min(empties.size(), fresh.size()));
    for (int v : victims) {
        auto &p = out.pallets[static_cast<std::size_t>(v)];
        r.evictions.push_back({v, *p.category, p.fill_count});
        p = Pallet{};
        slots.push_back(v);
    }
    for (std::size_t k = 0; k < fresh.size(); ++k) out.pallets[static_cast<std::size_t>(slots[k])].category = fresh[k];

    int total_parts = 0;
    for (const auto &p : parts) {
        const int pallet = *out.pallet_of(p.category);
        auto &slot = out.pallets[static_cast<std::size_t>(pallet)];
        slot.fill_count += p.count;
        out.last_use[static_cast<std::size_t>(pallet)] = out.clock;
        total_parts += p.count;
        const bool is_new = std::binary_search(fresh.begin(), fresh.end(), p.category);
        r.placements.push_back({pallet, p.category, p.count, is_new});
    }

    r.switches = n_evict;
    out.total_switches += n_evict;
    r.duration = static_cast<Time>(total_parts) * times.place_time + static_cast<Time>(n_evict) * times.switch_time;
    return r;
}

} // namespace fjsplb
