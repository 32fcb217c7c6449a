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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fjsplb/instance.hpp"

namespace fjsplb {

struct Pallet {
    std::optional<int> category; // nullopt == Empty
    int fill_count = 0;

    [[nodiscard]] bool empty() const { return !category.has_value(); }
    bool operator==(const Pallet &) const = default;
};

enum class EvictionPolicy {
    FewestRemainingDemand, // least pending demand, then LRU, then lowest index
    LeastRecentlyUsed,     // LRU, then lowest index
    LowestIndex,
};

[[nodiscard]] const char *to_string(EvictionPolicy p);
[[nodiscard]] EvictionPolicy eviction_policy_from_string(const std::string &s);

/// The P pallets of the kitting buffer.
///
/// A pallet's category is fixed until it is evicted (moved to the warehouse
/// and replaced with an empty one). `clock` stamps every kitting call so
/// `last_use` orders pallets by recency.
struct BufferState {
    std::vector<Pallet> pallets;
    std::int64_t total_switches = 0;
    std::vector<std::int64_t> last_use;
    std::int64_t clock = 0;
    int category_count = 1;

    static BufferState empty(int pallet_count, int category_count);

    [[nodiscard]] int pallet_count() const { return static_cast<int>(pallets.size()); }
    [[nodiscard]] int empty_count() const;
    [[nodiscard]] std::optional<int> pallet_of(int category) const;
    bool operator==(const BufferState &) const = default;
};

struct EvictionContext {
    EvictionPolicy policy = EvictionPolicy::FewestRemainingDemand;
    // Pending part count per category over not-yet-kitted work; may be empty
    // (treated as all zero).
    std::span<const std::int64_t> remaining_demand;
};

struct KittingTimes {
    Time place_time = 0;
    Time switch_time = 0;
};

struct Eviction {
    int pallet = 0;
    int category = 0; // category moved to the warehouse
    int fill_count = 0;
};

struct Placement {
    int pallet = 0;
    int category = 0;
    int count = 0;
    bool new_category = false; // pallet was (re)assigned for this category
};

struct KittingResult {
    BufferState state;
    int switches = 0;
    Time duration = 0;
    std::vector<Eviction> evictions; // in replacement order
    std::vector<Placement> placements;
};

/// Number of pallet changes kitting `parts` would cause right now:
/// max(0, |categories not on a pallet| - |empty pallets|).
[[nodiscard]] int estimate_switches(const BufferState &buf, std::span<const PartCount> parts);

/// Chooses `n_needed` distinct non-empty pallets to replace. Pallets holding a
/// category in `protected_categories` are never chosen.
[[nodiscard]] std::vector<int> choose_evictions(const BufferState &buf, int n_needed, const EvictionContext &ctx,
                                                std::span<const int> protected_categories = {});

/// Places a job's parts: existing categories join their pallet, new ones take
/// empty pallets first and then replaced pallets. Replacements are serialized
/// ahead of placement, so
///     duration = total_parts * place_time + switches * switch_time.
[[nodiscard]] KittingResult apply_kitting(const BufferState &buf, std::span<const PartCount> parts,
                                          const KittingTimes &times, const EvictionContext &ctx = {});

} // namespace fjsplb
