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
#include <string>
#include <vector>

#include "fjsplb/env.hpp"

namespace fjsplb {

/// Operation-sequencing rules; machines are always assigned by earliest end
/// time (EET) among the eligible ones.
enum class Rule { FIFO, MOR, SPT, MWR, LWR };

inline constexpr Rule kAllRules[] = {Rule::FIFO, Rule::MOR, Rule::SPT, Rule::MWR, Rule::LWR};

[[nodiscard]] const char *to_string(Rule r);
[[nodiscard]] Rule rule_from_string(const std::string &s); // case-insensitive

/// Index into `actions` chosen by `rule` + EET at `state`.
[[nodiscard]] std::size_t pdr_choose(const Environment &env, const ScheduleState &state,
                                     std::span<const Action> actions, Rule rule);

[[nodiscard]] EpisodeTrace pdr_schedule(const Environment &env, Rule rule);
[[nodiscard]] EpisodeTrace random_policy(const Environment &env, std::uint64_t seed);

struct OracleResult {
    Time optimal_makespan = 0;
    bool optimal = false; // search exhausted within the limits
    std::int64_t nodes_explored = 0;
    EpisodeTrace best_schedule;
};

/// Depth-first search over decision epochs, branching on every eligible pair
/// and pruning with the admissible completion bound. Optimality is relative to
/// the environment's own semantics (non-delay epochs, its eviction policy).
[[nodiscard]] OracleResult branch_and_bound(const Environment &env, std::int64_t node_limit = 10'000'000,
                                            double time_limit_seconds = 60.0);

} // namespace fjsplb
