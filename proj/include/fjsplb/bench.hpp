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
#include <string>
#include <vector>

#include "fjsplb/baselines.hpp"
#include "fjsplb/env.hpp"
#include "fjsplb/net.hpp"

namespace fjsplb {

// Held-out sets drawn from streams disjoint from the training instances.
[[nodiscard]] std::vector<Instance> validation_set(const std::string &size, int count, std::uint64_t seed);
[[nodiscard]] std::vector<Instance> test_set(const std::string &size, int count, std::uint64_t seed);

enum class Strategy { Greedy, Sampling };

[[nodiscard]] const char *to_string(Strategy s);
[[nodiscard]] Strategy strategy_from_string(const std::string &s);

/// A schedule producer: a dispatching rule, the random policy or a trained
/// policy.
struct Method {
    enum class Kind { Rule, Random, Policy } kind = Kind::Rule;
    Rule rule = Rule::FIFO;
    std::optional<PolicyParams> policy;
    std::string name;

    static Method from_rule(Rule r);
    static Method random();
    static Method from_policy(PolicyParams params, std::string name);
    // fifo|mor|spt|mwr|lwr|random|ckpt:PATH
    static Method parse(const std::string &spec);
};

enum class Reference { BestPDR, Oracle };

[[nodiscard]] const char *to_string(Reference r);

struct EvalOptions {
    Strategy strategy = Strategy::Greedy;
    int samples = 100;
    std::uint64_t seed = 0;
    EnvConfig env;
};

struct InstanceResult {
    int instance = 0;
    Time makespan = 0;
    std::int64_t switches = 0;
    double reference = 0;
    double gap = 0; // (makespan - reference) / reference
    double seconds = 0;
};

struct EvalReport {
    std::string method;
    std::string strategy;
    std::string reference; // names the gap column
    std::vector<InstanceResult> rows;
    double mean_makespan = 0;
    double mean_switches = 0;
    double mean_gap = 0;
    double mean_seconds = 0;
};

/// Per-instance reference makespans. Oracle requires every search to finish
/// (throws Error otherwise); BestPDR takes the per-instance minimum over the
/// five rules.
[[nodiscard]] std::vector<double> reference_makespans(std::span<const Instance> instances, Reference ref,
                                                      const EnvConfig &env = {});

/// Runs the method over the test set. Greedy: one run per instance (the
/// random policy draws with derive_seed(seed, i)). Sampling: `samples` runs,
/// best makespan kept, fewer switches on ties; rules are deterministic so
/// sampling equals greedy for them.
[[nodiscard]] EvalReport evaluate(const Method &method, std::span<const Instance> instances,
                                  std::span<const double> reference, const std::string &reference_name,
                                  const EvalOptions &options);

/// Best schedule of one method on one environment under `options`.
[[nodiscard]] EpisodeTrace run_method(const Method &method, const Environment &env, const EvalOptions &options,
                                      std::uint64_t instance_seed);

// Summary rows, one per report. Wall time columns only when asked for, so
// deterministic runs give byte-identical files.
[[nodiscard]] std::string summary_csv(std::span<const EvalReport> reports, bool with_time);
[[nodiscard]] std::string detail_csv(const EvalReport &report, bool with_time);

struct AblationVariant {
    std::string name; // connectivity mode or feature subset
    GraphConfig graph;
    std::optional<PolicyParams> policy; // absent => reported as missing
};

struct AblationRow {
    std::string name;
    bool present = false;
    double mean_makespan = 0;
    double mean_switches = 0;
    double makespan_gap = 0; // relative to the full configuration
    double switches_gap = 0;
};

/// The five connectivity modes with all features, then the three reduced
/// feature subsets under SortOnly_Weighted. Policies are left empty.
[[nodiscard]] std::vector<AblationVariant> ablation_variants(double alpha = 0.3);

/// Greedy evaluation of every present variant. The full configuration
/// (SortOnly_Weighted, PS+Type+SwEst) is the gap reference; it must be present.
[[nodiscard]] std::vector<AblationRow> ablation_matrix(std::span<const AblationVariant> variants,
                                                       std::span<const Instance> instances,
                                                       const EvalOptions &options);

[[nodiscard]] std::string ablation_csv(std::span<const AblationRow> rows);

struct GanttOp {
    int op = 0;
    int job = 0;
    int op_index = 0;
    Time start = 0;
    Time end = 0;
    bool operator==(const GanttOp &) const = default;
};

struct CategoryInterval {
    int category = 0;
    Time start = 0;
    Time end = 0;
    bool operator==(const CategoryInterval &) const = default;
};

struct SwitchDelay {
    Time start = 0;
    Time end = 0;
    bool operator==(const SwitchDelay &) const = default;
};

struct PalletLane {
    int pallet = 0;
    std::vector<CategoryInterval> intervals;
    std::vector<SwitchDelay> delays;
    bool operator==(const PalletLane &) const = default;
};

struct GanttDoc {
    int machine_count = 0;
    Time makespan = 0;
    Time switch_time = 0;
    std::vector<std::vector<GanttOp>> machines; // one lane per machine
    std::vector<PalletLane> pallets;            // only pallets that were ever used
    bool operator==(const GanttDoc &) const = default;
};

/// Machine lanes from the executed ops; pallet lanes from the kitting
/// events. The k-th switch of a step occupies [start + k t_switch,
/// start + (k+1) t_switch) on the evicted pallet. Throws ContractError on an
/// incomplete trace.
[[nodiscard]] GanttDoc export_gantt(const Instance &inst, const EpisodeTrace &trace);

[[nodiscard]] std::string gantt_json(const GanttDoc &doc);
[[nodiscard]] GanttDoc parse_gantt(std::string_view text);
[[nodiscard]] std::string gantt_svg(const GanttDoc &doc);

} // namespace fjsplb
