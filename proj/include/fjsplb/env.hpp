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

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fjsplb/buffer.hpp"
#include "fjsplb/instance.hpp"

namespace fjsplb {

// How a part-sorting operation's machine time relates to its kitting time.
enum class KittingTimeMode {
    Replace,  // duration = kitting duration
    Additive, // duration = p_ijk + kitting duration
};

struct EnvConfig {
    double lambda = 1.0; // weight of the switch term in the reward
    EvictionPolicy eviction = EvictionPolicy::FewestRemainingDemand;
    KittingTimeMode kitting_mode = KittingTimeMode::Replace;
};

struct CompiledOp {
    int id = 0;
    int job = 0;
    int index = 0;
    bool part_sorting = false;
    std::vector<MachineOption> compatible; // sorted by machine
    double mean_time = 0;                  // estimator time (kitting ops: parts * t_p [+ mean p])
    Time min_time = 0;                     // admissible counterpart of mean_time
};

/// Immutable flattened view of an instance shared by all states.
class Problem {
public:
    Problem(Instance inst, EnvConfig config);

    [[nodiscard]] const Instance &instance() const { return instance_; }
    [[nodiscard]] const EnvConfig &config() const { return config_; }
    [[nodiscard]] int op_count() const { return static_cast<int>(ops_.size()); }
    [[nodiscard]] int job_count() const { return static_cast<int>(instance_.jobs.size()); }
    [[nodiscard]] int machine_count() const { return instance_.machine_count; }
    [[nodiscard]] const CompiledOp &op(int id) const { return ops_[static_cast<std::size_t>(id)]; }
    [[nodiscard]] const std::vector<CompiledOp> &ops() const { return ops_; }
    [[nodiscard]] int job_begin(int job) const { return job_offset_[static_cast<std::size_t>(job)]; }
    [[nodiscard]] int job_end(int job) const { return job_offset_[static_cast<std::size_t>(job) + 1]; }
    [[nodiscard]] const std::vector<PartCount> &parts(int job) const {
        return instance_.jobs[static_cast<std::size_t>(job)].parts;
    }
    [[nodiscard]] int job_part_total(int job) const { return part_totals_[static_cast<std::size_t>(job)]; }
    // Largest mean_time over all ops; used to normalize time-valued features.
    [[nodiscard]] double time_scale() const { return time_scale_; }

private:
    Instance instance_;
    EnvConfig config_;
    std::vector<CompiledOp> ops_;
    std::vector<int> job_offset_;
    std::vector<int> part_totals_;
    double time_scale_ = 1;
};

struct Action {
    int op = 0; // global operation id
    int machine = 0;

    bool operator==(const Action &) const = default;
};

struct OpRecord {
    bool scheduled = false;
    int machine = -1;
    Time start = 0;
    Time end = 0;
    int switches = 0;
};

struct ScheduleState {
    std::vector<OpRecord> ops;
    std::vector<int> next_op;        // per job: first unscheduled op index within the job
    std::vector<Time> job_ready;     // per job: end of the last scheduled op
    std::vector<Time> machine_free_at;
    Time now = 0;
    BufferState buffer;
    double est_cmax = 0;
    std::int64_t switches_so_far = 0;
    int scheduled_count = 0;
    std::vector<std::int64_t> pending_demand; // per category, over unscheduled part-sorting ops

    [[nodiscard]] bool done() const { return scheduled_count == static_cast<int>(ops.size()); }
    [[nodiscard]] Time max_end() const;
};

/// One executed action with its timing and kitting events.
struct StepRecord {
    Action action;
    int job = 0;
    int op_index = 0;
    Time start = 0;
    Time end = 0;
    int switches = 0;
    std::vector<Eviction> evictions;
    std::vector<Placement> placements;
};

struct StepResult {
    ScheduleState next;
    double reward = 0;
    bool done = false;
    int switches = 0;
    std::optional<Time> makespan;
    StepRecord record;
};

enum class Estimator {
    Mean,       // chain of mean processing times; drives the reward
    Admissible, // never exceeds the optimal completion; used for pruning
};

/// The scheduling MDP. Stateless apart from the compiled problem: every
/// transition takes a state and returns a new one.
class Environment {
public:
    explicit Environment(Instance inst, EnvConfig config = {});
    explicit Environment(std::shared_ptr<const Problem> problem);

    [[nodiscard]] const Problem &problem() const { return *problem_; }
    [[nodiscard]] std::shared_ptr<const Problem> shared_problem() const { return problem_; }

    [[nodiscard]] ScheduleState reset() const;
    // Pairs ordered by (job, machine). Empty only once the episode is done.
    [[nodiscard]] std::vector<Action> eligible_actions(const ScheduleState &state) const;
    [[nodiscard]] bool is_eligible(const ScheduleState &state, const Action &a) const;
    [[nodiscard]] StepResult step(const ScheduleState &state, const Action &a) const;

    // Duration `a` would take if executed now (kitting included).
    [[nodiscard]] Time action_duration(const ScheduleState &state, const Action &a) const;
    [[nodiscard]] double makespan_lower_bound(const ScheduleState &state,
                                              Estimator estimator = Estimator::Mean) const;
    // Pending demand with the given job's parts excluded, as seen by eviction.
    [[nodiscard]] std::vector<std::int64_t> demand_excluding(const ScheduleState &state, int job) const;

private:
    void advance(ScheduleState &state) const;

    std::shared_ptr<const Problem> problem_;
};

struct EpisodeTrace {
    int machine_count = 0;
    int pallet_count = 0;
    Time place_time = 0;
    Time switch_time = 0;
    std::vector<StepRecord> steps;
    Time makespan = 0;
    std::int64_t total_switches = 0;
    double initial_estimate = 0;
    double total_reward = 0;
};

// Picks the index of the action to take among the eligible ones.
using ActionChooser = std::function<std::size_t(const ScheduleState &, std::span<const Action>)>;

/// Runs one full episode from reset, recording every step.
[[nodiscard]] EpisodeTrace run_episode(const Environment &env, const ActionChooser &choose);

[[nodiscard]] std::string save_trace(const EpisodeTrace &trace);
[[nodiscard]] EpisodeTrace load_trace(std::string_view text);

/// Replays a trace against the instance and lists every broken rule:
/// precedence, machine exclusivity, part-sorting machine use, pallet category
/// uniqueness, pallet count, switch accounting and serialized kitting time.
[[nodiscard]] std::vector<std::string> check_trace(const Instance &inst, const EpisodeTrace &trace,
                                                   const EnvConfig &config = {});

} // namespace fjsplb
