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

#include "fjsplb/env.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "fjsplb/error.hpp"

namespace fjsplb {

Problem::Problem(Instance inst, EnvConfig config) : instance_(std::move(inst)), config_(config) {
    require_valid(instance_);
    job_offset_.push_back(0);
    for (std::size_t j = 0; j < instance_.jobs.size(); ++j) {
        const auto &job = instance_.jobs[j];
        part_totals_.push_back(job.total_parts());
        const Time kit_time = static_cast<Time>(part_totals_.back()) * instance_.place_time;
        for (const auto &op : job.operations) {
            CompiledOp c;
            c.id = static_cast<int>(ops_.size());
            c.job = static_cast<int>(j);
            c.index = op.op_index;
            c.part_sorting = op.is_part_sorting;
            c.compatible = op.compatible;
            std::sort(c.compatible.begin(), c.compatible.end(),
                      [](const MachineOption &a, const MachineOption &b) { return a.machine < b.machine; });
            double sum = 0;
            Time lo = std::numeric_limits<Time>::max();
            for (const auto &m : c.compatible) {
                sum += static_cast<double>(m.time);
                lo = std::min(lo, m.time);
            }
            const double mean_p = sum / static_cast<double>(c.compatible.size());
            if (c.part_sorting && config_.kitting_mode == KittingTimeMode::Replace) {
                c.mean_time = static_cast<double>(kit_time);
                c.min_time = kit_time;
            } else if (c.part_sorting) {
                c.mean_time = mean_p + static_cast<double>(kit_time);
                c.min_time = lo + kit_time;
            } else {
                c.mean_time = mean_p;
                c.min_time = lo;
            }
            time_scale_ = std::max(time_scale_, c.mean_time);
            ops_.push_back(std::move(c));
        }
        job_offset_.push_back(static_cast<int>(ops_.size()));
    }
}

Time ScheduleState::max_end() const {
    Time t = 0;
    for (const auto &o : ops)
        if (o.scheduled) t = std::max(t, o.end);
    return t;
}

Environment::Environment(Instance inst, EnvConfig config)
    : problem_(std::make_shared<const Problem>(std::move(inst), config)) {}

Environment::Environment(std::shared_ptr<const Problem> problem) : problem_(std::move(problem)) {}

ScheduleState Environment::reset() const {
    const Problem &p = *problem_;
    const Instance &inst = p.instance();
    ScheduleState s;
    s.ops.resize(static_cast<std::size_t>(p.op_count()));
    s.next_op.assign(static_cast<std::size_t>(p.job_count()), 0);
    s.job_ready.assign(static_cast<std::size_t>(p.job_count()), 0);
    s.machine_free_at.assign(static_cast<std::size_t>(p.machine_count()), 0);
    s.buffer = BufferState::empty(inst.pallet_count, inst.category_count);
    s.pending_demand.assign(static_cast<std::size_t>(inst.category_count), 0);
    for (const auto &op : p.ops())
        if (op.part_sorting)
            for (const auto &part : p.parts(op.job)) s.pending_demand[static_cast<std::size_t>(part.category)] += part.count;
    s.est_cmax = makespan_lower_bound(s, Estimator::Mean);
    return s;
}

bool Environment::is_eligible(const ScheduleState &s, const Action &a) const {
    const Problem &p = *problem_;
    if (a.op < 0 || a.op >= p.op_count()) return false;
    const CompiledOp &op = p.op(a.op);
    const auto j = static_cast<std::size_t>(op.job);
    if (s.ops[static_cast<std::size_t>(a.op)].scheduled || s.next_op[j] != op.index) return false;
    if (s.job_ready[j] > s.now) return false;
    if (a.machine < 0 || a.machine >= p.machine_count()) return false;
    if (s.machine_free_at[static_cast<std::size_t>(a.machine)] > s.now) return false;
    return std::any_of(op.compatible.begin(), op.compatible.end(),
                       [&](const MachineOption &m) { return m.machine == a.machine; });
}

std::vector<Action> Environment::eligible_actions(const ScheduleState &s) const {
    const Problem &p = *problem_;
    std::vector<Action> out;
    for (int j = 0; j < p.job_count(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const int id = p.job_begin(j) + s.next_op[ju];
        if (id >= p.job_end(j) || s.job_ready[ju] > s.now) continue;
        for (const auto &m : p.op(id).compatible)
            if (s.machine_free_at[static_cast<std::size_t>(m.machine)] <= s.now) out.push_back({id, m.machine});
    }
    return out;
}

std::vector<std::int64_t> Environment::demand_excluding(const ScheduleState &s, int job) const {
    auto demand = s.pending_demand;
    for (const auto &part : problem_->parts(job)) demand[static_cast<std::size_t>(part.category)] -= part.count;
    return demand;
}

Time Environment::action_duration(const ScheduleState &s, const Action &a) const {
    const CompiledOp &op = problem_->op(a.op);
    Time p = 0;
    for (const auto &m : op.compatible)
        if (m.machine == a.machine) p = m.time;
    if (!op.part_sorting) return p;
    const Instance &inst = problem_->instance();
    const int sw = estimate_switches(s.buffer, problem_->parts(op.job));
    const Time kit = static_cast<Time>(problem_->job_part_total(op.job)) * inst.place_time +
                     static_cast<Time>(sw) * inst.switch_time;
    return problem_->config().kitting_mode == KittingTimeMode::Replace ? kit : p + kit;
}

double Environment::makespan_lower_bound(const ScheduleState &s, Estimator estimator) const {
    const Problem &p = *problem_;
    double best = 0;
    for (int j = 0; j < p.job_count(); ++j) {
        double t = 0;
        for (int id = p.job_begin(j); id < p.job_end(j); ++id) {
            const auto &rec = s.ops[static_cast<std::size_t>(id)];
            if (rec.scheduled) {
                t = static_cast<double>(rec.end);
            } else if (estimator == Estimator::Mean) {
                t = t + p.op(id).mean_time;
            } else {
                t = std::max(t, static_cast<double>(s.now)) + static_cast<double>(p.op(id).min_time);
            }
            best = std::max(best, t);
        }
    }
    if (estimator == Estimator::Admissible) {
        // Work that can only go to one machine queues behind that machine.
        std::vector<double> exclusive(static_cast<std::size_t>(p.machine_count()), 0.0);
        std::vector<char> used(static_cast<std::size_t>(p.machine_count()), 0);
        for (const auto &op : p.ops()) {
            if (s.ops[static_cast<std::size_t>(op.id)].scheduled || op.compatible.size() != 1) continue;
            const auto k = static_cast<std::size_t>(op.compatible.front().machine);
            exclusive[k] += static_cast<double>(op.min_time);
            used[k] = 1;
        }
        for (std::size_t k = 0; k < exclusive.size(); ++k) {
            if (!used[k]) continue;
            const double start = static_cast<double>(std::max(s.now, s.machine_free_at[k]));
            best = std::max(best, start + exclusive[k]);
        }
    }
    return best;
}

void Environment::advance(ScheduleState &s) const {
    while (!s.done()) {
        if (!eligible_actions(s).empty()) return;
        Time next = std::numeric_limits<Time>::max();
        for (const auto &o : s.ops)
            if (o.scheduled && o.end > s.now) next = std::min(next, o.end);
        if (next == std::numeric_limits<Time>::max())
            throw Error("internal error: no eligible action and no pending event");
        s.now = next;
    }
}

StepResult Environment::step(const ScheduleState &s, const Action &a) const {
    if (!is_eligible(s, a))
        throw ContractError("ineligible action (op " + std::to_string(a.op) + ", machine " +
                            std::to_string(a.machine) + ") at time " + std::to_string(s.now));
    const Problem &p = *problem_;
    const Instance &inst = p.instance();
    const CompiledOp &op = p.op(a.op);

    StepResult r;
    r.next = s;
    ScheduleState &n = r.next;

    Time p_time = 0;
    for (const auto &m : op.compatible)
        if (m.machine == a.machine) p_time = m.time;

    Time duration = p_time;
    int switches = 0;
    if (op.part_sorting) {
        const auto demand = demand_excluding(s, op.job);
        EvictionContext ctx{p.config().eviction, demand};
        auto kit = apply_kitting(s.buffer, p.parts(op.job), {inst.place_time, inst.switch_time}, ctx);
        switches = kit.switches;
        duration = p.config().kitting_mode == KittingTimeMode::Replace ? kit.duration : p_time + kit.duration;
        n.buffer = std::move(kit.state);
        n.pending_demand = demand;
        r.record.evictions = std::move(kit.evictions);
        r.record.placements = std::move(kit.placements);
    }

    const auto j = static_cast<std::size_t>(op.job);
    const Time start = std::max({s.now, s.job_ready[j], s.machine_free_at[static_cast<std::size_t>(a.machine)]});
    const Time end = start + duration;
    auto &rec = n.ops[static_cast<std::size_t>(a.op)];
    rec = {true, a.machine, start, end, switches};
    n.next_op[j] += 1;
    n.job_ready[j] = end;
    n.machine_free_at[static_cast<std::size_t>(a.machine)] = end;
    n.scheduled_count += 1;
    n.switches_so_far += switches;

    advance(n);
    n.est_cmax = makespan_lower_bound(n, Estimator::Mean);

    const double lambda = p.config().lambda;
    r.reward = (s.est_cmax - n.est_cmax) +
               lambda * static_cast<double>(s.switches_so_far - n.switches_so_far);
    r.done = n.done();
    r.switches = switches;
    if (r.done) r.makespan = n.max_end();
    r.record.action = a;
    r.record.job = op.job;
    r.record.op_index = op.index;
    r.record.start = start;
    r.record.end = end;
    r.record.switches = switches;
    return r;
}

EpisodeTrace run_episode(const Environment &env, const ActionChooser &choose) {
    const Instance &inst = env.problem().instance();
    EpisodeTrace t;
    t.machine_count = inst.machine_count;
    t.pallet_count = inst.pallet_count;
    t.place_time = inst.place_time;
    t.switch_time = inst.switch_time;
    ScheduleState s = env.reset();
    t.initial_estimate = s.est_cmax;
    while (!s.done()) {
        const auto actions = env.eligible_actions(s);
        const std::size_t k = choose(s, actions);
        if (k >= actions.size()) throw ContractError("action chooser returned an out-of-range index");
        auto r = env.step(s, actions[k]);
        t.total_reward += r.reward;
        t.steps.push_back(std::move(r.record));
        s = std::move(r.next);
    }
    t.makespan = s.max_end();
    t.total_switches = s.switches_so_far;
    return t;
}

} // namespace fjsplb
