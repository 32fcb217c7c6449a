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

#include "fjsplb/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <limits>
#include <random>

#include "fjsplb/error.hpp"

namespace fjsplb {

const char *to_string(Rule r) {
    switch (r) {
    case Rule::FIFO: return "FIFO";
    case Rule::MOR: return "MOR";
    case Rule::SPT: return "SPT";
    case Rule::MWR: return "MWR";
    case Rule::LWR: return "LWR";
    }
    return "?";
}

Rule rule_from_string(const std::string &s) {
    std::string up;
    for (char ch : s) up += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    for (Rule r : kAllRules)
        if (up == to_string(r)) return r;
    throw ConfigError("unknown dispatching rule '" + s + "'");
}

std::size_t pdr_choose(const Environment &env, const ScheduleState &s, std::span<const Action> actions, Rule rule) {
    if (actions.empty()) throw ContractError("pdr_choose needs at least one eligible action");
    const Problem &p = env.problem();

    // Priority of each candidate op: smaller is better.
    auto priority = [&](int op_id) -> double {
        const CompiledOp &op = p.op(op_id);
        const auto j = static_cast<std::size_t>(op.job);
        double remaining_ops = 0, work = 0;
        for (int id = op_id; id < p.job_end(op.job); ++id) {
            remaining_ops += 1;
            work += p.op(id).mean_time;
        }
        switch (rule) {
        case Rule::FIFO: return static_cast<double>(s.job_ready[j]);
        case Rule::MOR: return -remaining_ops;
        case Rule::SPT: return op.mean_time;
        case Rule::MWR: return -work;
        case Rule::LWR: return work;
        }
        return 0;
    };

    // Actions are ordered by (job, machine), so the first strict improvement
    // keeps the lowest job id on ties.
    int best_op = -1;
    double best = std::numeric_limits<double>::infinity();
    for (const auto &a : actions) {
        if (a.op == best_op) continue;
        const double pr = priority(a.op);
        if (pr < best) {
            best = pr;
            best_op = a.op;
        }
    }
    std::size_t pick = 0;
    Time best_end = std::numeric_limits<Time>::max();
    for (std::size_t k = 0; k < actions.size(); ++k) {
        if (actions[k].op != best_op) continue;
        const Time end = s.now + env.action_duration(s, actions[k]);
        if (end < best_end) {
            best_end = end;
            pick = k;
        }
    }
    return pick;
}

EpisodeTrace pdr_schedule(const Environment &env, Rule rule) {
    return run_episode(env, [&](const ScheduleState &s, std::span<const Action> a) { return pdr_choose(env, s, a, rule); });
}

EpisodeTrace random_policy(const Environment &env, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return run_episode(env, [&](const ScheduleState &, std::span<const Action> a) {
        return std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng);
    });
}

namespace {

struct Search {
    const Environment &env;
    std::int64_t node_limit;
    std::chrono::steady_clock::time_point deadline;
    std::int64_t nodes = 0;
    bool aborted = false;
    Time incumbent = std::numeric_limits<Time>::max();
    std::vector<Action> path{};
    std::vector<Action> best_path{};

    void dfs(const ScheduleState &s) {
        if (aborted) return;
        if (++nodes > node_limit || ((nodes & 1023) == 0 && std::chrono::steady_clock::now() > deadline)) {
            aborted = true;
            return;
        }
        if (s.done()) {
            const Time mk = s.max_end();
            if (mk < incumbent) {
                incumbent = mk;
                best_path = path;
            }
            return;
        }
        if (env.makespan_lower_bound(s, Estimator::Admissible) >= static_cast<double>(incumbent)) return;
        for (const auto &a : env.eligible_actions(s)) {
            path.push_back(a);
            dfs(env.step(s, a).next);
            path.pop_back();
            if (aborted) return;
        }
    }
};

} // namespace

OracleResult branch_and_bound(const Environment &env, std::int64_t node_limit, double time_limit_seconds) {
    Search search{.env = env,
                  .node_limit = node_limit,
                  .deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(time_limit_seconds))};
    // Warm start from the best dispatching rule.
    for (Rule r : kAllRules) {
        auto t = pdr_schedule(env, r);
        if (t.makespan < search.incumbent) {
            search.incumbent = t.makespan;
            search.best_path.clear();
            for (const auto &st : t.steps) search.best_path.push_back(st.action);
        }
    }
    search.dfs(env.reset());

    OracleResult out;
    out.optimal = !search.aborted;
    out.nodes_explored = search.nodes;
    std::size_t k = 0;
    out.best_schedule = run_episode(env, [&](const ScheduleState &, std::span<const Action> actions) {
        const Action want = search.best_path[k++];
        auto it = std::find(actions.begin(), actions.end(), want);
        if (it == actions.end()) throw Error("internal error: oracle path is not replayable");
        return static_cast<std::size_t>(it - actions.begin());
    });
    out.optimal_makespan = out.best_schedule.makespan;
    return out;
}

} // namespace fjsplb
