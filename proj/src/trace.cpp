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

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "fjsplb/env.hpp"
#include "fjsplb/error.hpp"

namespace fjsplb {

using nlohmann::json;

std::string save_trace(const EpisodeTrace &t) {
    json doc;
    doc["format"] = "fjsplb-trace";
    doc["version"] = 1;
    doc["machines"] = t.machine_count;
    doc["pallets"] = t.pallet_count;
    doc["place_time"] = t.place_time;
    doc["switch_time"] = t.switch_time;
    doc["makespan"] = t.makespan;
    doc["total_switches"] = t.total_switches;
    doc["initial_estimate"] = t.initial_estimate;
    doc["total_reward"] = t.total_reward;
    json steps = json::array();
    for (const auto &s : t.steps) {
        json js;
        js["op"] = s.action.op;
        js["machine"] = s.action.machine;
        js["job"] = s.job;
        js["op_index"] = s.op_index;
        js["start"] = s.start;
        js["end"] = s.end;
        js["switches"] = s.switches;
        json ev = json::array();
        for (const auto &e : s.evictions) ev.push_back({e.pallet, e.category, e.fill_count});
        js["evictions"] = ev;
        json pl = json::array();
        for (const auto &p : s.placements) pl.push_back({p.pallet, p.category, p.count, p.new_category});
        js["placements"] = pl;
        steps.push_back(js);
    }
    doc["steps"] = steps;
    return doc.dump(1) + "\n";
}

EpisodeTrace load_trace(std::string_view text) {
    try {
        json doc = json::parse(text.begin(), text.end());
        if (doc.at("format").get<std::string>() != "fjsplb-trace" || doc.at("version").get<int>() != 1)
            throw ParseError("trace: unsupported format or version");
        EpisodeTrace t;
        t.machine_count = doc.at("machines").get<int>();
        t.pallet_count = doc.at("pallets").get<int>();
        t.place_time = doc.at("place_time").get<Time>();
        t.switch_time = doc.at("switch_time").get<Time>();
        t.makespan = doc.at("makespan").get<Time>();
        t.total_switches = doc.at("total_switches").get<std::int64_t>();
        t.initial_estimate = doc.at("initial_estimate").get<double>();
        t.total_reward = doc.at("total_reward").get<double>();
        for (const auto &js : doc.at("steps")) {
            StepRecord s;
            s.action = {js.at("op").get<int>(), js.at("machine").get<int>()};
            s.job = js.at("job").get<int>();
            s.op_index = js.at("op_index").get<int>();
            s.start = js.at("start").get<Time>();
            s.end = js.at("end").get<Time>();
            s.switches = js.at("switches").get<int>();
            for (const auto &e : js.at("evictions"))
                s.evictions.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
            for (const auto &p : js.at("placements"))
                s.placements.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>(), p.at(3).get<bool>()});
            t.steps.push_back(std::move(s));
        }
        return t;
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("trace: parse error at byte ") + std::to_string(e.byte) + ": " + e.what());
    } catch (const json::exception &e) {
        throw ParseError(std::string("trace: ") + e.what());
    }
}

std::vector<std::string> check_trace(const Instance &inst, const EpisodeTrace &trace, const EnvConfig &config) {
    std::vector<std::string> bad;
    std::vector<int> job_begin{0};
    for (const auto &j : inst.jobs) job_begin.push_back(job_begin.back() + static_cast<int>(j.operations.size()));
    const int n_ops = job_begin.back();

    if (static_cast<int>(trace.steps.size()) != n_ops)
        bad.push_back("trace has " + std::to_string(trace.steps.size()) + " steps for " + std::to_string(n_ops) +
                      " operations");

    std::vector<std::optional<int>> pallets(static_cast<std::size_t>(inst.pallet_count));
    std::vector<std::optional<std::pair<Time, Time>>> op_time(static_cast<std::size_t>(n_ops));
    std::map<int, std::vector<std::pair<Time, Time>>> lanes;
    std::int64_t switches = 0;
    Time makespan = 0;

    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const auto &s = trace.steps[k];
        const std::string where = "step " + std::to_string(k) + ": ";
        if (s.job < 0 || s.job >= static_cast<int>(inst.jobs.size()) || s.op_index < 0 ||
            s.op_index >= static_cast<int>(inst.jobs[static_cast<std::size_t>(s.job)].operations.size())) {
            bad.push_back(where + "unknown operation");
            continue;
        }
        const auto &job = inst.jobs[static_cast<std::size_t>(s.job)];
        const auto &op = job.operations[static_cast<std::size_t>(s.op_index)];
        const int id = job_begin[static_cast<std::size_t>(s.job)] + s.op_index;
        if (s.action.op != id) bad.push_back(where + "operation id does not match job/op_index");
        if (op_time[static_cast<std::size_t>(id)]) bad.push_back(where + "operation scheduled twice");
        op_time[static_cast<std::size_t>(id)] = {s.start, s.end};
        if (s.start < 0 || s.end < s.start) bad.push_back(where + "bad interval");

        std::optional<Time> p;
        for (const auto &m : op.compatible)
            if (m.machine == s.action.machine) p = m.time;
        if (!p) bad.push_back(where + "machine not compatible");
        if (op.is_part_sorting && !inst.is_part_sorting_machine(s.action.machine))
            bad.push_back(where + "part-sorting operation on a regular machine");

        // Precedence within the job.
        if (s.op_index > 0) {
            const auto &prev = op_time[static_cast<std::size_t>(id - 1)];
            if (!prev)
                bad.push_back(where + "predecessor not scheduled first");
            else if (prev->second > s.start)
                bad.push_back(where + "starts before its predecessor ends");
        }
        lanes[s.action.machine].push_back({s.start, s.end});

        Time expected = p.value_or(0);
        if (op.is_part_sorting) {
            // Independent replay of the pallet events.
            int fresh = 0, empties = 0;
            for (const auto &part : job.parts) {
                bool present = std::find(pallets.begin(), pallets.end(), std::optional<int>(part.category)) != pallets.end();
                fresh += present ? 0 : 1;
            }
            for (const auto &pl : pallets) empties += pl ? 0 : 1;
            const int want = std::max(0, fresh - empties);
            if (s.switches != want || static_cast<int>(s.evictions.size()) != want)
                bad.push_back(where + "switch count " + std::to_string(s.switches) + " but buffer requires " +
                              std::to_string(want));
            for (const auto &e : s.evictions) {
                if (e.pallet < 0 || e.pallet >= inst.pallet_count) {
                    bad.push_back(where + "eviction of pallet outside the buffer");
                    continue;
                }
                auto &slot = pallets[static_cast<std::size_t>(e.pallet)];
                if (slot != e.category) bad.push_back(where + "evicted pallet did not hold that category");
                if (std::any_of(job.parts.begin(), job.parts.end(),
                                [&](const PartCount &pc) { return pc.category == e.category; }))
                    bad.push_back(where + "evicted a category the job needs");
                slot.reset();
            }
            int placed = 0;
            for (const auto &pl : s.placements) {
                if (pl.pallet < 0 || pl.pallet >= inst.pallet_count) {
                    bad.push_back(where + "placement outside the buffer");
                    continue;
                }
                auto &slot = pallets[static_cast<std::size_t>(pl.pallet)];
                if (pl.new_category) {
                    if (slot) bad.push_back(where + "new category placed on an occupied pallet");
                    slot = pl.category;
                } else if (slot != pl.category) {
                    bad.push_back(where + "part placed on a pallet of another category");
                }
                placed += pl.count;
            }
            std::set<int> seen;
            for (const auto &pl : pallets)
                if (pl && !seen.insert(*pl).second) bad.push_back(where + "category on two pallets");
            if (placed != job.total_parts()) bad.push_back(where + "placed part count differs from the job's parts");
            const Time kit = static_cast<Time>(job.total_parts()) * inst.place_time +
                             static_cast<Time>(want) * inst.switch_time;
            expected = config.kitting_mode == KittingTimeMode::Replace ? kit : expected + kit;
        } else if (s.switches != 0 || !s.evictions.empty() || !s.placements.empty()) {
            bad.push_back(where + "kitting events on a regular operation");
        }
        if (s.end - s.start != expected)
            bad.push_back(where + "duration " + std::to_string(s.end - s.start) + " expected " + std::to_string(expected));
        switches += s.switches;
        makespan = std::max(makespan, s.end);
    }

    for (auto &[m, iv] : lanes) {
        std::sort(iv.begin(), iv.end());
        for (std::size_t i = 1; i < iv.size(); ++i)
            if (iv[i].first < iv[i - 1].second)
                bad.push_back("machine " + std::to_string(m) + ": overlapping operations");
    }
    if (switches != trace.total_switches) bad.push_back("total switches do not match the per-step sum");
    if (makespan != trace.makespan) bad.push_back("makespan does not match the latest end");
    return bad;
}

} // namespace fjsplb
