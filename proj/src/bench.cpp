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

#include "fjsplb/bench.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fjsplb/error.hpp"
#include "fjsplb/parallel.hpp"
#include "fjsplb/ppo.hpp"

namespace fjsplb {

using nlohmann::json;

std::vector<Instance> validation_set(const std::string &size, int count, std::uint64_t seed) {
    return make_instance_set(size, count, derive_seed(seed, 1));
}

std::vector<Instance> test_set(const std::string &size, int count, std::uint64_t seed) {
    return make_instance_set(size, count, derive_seed(seed, 2));
}

const char *to_string(Strategy s) { return s == Strategy::Greedy ? "greedy" : "sampling"; }

Strategy strategy_from_string(const std::string &s) {
    std::string low;
    for (char ch : s) low += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (low == "greedy") return Strategy::Greedy;
    if (low == "sampling") return Strategy::Sampling;
    throw ConfigError("unknown strategy '" + s + "' (expected greedy or sampling)");
}

const char *to_string(Reference r) { return r == Reference::Oracle ? "oracle" : "best-PDR"; }

Method Method::from_rule(Rule r) {
    Method m;
    m.kind = Kind::Rule;
    m.rule = r;
    m.name = to_string(r);
    return m;
}

Method Method::random() {
    Method m;
    m.kind = Kind::Random;
    m.name = "random";
    return m;
}

Method Method::from_policy(PolicyParams params, std::string name) {
    Method m;
    m.kind = Kind::Policy;
    m.policy = std::move(params);
    m.name = std::move(name);
    return m;
}

Method Method::parse(const std::string &spec) {
    if (spec.rfind("ckpt:", 0) == 0) {
        const std::string path = spec.substr(5);
        if (path.empty()) throw ConfigError("method ckpt: needs a checkpoint path");
        return from_policy(read_checkpoint_file(path), "policy");
    }
    std::string low;
    for (char ch : spec) low += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (low == "random") return random();
    return from_rule(rule_from_string(spec));
}

std::vector<double> reference_makespans(std::span<const Instance> instances, Reference ref, const EnvConfig &env) {
    std::vector<double> out(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) {
        const Environment e(instances[i], env);
        if (ref == Reference::Oracle) {
            const auto r = branch_and_bound(e);
            if (!r.optimal)
                throw Error("oracle reference: search on instance " + std::to_string(i) +
                            " hit its limits; no proven optimum to compare against");
            out[i] = static_cast<double>(r.optimal_makespan);
        } else {
            Time best = std::numeric_limits<Time>::max();
            for (Rule r : kAllRules) best = std::min(best, pdr_schedule(e, r).makespan);
            out[i] = static_cast<double>(best);
        }
    });
    return out;
}

namespace {

bool better(const EpisodeTrace &a, const EpisodeTrace &b) {
    return a.makespan < b.makespan || (a.makespan == b.makespan && a.total_switches < b.total_switches);
}

} // namespace

EpisodeTrace run_method(const Method &method, const Environment &env, const EvalOptions &options,
                        std::uint64_t instance_seed) {
    switch (method.kind) {
    case Method::Kind::Rule: return pdr_schedule(env, method.rule);
    case Method::Kind::Random:
        if (options.strategy == Strategy::Greedy) return random_policy(env, instance_seed);
        break;
    case Method::Kind::Policy:
        if (!method.policy) throw ContractError("policy method without parameters");
        if (options.strategy == Strategy::Greedy) return policy_episode(*method.policy, env, Decoding::Greedy);
        break;
    }
    if (options.samples < 1) throw ConfigError("sampling needs at least one sample");
    EpisodeTrace best;
    for (int k = 0; k < options.samples; ++k) {
        const std::uint64_t s = derive_seed(instance_seed, static_cast<std::uint64_t>(k));
        EpisodeTrace t;
        if (method.kind == Method::Kind::Random) {
            t = random_policy(env, s);
        } else {
            std::mt19937_64 rng(s);
            t = policy_episode(*method.policy, env, Decoding::Sample, &rng);
        }
        if (k == 0 || better(t, best)) best = std::move(t);
    }
    return best;
}

EvalReport evaluate(const Method &method, std::span<const Instance> instances, std::span<const double> reference,
                    const std::string &reference_name, const EvalOptions &options) {
    if (instances.empty()) throw ConfigError("evaluation needs at least one instance");
    if (!reference.empty() && reference.size() != instances.size())
        throw ContractError("reference makespans do not match the test set");
    EvalReport rep;
    rep.method = method.name;
    rep.strategy = to_string(options.strategy);
    rep.reference = reference.empty() ? "none" : reference_name;
    rep.rows.resize(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) {
        const Environment env(instances[i], options.env);
        const auto t0 = std::chrono::steady_clock::now();
        const EpisodeTrace t = run_method(method, env, options, derive_seed(options.seed, i));
        const auto t1 = std::chrono::steady_clock::now();
        InstanceResult &r = rep.rows[i];
        r.instance = static_cast<int>(i);
        r.makespan = t.makespan;
        r.switches = t.total_switches;
        r.seconds = std::chrono::duration<double>(t1 - t0).count();
        if (!reference.empty()) {
            r.reference = reference[i];
            r.gap = (static_cast<double>(t.makespan) - reference[i]) / reference[i];
        }
    });
    const double n = static_cast<double>(rep.rows.size());
    for (const auto &r : rep.rows) {
        rep.mean_makespan += static_cast<double>(r.makespan) / n;
        rep.mean_switches += static_cast<double>(r.switches) / n;
        rep.mean_gap += r.gap / n;
        rep.mean_seconds += r.seconds / n;
    }
    return rep;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

std::string summary_csv(std::span<const EvalReport> reports, bool with_time) {
    std::ostringstream os;
    os << "method,strategy,reference,mean_makespan,mean_switches,mean_gap" << (with_time ? ",mean_seconds" : "")
       << '\n';
    for (const auto &r : reports) {
        os << r.method << ',' << r.strategy << ',' << r.reference << ',' << fmt(r.mean_makespan) << ','
           << fmt(r.mean_switches) << ',' << fmt(r.mean_gap);
        if (with_time) os << ',' << fmt(r.mean_seconds);
        os << '\n';
    }
    return os.str();
}

std::string detail_csv(const EvalReport &report, bool with_time) {
    std::ostringstream os;
    os << "instance,makespan,switches,reference_" << report.reference << ",gap" << (with_time ? ",seconds" : "")
       << '\n';
    for (const auto &r : report.rows) {
        os << r.instance << ',' << r.makespan << ',' << r.switches << ',' << fmt(r.reference) << ',' << fmt(r.gap);
        if (with_time) os << ',' << fmt(r.seconds);
        os << '\n';
    }
    return os.str();
}

std::vector<AblationVariant> ablation_variants(double alpha) {
    std::vector<AblationVariant> out;
    for (Connectivity c : {Connectivity::Base, Connectivity::AllOps, Connectivity::SortOnly,
                           Connectivity::SortOnlyInverseWeight, Connectivity::SortOnlyWeighted}) {
        AblationVariant v;
        v.graph.mode = c;
        v.graph.alpha = alpha;
        v.name = to_string(c);
        out.push_back(std::move(v));
    }
    for (const char *subset : {"PS+SwEst", "PS+Type", "Type+SwEst"}) {
        AblationVariant v;
        v.graph.alpha = alpha;
        v.graph.features = FeatureMask::from_string(subset);
        v.name = subset;
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<AblationRow> ablation_matrix(std::span<const AblationVariant> variants,
                                         std::span<const Instance> instances, const EvalOptions &options) {
    const GraphConfig full{};
    std::vector<AblationRow> rows;
    bool have_reference = false;
    std::size_t ref_index = 0;
    for (const auto &v : variants) {
        AblationRow row;
        row.name = v.name;
        if (v.policy) {
            if (!(v.policy->config().graph == v.graph))
                throw ConfigError("ablation variant '" + v.name + "': checkpoint was trained with a different graph setup");
            const auto rep = evaluate(Method::from_policy(*v.policy, v.name), instances, {}, "", options);
            row.present = true;
            row.mean_makespan = rep.mean_makespan;
            row.mean_switches = rep.mean_switches;
            if (v.graph.mode == full.mode && v.graph.features == full.features && !have_reference) {
                ref_index = rows.size();
                have_reference = true;
            }
        }
        rows.push_back(row);
    }
    if (!have_reference) throw Error("ablation: the full configuration (SortOnly_Weighted, PS+Type+SwEst) is missing");
    const AblationRow ref = rows[ref_index];
    for (auto &r : rows) {
        if (!r.present) continue;
        r.makespan_gap = (r.mean_makespan - ref.mean_makespan) / ref.mean_makespan;
        r.switches_gap = ref.mean_switches > 0 ? (r.mean_switches - ref.mean_switches) / ref.mean_switches : 0.0;
    }
    return rows;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
    std::ostringstream os;
    os << "variant,status,mean_makespan,mean_switches,makespan_gap_vs_full,switches_gap_vs_full\n";
    for (const auto &r : rows) {
        if (!r.present) {
            os << r.name << ",absent,,,,\n";
            continue;
        }
        os << r.name << ",ok," << fmt(r.mean_makespan) << ',' << fmt(r.mean_switches) << ',' << fmt(r.makespan_gap)
           << ',' << fmt(r.switches_gap) << '\n';
    }
    return os.str();
}

GanttDoc export_gantt(const Instance &inst, const EpisodeTrace &trace) {
    if (static_cast<int>(trace.steps.size()) != inst.operation_count())
        throw ContractError("gantt: trace covers " + std::to_string(trace.steps.size()) + " of " +
                            std::to_string(inst.operation_count()) + " operations");
    if (trace.machine_count != inst.machine_count) throw ContractError("gantt: trace/instance machine count differ");
    GanttDoc doc;
    doc.machine_count = trace.machine_count;
    doc.makespan = trace.makespan;
    doc.switch_time = trace.switch_time;
    doc.machines.resize(static_cast<std::size_t>(trace.machine_count));

    const auto P = static_cast<std::size_t>(trace.pallet_count);
    std::vector<PalletLane> lanes(P);
    std::vector<bool> used(P, false);
    std::vector<std::optional<CategoryInterval>> open(P);
    std::vector<Time> cursor(P, 0);

    for (const auto &st : trace.steps) {
        doc.machines.at(static_cast<std::size_t>(st.action.machine)).push_back({st.action.op, st.job, st.op_index, st.start, st.end});
        std::vector<std::optional<Time>> freed(P);
        for (std::size_t k = 0; k < st.evictions.size(); ++k) {
            const auto p = static_cast<std::size_t>(st.evictions[k].pallet);
            const Time begin = std::max(st.start + static_cast<Time>(k) * trace.switch_time, cursor[p]);
            if (open[p]) {
                open[p]->end = begin;
                lanes[p].intervals.push_back(*open[p]);
                open[p].reset();
            }
            lanes[p].delays.push_back({begin, begin + trace.switch_time});
            cursor[p] = begin + trace.switch_time;
            freed[p] = cursor[p];
            used[p] = true;
        }
        for (const auto &pl : st.placements) {
            if (!pl.new_category) continue;
            const auto p = static_cast<std::size_t>(pl.pallet);
            const Time begin = freed[p] ? *freed[p] : std::max(st.start, cursor[p]);
            open[p] = CategoryInterval{pl.category, begin, begin};
            cursor[p] = begin;
            used[p] = true;
        }
    }
    for (std::size_t p = 0; p < P; ++p) {
        if (open[p]) {
            open[p]->end = std::max(trace.makespan, open[p]->start);
            lanes[p].intervals.push_back(*open[p]);
        }
        if (used[p]) {
            lanes[p].pallet = static_cast<int>(p);
            doc.pallets.push_back(std::move(lanes[p]));
        }
    }
    return doc;
}

std::string gantt_json(const GanttDoc &doc) {
    json j;
    j["format"] = "fjsplb-gantt";
    j["version"] = 1;
    j["machine_count"] = doc.machine_count;
    j["makespan"] = doc.makespan;
    j["switch_time"] = doc.switch_time;
    json machines = json::array();
    for (const auto &lane : doc.machines) {
        json l = json::array();
        for (const auto &o : lane) l.push_back({o.op, o.job, o.op_index, o.start, o.end});
        machines.push_back(std::move(l));
    }
    j["machines"] = std::move(machines);
    json pallets = json::array();
    for (const auto &lane : doc.pallets) {
        json iv = json::array(), dl = json::array();
        for (const auto &c : lane.intervals) iv.push_back({c.category, c.start, c.end});
        for (const auto &d : lane.delays) dl.push_back({d.start, d.end});
        pallets.push_back({{"pallet", lane.pallet}, {"intervals", std::move(iv)}, {"delays", std::move(dl)}});
    }
    j["pallets"] = std::move(pallets);
    return j.dump(1) + "\n";
}

GanttDoc parse_gantt(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format") != "fjsplb-gantt" || j.at("version") != 1)
            throw ParseError("gantt: unsupported format or version");
        GanttDoc doc;
        doc.machine_count = j.at("machine_count").get<int>();
        doc.makespan = j.at("makespan").get<Time>();
        doc.switch_time = j.at("switch_time").get<Time>();
        for (const auto &lane : j.at("machines")) {
            auto &out = doc.machines.emplace_back();
            for (const auto &o : lane)
                out.push_back({o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>(), o.at(3).get<Time>(),
                               o.at(4).get<Time>()});
        }
        for (const auto &lane : j.at("pallets")) {
            PalletLane pl;
            pl.pallet = lane.at("pallet").get<int>();
            for (const auto &c : lane.at("intervals"))
                pl.intervals.push_back({c.at(0).get<int>(), c.at(1).get<Time>(), c.at(2).get<Time>()});
            for (const auto &d : lane.at("delays")) pl.delays.push_back({d.at(0).get<Time>(), d.at(1).get<Time>()});
            doc.pallets.push_back(std::move(pl));
        }
        return doc;
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("gantt: parse error at byte ") + std::to_string(e.byte) + ": " + e.what());
    } catch (const json::exception &e) {
        throw ParseError(std::string("gantt: ") + e.what());
    }
}

std::string gantt_svg(const GanttDoc &doc) {
    constexpr double width = 1000, lane_h = 18, label_w = 60;
    const double scale = doc.makespan > 0 ? width / static_cast<double>(doc.makespan) : 1.0;
    const std::size_t lanes = doc.machines.size() + doc.pallets.size();
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + width + 10 << "\" height=\""
       << lane_h * static_cast<double>(lanes) + 10 << "\" font-family=\"monospace\" font-size=\"10\">\n";
    auto rect = [&](double y, Time s, Time e, const std::string &fill, const std::string &label) {
        os << "<rect x=\"" << label_w + static_cast<double>(s) * scale << "\" y=\"" << y + 1 << "\" width=\""
           << static_cast<double>(e - s) * scale << "\" height=\"" << lane_h - 2 << "\" fill=\"" << fill
           << "\" stroke=\"black\" stroke-width=\"0.5\"><title>" << label << "</title></rect>\n";
    };
    auto hue = [](int k) { return "hsl(" + std::to_string((k * 47) % 360) + ",60%,65%)"; };
    double y = 0;
    for (std::size_t m = 0; m < doc.machines.size(); ++m, y += lane_h) {
        os << "<text x=\"2\" y=\"" << y + 13 << "\">M" << m << "</text>\n";
        for (const auto &o : doc.machines[m])
            rect(y, o.start, o.end, hue(o.job), "J" + std::to_string(o.job) + "." + std::to_string(o.op_index));
    }
    for (const auto &lane : doc.pallets) {
        os << "<text x=\"2\" y=\"" << y + 13 << "\">P" << lane.pallet << "</text>\n";
        for (const auto &c : lane.intervals) rect(y, c.start, c.end, hue(c.category + 3), "cat " + std::to_string(c.category));
        for (const auto &d : lane.delays) rect(y, d.start, d.end, "white", "switch");
        y += lane_h;
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace fjsplb
