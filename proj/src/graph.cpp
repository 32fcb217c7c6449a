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

#include "fjsplb/graph.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fjsplb/error.hpp"

namespace fjsplb {

const char *to_string(Connectivity c) {
    switch (c) {
    case Connectivity::Base: return "Base";
    case Connectivity::AllOps: return "AllOps";
    case Connectivity::SortOnly: return "SortOnly";
    case Connectivity::SortOnlyWeighted: return "SortOnly_Weighted";
    case Connectivity::SortOnlyInverseWeight: return "SortOnly_InverseWeight";
    }
    return "?";
}

Connectivity connectivity_from_string(const std::string &s) {
    for (auto c : {Connectivity::Base, Connectivity::AllOps, Connectivity::SortOnly, Connectivity::SortOnlyWeighted,
                   Connectivity::SortOnlyInverseWeight})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown connectivity mode '" + s + "'");
}

std::string FeatureMask::name() const {
    std::string out;
    auto add = [&out](const char *s) {
        if (!out.empty()) out += "+";
        out += s;
    };
    if (ps) add("PS");
    if (type) add("Type");
    if (swest) add("SwEst");
    return out.empty() ? "None" : out;
}

FeatureMask FeatureMask::from_string(const std::string &s) {
    FeatureMask m{false, false, false};
    if (s == "None") return m;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto next = s.find('+', pos);
        auto tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        if (tok == "PS")
            m.ps = true;
        else if (tok == "Type")
            m.type = true;
        else if (tok == "SwEst")
            m.swest = true;
        else
            throw ConfigError("unknown feature group '" + tok + "' in '" + s + "'");
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return m;
}

double buffer_edge_weight(double sw_est, double alpha) { return 1.0 / (1.0 + std::exp(-alpha * sw_est)); }

HeteroGraph build_graph(const Environment &env, const ScheduleState &s, const GraphConfig &config) {
    const Problem &p = env.problem();
    const Instance &inst = p.instance();
    const int C = inst.category_count;
    const int N = p.op_count();
    const int M = p.machine_count();
    const double scale = p.time_scale();

    HeteroGraph g;
    g.op_count = N;
    g.machine_count = M;
    g.category_count = C;
    const int od = g.op_dim();
    g.op_features.assign(static_cast<std::size_t>(N * od), 0.0);
    g.machine_features.assign(static_cast<std::size_t>(M * machine_feature::dim), 0.0);
    g.buffer_features.assign(static_cast<std::size_t>(g.buffer_dim()), 0.0);
    g.pred.assign(static_cast<std::size_t>(N), -1);
    g.succ.assign(static_cast<std::size_t>(N), -1);
    g.buffer_weight.assign(static_cast<std::size_t>(N), 0.0);

    std::vector<int> machine_degree(static_cast<std::size_t>(M), 0);
    g.op_machine_ptr.push_back(0);

    for (int j = 0; j < p.job_count(); ++j) {
        const int b = p.job_begin(j), e = p.job_end(j);
        const auto &parts = p.parts(j);
        const int sw = estimate_switches(s.buffer, parts);
        int unscheduled = 0;
        double work = 0;
        for (int id = b; id < e; ++id) {
            if (!s.ops[static_cast<std::size_t>(id)].scheduled) {
                ++unscheduled;
                work += p.op(id).mean_time;
            }
        }
        double chain = 0;
        for (int id = b; id < e; ++id) {
            const CompiledOp &op = p.op(id);
            const auto &rec = s.ops[static_cast<std::size_t>(id)];
            double *f = &g.op_features[static_cast<std::size_t>(id * od)];
            chain = rec.scheduled ? static_cast<double>(rec.end) : chain + op.mean_time;
            f[op_feature::scheduled] = rec.scheduled ? 1.0 : 0.0;
            f[op_feature::machine_options] = static_cast<double>(op.compatible.size());
            f[op_feature::mean_time] = op.mean_time / scale;
            f[op_feature::ops_remaining] = unscheduled;
            f[op_feature::completion_estimate] = chain / scale;
            f[op_feature::work_remaining] = work / scale;
            if (config.features.type)
                for (const auto &part : parts) f[op_feature::type_begin + part.category] = 1.0;
            if (config.features.ps && op.part_sorting) f[op_feature::ps(C)] = 1.0;
            const bool pending_kit = op.part_sorting && !rec.scheduled;
            if (config.features.swest && pending_kit) f[op_feature::swest(C)] = sw;

            if (id > b) g.pred[static_cast<std::size_t>(id)] = id - 1;
            if (id + 1 < e) g.succ[static_cast<std::size_t>(id)] = id + 1;

            if (!rec.scheduled) {
                for (const auto &m : op.compatible) {
                    g.op_machine_idx.push_back(m.machine);
                    ++machine_degree[static_cast<std::size_t>(m.machine)];
                }
                double w = 0;
                bool edge = false;
                switch (config.mode) {
                case Connectivity::Base: break;
                case Connectivity::AllOps: edge = true, w = 1.0; break;
                case Connectivity::SortOnly: edge = op.part_sorting, w = 1.0; break;
                case Connectivity::SortOnlyWeighted:
                    edge = op.part_sorting, w = buffer_edge_weight(sw, config.alpha);
                    break;
                case Connectivity::SortOnlyInverseWeight:
                    edge = op.part_sorting, w = buffer_edge_weight(sw, -config.alpha);
                    break;
                }
                if (edge) {
                    g.buffer_edges.push_back({id, w});
                    g.buffer_weight[static_cast<std::size_t>(id)] = w;
                }
            }
            g.op_machine_ptr.push_back(static_cast<int>(g.op_machine_idx.size()));
        }
    }

    // Reverse CSR: machine -> unscheduled compatible ops, ascending op id.
    g.machine_op_ptr.assign(static_cast<std::size_t>(M + 1), 0);
    for (int m = 0; m < M; ++m)
        g.machine_op_ptr[static_cast<std::size_t>(m + 1)] =
            g.machine_op_ptr[static_cast<std::size_t>(m)] + machine_degree[static_cast<std::size_t>(m)];
    g.machine_op_idx.assign(g.op_machine_idx.size(), 0);
    std::vector<int> fill(g.machine_op_ptr.begin(), g.machine_op_ptr.end() - 1);
    for (int id = 0; id < N; ++id)
        for (int k = g.op_machine_ptr[static_cast<std::size_t>(id)]; k < g.op_machine_ptr[static_cast<std::size_t>(id + 1)]; ++k)
            g.machine_op_idx[static_cast<std::size_t>(fill[static_cast<std::size_t>(g.op_machine_idx[static_cast<std::size_t>(k)])]++)] = id;

    // Machines.
    std::vector<double> busy(static_cast<std::size_t>(M), 0.0);
    for (const auto &rec : s.ops) {
        if (!rec.scheduled) continue;
        const Time lo = std::min(rec.start, s.now), hi = std::min(rec.end, s.now);
        busy[static_cast<std::size_t>(rec.machine)] += static_cast<double>(hi - lo);
    }
    std::vector<int> candidates(static_cast<std::size_t>(M), 0);
    for (int j = 0; j < p.job_count(); ++j) {
        const int id = p.job_begin(j) + s.next_op[static_cast<std::size_t>(j)];
        if (id >= p.job_end(j)) continue;
        for (const auto &m : p.op(id).compatible) ++candidates[static_cast<std::size_t>(m.machine)];
    }
    const double elapsed = std::max<double>(static_cast<double>(s.now), 1.0);
    for (int m = 0; m < M; ++m) {
        double *f = &g.machine_features[static_cast<std::size_t>(m * machine_feature::dim)];
        const auto mu = static_cast<std::size_t>(m);
        f[machine_feature::free_in] = static_cast<double>(std::max<Time>(0, s.machine_free_at[mu] - s.now)) / scale;
        f[machine_feature::candidates] = candidates[mu];
        f[machine_feature::utilization] = std::clamp(busy[mu] / elapsed, 0.0, 1.0);
        f[machine_feature::part_sorting] = inst.is_part_sorting_machine(m) ? 1.0 : 0.0;
    }

    // Buffer.
    int occupied = 0;
    for (const auto &pal : s.buffer.pallets) {
        if (pal.empty()) continue;
        ++occupied;
        g.buffer_features[static_cast<std::size_t>(*pal.category)] = 1.0;
    }
    g.buffer_features[static_cast<std::size_t>(C)] = static_cast<double>(occupied) / s.buffer.pallet_count();
    return g;
}

std::string dump_graph(const HeteroGraph &g) {
    using nlohmann::json;
    json doc;
    doc["format"] = "fjsplb-graph";
    doc["version"] = 1;
    json ops = json::array();
    for (int i = 0; i < g.op_count; ++i) {
        json o;
        o["id"] = i;
        o["features"] = std::vector<double>(g.op_features.begin() + i * g.op_dim(),
                                            g.op_features.begin() + (i + 1) * g.op_dim());
        o["pred"] = g.pred[static_cast<std::size_t>(i)];
        o["succ"] = g.succ[static_cast<std::size_t>(i)];
        o["machines"] = std::vector<int>(g.op_machine_idx.begin() + g.op_machine_ptr[static_cast<std::size_t>(i)],
                                         g.op_machine_idx.begin() + g.op_machine_ptr[static_cast<std::size_t>(i + 1)]);
        ops.push_back(o);
    }
    doc["operations"] = ops;
    json ms = json::array();
    for (int m = 0; m < g.machine_count; ++m)
        ms.push_back(std::vector<double>(g.machine_features.begin() + m * machine_feature::dim,
                                         g.machine_features.begin() + (m + 1) * machine_feature::dim));
    doc["machines"] = ms;
    doc["buffer"] = g.buffer_features;
    json be = json::array();
    for (const auto &e : g.buffer_edges) be.push_back({{"op", e.op}, {"weight", e.weight}});
    doc["buffer_edges"] = be;
    return doc.dump(1) + "\n";
}

} // namespace fjsplb
