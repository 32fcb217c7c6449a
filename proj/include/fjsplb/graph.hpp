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

#include <string>
#include <vector>

#include "fjsplb/env.hpp"

namespace fjsplb {

/// How the buffer node connects to operation nodes.
enum class Connectivity {
    Base,                  // no buffer edges
    AllOps,                // every unscheduled op, weight 1
    SortOnly,              // unscheduled part-sorting ops, weight 1
    SortOnlyWeighted,      // part-sorting ops, weight sigmoid(alpha * SwEst)
    SortOnlyInverseWeight, // part-sorting ops, weight sigmoid(-alpha * SwEst)
};

[[nodiscard]] const char *to_string(Connectivity c);
[[nodiscard]] Connectivity connectivity_from_string(const std::string &s);

// Operation feature groups that can be switched off (zeroed) for ablations.
struct FeatureMask {
    bool type = true;
    bool ps = true;
    bool swest = true;

    [[nodiscard]] std::string name() const; // e.g. "PS+Type+SwEst"
    static FeatureMask from_string(const std::string &s);
    bool operator==(const FeatureMask &) const = default;
};

struct GraphConfig {
    Connectivity mode = Connectivity::SortOnlyWeighted;
    double alpha = 0.3;
    FeatureMask features;

    bool operator==(const GraphConfig &) const = default;
};

// Operation feature layout: 6 scheduling features, C type bits, PS, SwEst.
namespace op_feature {
inline constexpr int scheduled = 0;
inline constexpr int machine_options = 1;
inline constexpr int mean_time = 2;
inline constexpr int ops_remaining = 3;
inline constexpr int completion_estimate = 4;
inline constexpr int work_remaining = 5;
inline constexpr int type_begin = 6;
inline int ps(int categories) { return type_begin + categories; }
inline int swest(int categories) { return type_begin + categories + 1; }
inline int dim(int categories) { return type_begin + categories + 2; }
} // namespace op_feature

namespace machine_feature {
inline constexpr int free_in = 0; // time until the machine is free, scaled
inline constexpr int candidates = 1;
inline constexpr int utilization = 2;
inline constexpr int part_sorting = 3;
inline constexpr int dim = 4;
} // namespace machine_feature

inline int buffer_feature_dim(int categories) { return categories + 1; }

struct BufferEdge {
    int op = 0;
    double weight = 0;
    bool operator==(const BufferEdge &) const = default;
};

/// Heterogeneous state graph: operation nodes, machine nodes and one buffer
/// node. Feature matrices are row-major.
struct HeteroGraph {
    int op_count = 0;
    int machine_count = 0;
    int category_count = 0;
    std::vector<double> op_features;
    std::vector<double> machine_features;
    std::vector<double> buffer_features;
    std::vector<int> pred; // -1 for the first op of a job
    std::vector<int> succ; // -1 for the last op of a job
    // op <-> machine compatibility for unscheduled ops, in CSR form both ways.
    std::vector<int> op_machine_ptr, op_machine_idx;
    std::vector<int> machine_op_ptr, machine_op_idx;
    std::vector<BufferEdge> buffer_edges;
    std::vector<double> buffer_weight; // per op; 0 without an edge

    [[nodiscard]] int op_dim() const { return op_feature::dim(category_count); }
    [[nodiscard]] int buffer_dim() const { return buffer_feature_dim(category_count); }
    [[nodiscard]] double op_feature_at(int op, int f) const {
        return op_features[static_cast<std::size_t>(op * op_dim() + f)];
    }
    [[nodiscard]] double machine_feature_at(int m, int f) const {
        return machine_features[static_cast<std::size_t>(m * machine_feature::dim + f)];
    }
    [[nodiscard]] int op_machine_edge_count() const { return static_cast<int>(op_machine_idx.size()); }
    bool operator==(const HeteroGraph &) const = default;
};

/// Edge weight of a buffer -> part-sorting op edge: sigmoid(alpha * sw_est).
[[nodiscard]] double buffer_edge_weight(double sw_est, double alpha);

[[nodiscard]] HeteroGraph build_graph(const Environment &env, const ScheduleState &state,
                                      const GraphConfig &config = {});

// Debug dump (nodes, features, weighted edges) as JSON.
[[nodiscard]] std::string dump_graph(const HeteroGraph &graph);

} // namespace fjsplb
