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
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fjsplb/graph.hpp"

namespace fjsplb {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { Tanh, Relu };

struct NetConfig {
    int embed_dim = 8;
    int hidden_dim = 128;
    int gnn_layers = 2;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
    int category_count = 10; // fixes the operation / buffer input widths
    GraphConfig graph;       // how states are turned into graphs for this policy

    void validate() const; // throws ConfigError
    bool operator==(const NetConfig &) const = default;
};

/// A dense layer's slice of the flat parameter vector: W (out x in,
/// row-major) followed by b (out).
struct DenseLayer {
    std::string name;
    std::size_t offset = 0;
    int out = 0;
    int in = 0;

    [[nodiscard]] std::size_t weight_count() const { return static_cast<std::size_t>(out) * static_cast<std::size_t>(in); }
    [[nodiscard]] std::size_t size() const { return weight_count() + static_cast<std::size_t>(out); }
};

/// All learnable weights, stored contiguously so optimizers and gradient
/// checks can treat them as one vector.
class PolicyParams {
public:
    explicit PolicyParams(NetConfig config); // uniform(+-1/sqrt(fan_in)) init from config.seed

    [[nodiscard]] const NetConfig &config() const { return config_; }
    [[nodiscard]] std::span<double> flat() { return values_; }
    [[nodiscard]] std::span<const double> flat() const { return values_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] const std::vector<DenseLayer> &layers() const { return layers_; }

    // Layer handles.
    [[nodiscard]] const DenseLayer &op_encoder() const { return layers_[0]; }
    [[nodiscard]] const DenseLayer &machine_encoder() const { return layers_[1]; }
    [[nodiscard]] const DenseLayer &buffer_encoder() const { return layers_[2]; }
    [[nodiscard]] const DenseLayer &machine_layer(int l) const { return layers_[3 + 2 * static_cast<std::size_t>(l)]; }
    [[nodiscard]] const DenseLayer &op_layer(int l) const { return layers_[4 + 2 * static_cast<std::size_t>(l)]; }
    [[nodiscard]] const DenseLayer &actor_hidden() const { return layers_[layers_.size() - 4]; }
    [[nodiscard]] const DenseLayer &actor_out() const { return layers_[layers_.size() - 3]; }
    [[nodiscard]] const DenseLayer &critic_hidden() const { return layers_[layers_.size() - 2]; }
    [[nodiscard]] const DenseLayer &critic_out() const { return layers_[layers_.size() - 1]; }

    bool operator==(const PolicyParams &o) const { return config_ == o.config_ && values_ == o.values_; }

private:
    NetConfig config_;
    std::vector<DenseLayer> layers_;
    std::vector<double> values_;
};

/// Per-node embeddings; index 0 holds the encoded input features, index l the
/// output of message-passing layer l.
struct Embeddings {
    std::vector<Matrix> machine;
    std::vector<Matrix> op;
    Matrix delta;          // operation-buffer messages (op_count x embed_dim)
    Vector buffer;         // encoded buffer node
    Vector pooled;         // [mean op | mean machine] of the last layer
    // Concatenated layer inputs, kept for the backward pass.
    std::vector<Matrix> machine_inputs;
    std::vector<Matrix> op_inputs;
    std::vector<int> op_degree;
    std::vector<int> machine_degree;

    [[nodiscard]] const Matrix &final_machine() const { return machine.back(); }
    [[nodiscard]] const Matrix &final_op() const { return op.back(); }
};

struct PolicyOutput {
    std::vector<double> logits;
    std::vector<double> probs;
    double value = 0;
};

/// Everything the backward pass needs from one forward pass.
struct ForwardCache {
    const HeteroGraph *graph = nullptr;
    std::vector<Action> pairs;
    Embeddings emb;
    Matrix actor_input;  // pairs x 4E
    Matrix actor_hidden; // pairs x H (post-activation)
    Vector critic_hidden;
};

/// delta_i = w_i * enc(buffer) for ops with a buffer edge, zero otherwise.
[[nodiscard]] Matrix operation_buffer_embedding(const PolicyParams &params, const HeteroGraph &graph);

/// Encoders plus K rounds of mean-aggregation message passing. Each round
/// updates machines from their unscheduled compatible ops, then ops from
/// [self | predecessor | successor | mean machine | delta].
/// `delta_override` replaces the operation-buffer messages when given.
[[nodiscard]] Embeddings embed(const PolicyParams &params, const HeteroGraph &graph,
                               const Matrix *delta_override = nullptr);

[[nodiscard]] Matrix machine_embedding(const PolicyParams &params, const HeteroGraph &graph);
[[nodiscard]] Matrix operation_embedding(const PolicyParams &params, const HeteroGraph &graph, const Matrix &delta);

/// Scores the eligible (op, machine) pairs and the state value.
[[nodiscard]] PolicyOutput actor_critic(const PolicyParams &params, const Embeddings &emb,
                                        std::span<const Action> pairs, ForwardCache *cache = nullptr);

/// Full forward pass. Throws ContractError on an empty pair list or a graph
/// that does not match the network's input widths.
[[nodiscard]] PolicyOutput evaluate_policy(const PolicyParams &params, const HeteroGraph &graph,
                                           std::span<const Action> pairs, ForwardCache *cache = nullptr);

/// Accumulates d(loss)/d(params) into `grad` given the loss gradients with
/// respect to the logits and the value of a cached forward pass.
void backward(const PolicyParams &params, const ForwardCache &cache, std::span<const double> dlogits, double dvalue,
              std::span<double> grad);

/// Throws NumericError naming the first layer with a non-finite entry.
void check_finite_gradient(const PolicyParams &params, std::span<const double> grad);

[[nodiscard]] std::vector<double> softmax(std::span<const double> logits);
[[nodiscard]] std::size_t greedy_index(std::span<const double> probs);
[[nodiscard]] std::size_t sample_index(std::span<const double> probs, std::mt19937_64 &rng);

// Versioned JSON checkpoint; doubles round-trip exactly.
[[nodiscard]] std::string save_checkpoint(const PolicyParams &params);
[[nodiscard]] PolicyParams load_checkpoint(std::string_view text);
void write_checkpoint_file(const std::string &path, const PolicyParams &params);
[[nodiscard]] PolicyParams read_checkpoint_file(const std::string &path);

} // namespace fjsplb
