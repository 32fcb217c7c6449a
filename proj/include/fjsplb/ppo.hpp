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
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fjsplb/env.hpp"
#include "fjsplb/graph.hpp"
#include "fjsplb/instance.hpp"
#include "fjsplb/net.hpp"

namespace fjsplb {

struct PPOConfig {
    double lr = 2e-4;
    double gamma = 1.0;
    int k_epochs = 3;
    double a_coeff = 1.0;
    double vf_coeff = 0.5;
    double entropy_coeff = 0.05;
    double kl_coeff = 0.05; // only used when an anchor policy is given
    int batch_size = 20;    // instances rolled out per iteration
    int minibatch = 512;    // transitions per gradient step
    int update_interval = 5;   // iterations of rollouts collected per update
    int validate_interval = 10;
    int resample_interval = 20;
    int max_iterations = 1000;
    double clip_eps = 0.2;
    double gae_smoothing = 0.98; // 1.0 gives Monte-Carlo advantages
    double lambda = 1.0;         // switch weight in the reward
    double reward_scale = 0.01;  // applied to rewards before advantage estimation
    double max_grad_norm = 0;    // 0 disables global-norm clipping
    int validation_size = 100;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

struct Transition {
    HeteroGraph graph;
    std::vector<Action> pairs;
    std::size_t action = 0;
    double log_prob = 0;
    double value = 0;
    double reward = 0;
    bool done = false;
};

struct Trajectory {
    std::vector<Transition> steps;
    EpisodeTrace trace;
};

enum class Decoding { Greedy, Sample };

/// Runs one episode with the policy. Sampling draws from `rng`; greedy takes
/// the most probable pair (lowest index on ties). Records transitions when
/// `out` is given.
EpisodeTrace policy_episode(const PolicyParams &params, const Environment &env, Decoding decoding,
                            std::mt19937_64 *rng = nullptr, Trajectory *out = nullptr);

/// One sampled episode per environment, in parallel; environment i uses the
/// stream derive_seed(seed, i).
[[nodiscard]] std::vector<Trajectory> collect_rollouts(const PolicyParams &params, std::span<const Environment> envs,
                                                       std::uint64_t seed);

struct Advantage {
    double advantage = 0;
    double ret = 0;
};

/// Generalized advantage estimation over a complete trajectory, on rewards
/// multiplied by `reward_scale`.
[[nodiscard]] std::vector<Advantage> compute_advantages(const Trajectory &traj, double gamma, double smoothing,
                                                        double reward_scale = 1.0);

struct SampleLoss {
    double total = 0;
    double surrogate = 0; // -min(r A, clip(r) A)
    double value = 0;     // (V - R)^2
    double entropy = 0;
    double kl = 0; // KL(pi || anchor), 0 without anchor
    double ratio = 1;
    std::vector<double> dlogits; // d(total)/d(logits)
    double dvalue = 0;           // d(total)/d(value)
};

/// PPO loss of one transition, weighted by `weight`:
///   a_coeff * surrogate + vf_coeff * value - entropy_coeff * entropy + kl_coeff * kl
[[nodiscard]] SampleLoss ppo_sample_loss(const PolicyOutput &out, std::size_t action, double old_log_prob,
                                         double advantage, double ret, const PPOConfig &config,
                                         std::span<const double> anchor_probs = {}, double weight = 1.0);

class Adam {
public:
    explicit Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::span<double> params, std::span<const double> grad);
    [[nodiscard]] std::int64_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::int64_t t_ = 0;
};

struct UpdateStats {
    double policy_loss = 0;
    double value_loss = 0;
    double entropy = 0;
    double kl = 0; // mean KL to the anchor over the last epoch
    double clip_fraction = 0;
    int gradient_steps = 0;
};

struct UpdateSample {
    const Transition *transition = nullptr;
    double advantage = 0;
    double ret = 0;
    std::vector<double> anchor_probs; // empty without anchor
};

/// Shifts and scales the advantages to zero mean and unit standard deviation
/// (no-op for a single sample).
void normalize_advantages(std::vector<UpdateSample> &batch);

/// k_epochs passes over shuffled minibatches of `batch`. Advantages are
/// normalized over the batch first. Throws NumericError on a non-finite loss.
UpdateStats ppo_update(PolicyParams &params, Adam &optimizer, std::vector<UpdateSample> batch,
                       const PPOConfig &config, std::uint64_t shuffle_seed);

// Produces `count` training instances for a given seed.
using InstanceSource = std::function<std::vector<Instance>(int count, std::uint64_t seed)>;

[[nodiscard]] InstanceSource generated_instances(const std::string &size, const GeneratorConfig *base = nullptr);
[[nodiscard]] InstanceSource fixed_instances(std::vector<Instance> pool);

struct LogRow {
    int iteration = 0;
    double train_makespan = 0;
    double train_switches = 0;
    double policy_loss = 0;
    double value_loss = 0;
    double entropy = 0;
    double kl = 0;
    std::optional<double> val_makespan;
    std::optional<double> val_switches;
    double best_val_makespan = 0;
};

struct TrainResult {
    PolicyParams best;
    PolicyParams last;
    std::vector<LogRow> log;
    double best_validation = 0;
};

struct TrainSetup {
    PPOConfig ppo;
    NetConfig net;
    EnvConfig env; // lambda is taken from ppo.lambda
    InstanceSource train_source;
    std::vector<Instance> validation;
    std::optional<PolicyParams> init;   // start from these weights (fine-tuning)
    std::optional<PolicyParams> anchor; // KL anchor (fine-tuning)
    std::string out_dir;                // checkpoints + log; empty = keep in memory
};

/// PPO training loop: rollouts every iteration, an update every
/// update_interval iterations, greedy validation every validate_interval
/// (keeping the best checkpoint) and fresh instances every resample_interval.
[[nodiscard]] TrainResult train(const TrainSetup &setup);

[[nodiscard]] std::string format_log(const std::vector<LogRow> &rows);

// Fixed seed streams for validation/test sets of a given training seed.
[[nodiscard]] std::vector<Instance> make_instance_set(const std::string &size, int count, std::uint64_t seed);

} // namespace fjsplb
