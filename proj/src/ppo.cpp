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

#include "fjsplb/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "fjsplb/error.hpp"
#include "fjsplb/parallel.hpp"

namespace fjsplb {

void PPOConfig::validate() const {
    auto positive = [](double v, const char *name) {
        if (!(v > 0)) throw ConfigError(std::string("ppo config: ") + name + " must be positive");
    };
    positive(lr, "lr");
    if (!(gamma > 0 && gamma <= 1)) throw ConfigError("ppo config: gamma must lie in (0, 1]");
    if (k_epochs < 1 || batch_size < 1 || minibatch < 1 || update_interval < 1 || validate_interval < 1 ||
        resample_interval < 1)
        throw ConfigError("ppo config: epoch/batch/interval counts must be >= 1");
    if (max_iterations < 0) throw ConfigError("ppo config: max_iterations must be >= 0");
    positive(clip_eps, "clip_eps");
    if (!(gae_smoothing >= 0 && gae_smoothing <= 1)) throw ConfigError("ppo config: gae_smoothing must lie in [0, 1]");
    positive(reward_scale, "reward_scale");
    if (a_coeff < 0 || vf_coeff < 0 || entropy_coeff < 0 || kl_coeff < 0 || lambda < 0 || max_grad_norm < 0)
        throw ConfigError("ppo config: coefficients must be non-negative");
    if (validation_size < 1) throw ConfigError("ppo config: validation_size must be >= 1");
}

namespace {

double log_prob_of(const PolicyOutput &out, std::size_t k) {
    const double mx = *std::max_element(out.logits.begin(), out.logits.end());
    double z = 0;
    for (double l : out.logits) z += std::exp(l - mx);
    return out.logits[k] - mx - std::log(z);
}

} // namespace

EpisodeTrace policy_episode(const PolicyParams &params, const Environment &env, Decoding decoding,
                            std::mt19937_64 *rng, Trajectory *out) {
    if (decoding == Decoding::Sample && !rng) throw ContractError("sampling needs a random stream");
    const GraphConfig &gc = params.config().graph;
    return run_episode(env, [&](const ScheduleState &s, std::span<const Action> actions) {
        HeteroGraph g = build_graph(env, s, gc);
        const PolicyOutput po = evaluate_policy(params, g, actions);
        const std::size_t k = decoding == Decoding::Greedy ? greedy_index(po.probs) : sample_index(po.probs, *rng);
        if (out) {
            Transition t;
            t.graph = std::move(g);
            t.pairs.assign(actions.begin(), actions.end());
            t.action = k;
            t.log_prob = log_prob_of(po, k);
            t.value = po.value;
            out->steps.push_back(std::move(t));
        }
        return k;
    });
}

std::vector<Trajectory> collect_rollouts(const PolicyParams &params, std::span<const Environment> envs,
                                         std::uint64_t seed) {
    std::vector<Trajectory> out(envs.size());
    parallel_for(envs.size(), [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        Trajectory &t = out[i];
        try {
            t.trace = policy_episode(params, envs[i], Decoding::Sample, &rng, &t);
        } catch (const Error &e) {
            throw Error("rollout on instance " + std::to_string(i) + ": " + e.what());
        }
        // Rewards are re-derived from the recorded steps to keep one source.
        const Environment &env = envs[i];
        ScheduleState s = env.reset();
        for (auto &step : t.steps) {
            auto r = env.step(s, step.pairs[step.action]);
            step.reward = r.reward;
            step.done = r.done;
            s = std::move(r.next);
        }
    });
    return out;
}

std::vector<Advantage> compute_advantages(const Trajectory &traj, double gamma, double smoothing,
                                          double reward_scale) {
    const std::size_t n = traj.steps.size();
    std::vector<Advantage> out(n);
    double running = 0;
    for (std::size_t k = n; k-- > 0;) {
        const auto &t = traj.steps[k];
        const double next_value = (t.done || k + 1 == n) ? 0.0 : traj.steps[k + 1].value;
        const double td = reward_scale * t.reward + gamma * next_value - t.value;
        running = td + gamma * smoothing * (t.done ? 0.0 : running);
        out[k].advantage = running;
        out[k].ret = running + t.value;
    }
    return out;
}

SampleLoss ppo_sample_loss(const PolicyOutput &out, std::size_t action, double old_log_prob, double advantage,
                           double ret, const PPOConfig &cfg, std::span<const double> anchor_probs, double weight) {
    const std::size_t n = out.probs.size();
    if (action >= n) throw ContractError("action index outside the eligible pairs");
    if (!anchor_probs.empty() && anchor_probs.size() != n) throw ContractError("anchor distribution size mismatch");
    const auto &p = out.probs;
    SampleLoss L;
    L.dlogits.assign(n, 0.0);

    const double logp = log_prob_of(out, action);
    L.ratio = std::exp(logp - old_log_prob);
    const double clipped = std::clamp(L.ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    const double unclipped_term = L.ratio * advantage, clipped_term = clipped * advantage;
    L.surrogate = -std::min(unclipped_term, clipped_term);
    // d(-r A)/dlogit_j = -A r (1[j=a] - p_j), active only on the unclipped branch.
    if (unclipped_term <= clipped_term) {
        const double c = -cfg.a_coeff * advantage * L.ratio * weight;
        for (std::size_t j = 0; j < n; ++j) L.dlogits[j] += c * ((j == action ? 1.0 : 0.0) - p[j]);
    }

    L.value = (out.value - ret) * (out.value - ret);
    L.dvalue = cfg.vf_coeff * 2.0 * (out.value - ret) * weight;

    std::vector<double> logp_all(n);
    {
        const double mx = *std::max_element(out.logits.begin(), out.logits.end());
        double z = 0;
        for (double l : out.logits) z += std::exp(l - mx);
        const double lse = mx + std::log(z);
        for (std::size_t j = 0; j < n; ++j) logp_all[j] = out.logits[j] - lse;
    }
    for (std::size_t j = 0; j < n; ++j) L.entropy -= p[j] * logp_all[j];
    // dH/dz_j = -p_j (log p_j + H); the loss carries -entropy_coeff * H.
    for (std::size_t j = 0; j < n; ++j)
        L.dlogits[j] += cfg.entropy_coeff * p[j] * (logp_all[j] + L.entropy) * weight;

    if (!anchor_probs.empty()) {
        std::vector<double> diff(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double q = std::max(anchor_probs[j], 1e-300);
            diff[j] = logp_all[j] - std::log(q);
            L.kl += p[j] * diff[j];
        }
        // dKL/dz_j = p_j (diff_j - KL).
        for (std::size_t j = 0; j < n; ++j) L.dlogits[j] += cfg.kl_coeff * p[j] * (diff[j] - L.kl) * weight;
    }

    L.total = weight * (cfg.a_coeff * L.surrogate + cfg.vf_coeff * L.value - cfg.entropy_coeff * L.entropy +
                        (anchor_probs.empty() ? 0.0 : cfg.kl_coeff * L.kl));
    return L;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ContractError("Adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

void normalize_advantages(std::vector<UpdateSample> &batch) {
    if (batch.size() < 2) return;
    double mean = 0, sq = 0;
    for (const auto &s : batch) mean += s.advantage;
    mean /= static_cast<double>(batch.size());
    for (const auto &s : batch) sq += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(sq / static_cast<double>(batch.size()));
    for (auto &s : batch) s.advantage = (s.advantage - mean) / (sd + 1e-8);
}

UpdateStats ppo_update(PolicyParams &params, Adam &optimizer, std::vector<UpdateSample> batch, const PPOConfig &cfg,
                       std::uint64_t shuffle_seed) {
    if (batch.empty()) throw ContractError("ppo_update needs a non-empty batch");
    normalize_advantages(batch);

    constexpr std::size_t kChunks = 8;
    UpdateStats stats;
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(params.size());
    std::vector<std::vector<double>> chunk_grad(kChunks, std::vector<double>(params.size()));

    for (int epoch = 0; epoch < cfg.k_epochs; ++epoch) {
        std::mt19937_64 rng(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        double pol = 0, val = 0, ent = 0, kl = 0, clipped = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.minibatch)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.minibatch));
            const double weight = 1.0 / static_cast<double>(end - begin);
            std::vector<SampleLoss> losses(end - begin);
            parallel_for(kChunks, [&](std::size_t c) {
                auto &g = chunk_grad[c];
                std::fill(g.begin(), g.end(), 0.0);
                for (std::size_t k = begin + c; k < end; k += kChunks) {
                    const UpdateSample &s = batch[order[k]];
                    ForwardCache cache;
                    const Transition &t = *s.transition;
                    const PolicyOutput out = evaluate_policy(params, t.graph, t.pairs, &cache);
                    losses[k - begin] =
                        ppo_sample_loss(out, t.action, t.log_prob, s.advantage, s.ret, cfg, s.anchor_probs, weight);
                    backward(params, cache, losses[k - begin].dlogits, losses[k - begin].dvalue, g);
                }
            });
            std::fill(grad.begin(), grad.end(), 0.0);
            for (const auto &g : chunk_grad)
                for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
            for (const auto &l : losses) {
                if (!std::isfinite(l.total))
                    throw NumericError("non-finite PPO loss (surrogate " + std::to_string(l.surrogate) + ", value " +
                                       std::to_string(l.value) + ", entropy " + std::to_string(l.entropy) + ")");
                pol += l.surrogate;
                val += l.value;
                ent += l.entropy;
                kl += l.kl;
                clipped += std::abs(l.ratio - 1.0) > cfg.clip_eps ? 1.0 : 0.0;
            }
            check_finite_gradient(params, grad);
            if (cfg.max_grad_norm > 0) {
                double norm = 0;
                for (double v : grad) norm += v * v;
                norm = std::sqrt(norm);
                if (norm > cfg.max_grad_norm)
                    for (double &v : grad) v *= cfg.max_grad_norm / norm;
            }
            optimizer.step(params.flat(), grad);
            ++stats.gradient_steps;
        }
        const double n = static_cast<double>(batch.size());
        stats.policy_loss = pol / n;
        stats.value_loss = val / n;
        stats.entropy = ent / n;
        stats.kl = kl / n;
        stats.clip_fraction = clipped / n;
    }
    return stats;
}

InstanceSource generated_instances(const std::string &size, const GeneratorConfig *base) {
    GeneratorConfig tmpl = base ? *base : GeneratorConfig::for_size(size, 0);
    return [tmpl](int count, std::uint64_t seed) {
        std::vector<Instance> out;
        for (int i = 0; i < count; ++i) {
            GeneratorConfig c = tmpl;
            c.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
            out.push_back(generate_instance(c));
        }
        return out;
    };
}

InstanceSource fixed_instances(std::vector<Instance> pool) {
    if (pool.empty()) throw ConfigError("fixed instance pool is empty");
    return [pool = std::move(pool)](int count, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::vector<Instance> out;
        for (int i = 0; i < count; ++i)
            out.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
        return out;
    };
}

std::vector<Instance> make_instance_set(const std::string &size, int count, std::uint64_t seed) {
    return generated_instances(size)(count, seed);
}

namespace {

std::vector<Environment> make_envs(const std::vector<Instance> &instances, const EnvConfig &cfg) {
    std::vector<Environment> envs;
    envs.reserve(instances.size());
    for (const auto &inst : instances) envs.emplace_back(inst, cfg);
    return envs;
}

std::pair<double, double> greedy_score(const PolicyParams &params, const std::vector<Environment> &envs) {
    std::vector<EpisodeTrace> traces(envs.size());
    parallel_for(envs.size(), [&](std::size_t i) { traces[i] = policy_episode(params, envs[i], Decoding::Greedy); });
    double mk = 0, sw = 0;
    for (const auto &t : traces) {
        mk += static_cast<double>(t.makespan);
        sw += static_cast<double>(t.total_switches);
    }
    return {mk / static_cast<double>(envs.size()), sw / static_cast<double>(envs.size())};
}

std::string join(const std::string &dir, const char *name) { return (std::filesystem::path(dir) / name).string(); }

} // namespace

std::string format_log(const std::vector<LogRow> &rows) {
    std::ostringstream os;
    os << "iteration,train_makespan,train_switches,policy_loss,value_loss,entropy,kl,val_makespan,val_switches,"
          "best_val_makespan\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    for (const auto &r : rows) {
        os << r.iteration << ',' << num(r.train_makespan) << ',' << num(r.train_switches) << ','
           << num(r.policy_loss) << ',' << num(r.value_loss) << ',' << num(r.entropy) << ',' << num(r.kl) << ','
           << (r.val_makespan ? num(*r.val_makespan) : "") << ',' << (r.val_switches ? num(*r.val_switches) : "")
           << ',' << num(r.best_val_makespan) << '\n';
    }
    return os.str();
}

TrainResult train(const TrainSetup &setup) {
    const PPOConfig &cfg = setup.ppo;
    cfg.validate();
    if (!setup.train_source) throw ConfigError("train: no instance source");
    if (setup.validation.empty()) throw ConfigError("train: empty validation set");
    EnvConfig env_cfg = setup.env;
    env_cfg.lambda = cfg.lambda;

    PolicyParams params = setup.init ? *setup.init : PolicyParams(setup.net);
    if (setup.anchor && !(setup.anchor->config() == params.config()))
        throw ConfigError("train: anchor policy has a different network configuration");
    Adam adam(params.size(), cfg.lr);

    const bool files = !setup.out_dir.empty();
    if (files) {
        std::filesystem::create_directories(setup.out_dir);
        write_checkpoint_file(join(setup.out_dir, "initial.ckpt"), params);
    }
    if (cfg.max_iterations == 0) return TrainResult{params, params, {}, 0.0};

    const auto val_envs = make_envs(setup.validation, env_cfg);
    std::uint64_t resamples = 0;
    auto train_envs = make_envs(setup.train_source(cfg.batch_size, derive_seed(cfg.seed, 1'000'000 + resamples)), env_cfg);

    TrainResult result{params, params, {}, greedy_score(params, val_envs).first};
    if (files) write_checkpoint_file(join(setup.out_dir, "best.ckpt"), params);

    std::vector<Trajectory> memory;
    auto flush_files = [&] {
        if (!files) return;
        write_checkpoint_file(join(setup.out_dir, "last.ckpt"), params);
        write_text_file(join(setup.out_dir, "log.csv"), format_log(result.log));
    };

    try {
        for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
            auto trajs = collect_rollouts(params, train_envs, derive_seed(cfg.seed, static_cast<std::uint64_t>(iter)));
            LogRow row;
            row.iteration = iter;
            for (const auto &t : trajs) {
                row.train_makespan += static_cast<double>(t.trace.makespan);
                row.train_switches += static_cast<double>(t.trace.total_switches);
            }
            row.train_makespan /= static_cast<double>(trajs.size());
            row.train_switches /= static_cast<double>(trajs.size());
            for (auto &t : trajs) memory.push_back(std::move(t));

            if (iter % cfg.update_interval == 0) {
                std::vector<UpdateSample> batch;
                for (const auto &t : memory) {
                    const auto adv = compute_advantages(t, cfg.gamma, cfg.gae_smoothing, cfg.reward_scale);
                    for (std::size_t k = 0; k < t.steps.size(); ++k) {
                        UpdateSample s{&t.steps[k], adv[k].advantage, adv[k].ret, {}};
                        batch.push_back(std::move(s));
                    }
                }
                if (setup.anchor) {
                    parallel_for(batch.size(), [&](std::size_t k) {
                        const Transition &t = *batch[k].transition;
                        batch[k].anchor_probs = evaluate_policy(*setup.anchor, t.graph, t.pairs).probs;
                    });
                }
                const auto stats = ppo_update(params, adam, std::move(batch), cfg,
                                              derive_seed(cfg.seed ^ 0x5eedULL, static_cast<std::uint64_t>(iter)));
                row.policy_loss = stats.policy_loss;
                row.value_loss = stats.value_loss;
                row.entropy = stats.entropy;
                row.kl = stats.kl;
                memory.clear();
            }

            if (iter % cfg.validate_interval == 0) {
                const auto [mk, sw] = greedy_score(params, val_envs);
                row.val_makespan = mk;
                row.val_switches = sw;
                if (mk < result.best_validation) {
                    result.best_validation = mk;
                    result.best = params;
                    if (files) write_checkpoint_file(join(setup.out_dir, "best.ckpt"), params);
                }
            }
            row.best_val_makespan = result.best_validation;
            result.log.push_back(row);

            if (iter % cfg.resample_interval == 0) {
                ++resamples;
                train_envs =
                    make_envs(setup.train_source(cfg.batch_size, derive_seed(cfg.seed, 1'000'000 + resamples)), env_cfg);
            }
            if (files && iter % cfg.validate_interval == 0) flush_files();
        }
    } catch (const NumericError &) {
        flush_files();
        throw;
    }
    result.last = params;
    flush_files();
    return result;
}

} // namespace fjsplb
