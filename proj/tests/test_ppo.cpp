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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "fjsplb/error.hpp"
#include "fjsplb/parallel.hpp"
#include "fjsplb/ppo.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fjsplb;
using testing_support::make_instance;

namespace {

NetConfig tiny_net(std::uint64_t seed = 0) {
    NetConfig c;
    c.embed_dim = 4;
    c.hidden_dim = 8;
    c.seed = seed;
    return c;
}

std::vector<Environment> envs_for(const std::string &size, int n, std::uint64_t seed) {
    std::vector<Environment> out;
    for (const auto &inst : make_instance_set(size, n, seed)) out.emplace_back(inst);
    return out;
}

PolicyOutput output_from_logits(std::vector<double> logits, double value) {
    PolicyOutput o;
    o.probs = softmax(logits);
    o.logits = std::move(logits);
    o.value = value;
    return o;
}

double total_loss(const std::vector<double> &logits, double value, std::size_t a, double old_lp, double adv,
                  double ret, const PPOConfig &cfg, const std::vector<double> &anchor) {
    return ppo_sample_loss(output_from_logits(logits, value), a, old_lp, adv, ret, cfg, anchor).total;
}

} // namespace

TEST_CASE("ppo config validation") {
    PPOConfig c;
    CHECK_NOTHROW(c.validate());
    c.gamma = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = PPOConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("rollouts") {
    SUBCASE("single op instance gives a single step") {
        std::vector<Environment> envs;
        envs.emplace_back(make_instance(1, {}, 10, 1, 0, 0, {{{{false, {{0, 3}}}}, {}}}));
        const auto t = collect_rollouts(PolicyParams(tiny_net()), envs, 1);
        REQUIRE(t.size() == 1);
        CHECK(t[0].steps.size() == 1);
        CHECK(t[0].steps[0].done);
        CHECK(t[0].steps[0].log_prob == 0.0);
    }
    SUBCASE("trajectories cover every op and repeat under the same seed") {
        const auto envs = envs_for("10x5", 20, 3);
        const PolicyParams p(tiny_net());
        const auto a = collect_rollouts(p, envs, 77);
        const auto b = collect_rollouts(p, envs, 77);
        REQUIRE(a.size() == 20);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].steps.size() == static_cast<std::size_t>(envs[i].problem().op_count()));
            CHECK(save_trace(a[i].trace) == save_trace(b[i].trace));
            double sum = 0;
            for (std::size_t k = 0; k < a[i].steps.size(); ++k) {
                CHECK(a[i].steps[k].log_prob == b[i].steps[k].log_prob);
                sum += a[i].steps[k].reward;
            }
            CHECK(sum == doctest::Approx(a[i].trace.total_reward).epsilon(1e-12));
        }
        const auto c = collect_rollouts(p, envs, 78);
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) differs |= save_trace(a[i].trace) != save_trace(c[i].trace);
        CHECK(differs);
    }
}

TEST_CASE("advantages") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    Trajectory t;
    for (int k = 0; k < 37; ++k) {
        Transition s;
        s.reward = n(rng);
        s.value = n(rng);
        t.steps.push_back(std::move(s));
    }
    t.steps.back().done = true;
    std::vector<double> r, v;
    for (const auto &s : t.steps) {
        r.push_back(s.reward);
        v.push_back(s.value);
    }

    const auto mc = compute_advantages(t, 1.0, 1.0);
    double tail = 0;
    for (std::size_t k = t.steps.size(); k-- > 0;) {
        tail += r[k];
        CHECK(std::abs(mc[k].advantage - (tail - v[k])) <= 1e-9);
        CHECK(std::abs(mc[k].ret - tail) <= 1e-9);
    }
    for (double gamma : {1.0, 0.9}) {
        for (double lam : {1.0, 0.98, 0.5, 0.0}) {
            const auto fast = compute_advantages(t, gamma, lam);
            const auto slow = oracle::slow_gae(r, v, gamma, lam);
            for (std::size_t k = 0; k < slow.size(); ++k) CHECK(std::abs(fast[k].advantage - slow[k]) <= 1e-9);
        }
    }
    const auto scaled = compute_advantages(t, 1.0, 0.98, 0.01);
    std::vector<double> rs(r);
    for (double &x : rs) x *= 0.01;
    const auto slow = oracle::slow_gae(rs, v, 1.0, 0.98);
    for (std::size_t k = 0; k < slow.size(); ++k) CHECK(std::abs(scaled[k].advantage - slow[k]) <= 1e-9);

    for (auto &s : t.steps) s.reward = s.value = 0;
    for (const auto &a : compute_advantages(t, 1.0, 0.98)) CHECK(a.advantage == 0.0);
}

TEST_CASE("sample loss terms") {
    PPOConfig cfg;
    const std::vector<double> logits{0.3, -1.2, 0.8, 0.1};
    const auto out = output_from_logits(logits, 0.7);

    SUBCASE("only the entropy term acts when advantage and value error vanish") {
        const auto L = ppo_sample_loss(out, 1, std::log(out.probs[1]), 0.0, 0.7, cfg);
        CHECK(L.surrogate == 0.0);
        CHECK(L.value == 0.0);
        CHECK(L.dvalue == 0.0);
        double h = 0;
        for (double p : out.probs) h -= p * std::log(p);
        CHECK(L.entropy == doctest::Approx(h).epsilon(1e-12));
        CHECK(L.total == doctest::Approx(-cfg.entropy_coeff * h).epsilon(1e-12));
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double expect = cfg.entropy_coeff * out.probs[j] * (std::log(out.probs[j]) + h);
            CHECK(L.dlogits[j] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("ratios above the clip range are clipped for positive advantages") {
        const double old_lp = std::log(out.probs[2] / 1.5);
        const auto L = ppo_sample_loss(out, 2, old_lp, 2.0, 0.7, cfg);
        CHECK(L.ratio == doctest::Approx(1.5));
        CHECK(L.surrogate == doctest::Approx(-1.2 * 2.0));
        PPOConfig no_ent = cfg;
        no_ent.entropy_coeff = 0;
        const auto M = ppo_sample_loss(out, 2, old_lp, 2.0, 0.7, no_ent);
        for (double d : M.dlogits) CHECK(d == 0.0);
    }
    SUBCASE("anchoring to the current policy gives zero divergence") {
        const auto L = ppo_sample_loss(out, 0, std::log(out.probs[0]), 1.0, 0.0, cfg, out.probs);
        CHECK(std::abs(L.kl) <= 1e-15);
    }
    SUBCASE("loss gradients match finite differences") {
        const std::vector<double> anchor{0.1, 0.2, 0.3, 0.4};
        for (double adv : {-1.3, 0.4}) {
            for (double ratio : {0.7, 1.0, 1.1, 1.4}) {
                const double old_lp = std::log(out.probs[3] / ratio);
                const auto L = ppo_sample_loss(out, 3, old_lp, adv, -0.4, cfg, anchor);
                const double h = 1e-6;
                for (std::size_t j = 0; j < logits.size(); ++j) {
                    auto up = logits, dn = logits;
                    up[j] += h;
                    dn[j] -= h;
                    const double fd = (total_loss(up, 0.7, 3, old_lp, adv, -0.4, cfg, anchor) -
                                       total_loss(dn, 0.7, 3, old_lp, adv, -0.4, cfg, anchor)) /
                                      (2 * h);
                    CHECK(L.dlogits[j] == doctest::Approx(fd).epsilon(1e-6));
                }
                const double h2 = 1e-6;
                const double fdv = (total_loss(logits, 0.7 + h2, 3, old_lp, adv, -0.4, cfg, anchor) -
                                    total_loss(logits, 0.7 - h2, 3, old_lp, adv, -0.4, cfg, anchor)) /
                                   (2 * h2);
                CHECK(L.dvalue == doctest::Approx(fdv).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("advantage normalization") {
    std::vector<UpdateSample> batch(50);
    std::mt19937_64 rng(1);
    for (auto &s : batch) s.advantage = std::uniform_real_distribution<double>(-30, 80)(rng);
    normalize_advantages(batch);
    double mean = 0, sq = 0;
    for (const auto &s : batch) mean += s.advantage / 50.0;
    for (const auto &s : batch) sq += (s.advantage - mean) * (s.advantage - mean) / 50.0;
    CHECK(std::abs(mean) <= 1e-6);
    CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-6);
    std::vector<UpdateSample> one(1);
    one[0].advantage = 4.0;
    normalize_advantages(one);
    CHECK(one[0].advantage == 4.0);
}

TEST_CASE("adam takes a learning-rate sized first step") {
    Adam adam(3, 0.01);
    std::vector<double> p{1.0, 2.0, 3.0};
    const std::vector<double> g{0.5, -2.0, 0.0};
    adam.step(p, g);
    CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(2.01).epsilon(1e-6));
    CHECK(p[2] == 3.0);
    CHECK(adam.steps() == 1);
}

TEST_CASE("updates are deterministic, stay finite and respect the anchor") {
    const auto envs = envs_for("6x4", 4, 5);
    const PolicyParams start(tiny_net(2));
    const auto trajs = collect_rollouts(start, envs, 9);
    PPOConfig cfg;
    cfg.minibatch = 16;
    auto make_batch = [&](bool anchor) {
        std::vector<UpdateSample> batch;
        for (const auto &t : trajs) {
            const auto adv = compute_advantages(t, 1.0, 0.98, 0.01);
            for (std::size_t k = 0; k < t.steps.size(); ++k) {
                UpdateSample s{&t.steps[k], adv[k].advantage, adv[k].ret, {}};
                if (anchor) s.anchor_probs = evaluate_policy(start, t.steps[k].graph, t.steps[k].pairs).probs;
                batch.push_back(std::move(s));
            }
        }
        return batch;
    };
    PolicyParams a = start, b = start;
    Adam oa(a.size(), cfg.lr), ob(b.size(), cfg.lr);
    const auto sa = ppo_update(a, oa, make_batch(false), cfg, 4);
    const auto sb = ppo_update(b, ob, make_batch(false), cfg, 4);
    CHECK(a == b);
    CHECK(!(a == start));
    CHECK(sa.policy_loss == sb.policy_loss);
    CHECK(sa.gradient_steps > 0);
    for (double v : a.flat()) CHECK(std::isfinite(v));

    PolicyParams c = start;
    Adam oc(c.size(), cfg.lr);
    const auto sc = ppo_update(c, oc, make_batch(true), cfg, 4);
    CHECK(sc.kl >= 0.0);
    CHECK(sc.kl < 0.05);

    auto bad = make_batch(false);
    bad[0].advantage = std::numeric_limits<double>::quiet_NaN();
    PolicyParams d = start;
    Adam od(d.size(), cfg.lr);
    CHECK_THROWS_AS((void)ppo_update(d, od, std::move(bad), cfg, 4), NumericError);
    CHECK_THROWS_AS((void)ppo_update(d, od, {}, cfg, 4), ContractError);
}

TEST_CASE("zero iterations write only the initial checkpoint") {
    const auto dir = std::filesystem::temp_directory_path() / "fjsplb_train_zero";
    std::filesystem::remove_all(dir);
    TrainSetup setup;
    setup.ppo.max_iterations = 0;
    setup.net = tiny_net();
    setup.train_source = generated_instances("6x4");
    setup.validation = make_instance_set("6x4", 2, 1);
    setup.out_dir = dir.string();
    const auto r = train(setup);
    CHECK(r.log.empty());
    CHECK(std::filesystem::exists(dir / "initial.ckpt"));
    CHECK(!std::filesystem::exists(dir / "last.ckpt"));
    CHECK(!std::filesystem::exists(dir / "best.ckpt"));
    CHECK(read_checkpoint_file((dir / "initial.ckpt").string()) == PolicyParams(tiny_net()));
    std::filesystem::remove_all(dir);
}

TEST_CASE("training runs are reproducible and track the best validation") {
    TrainSetup setup;
    setup.ppo.max_iterations = 12;
    setup.ppo.batch_size = 3;
    setup.ppo.update_interval = 2;
    setup.ppo.validate_interval = 3;
    setup.ppo.resample_interval = 4;
    setup.ppo.minibatch = 32;
    setup.ppo.seed = 5;
    setup.net = tiny_net(5);
    setup.train_source = generated_instances("6x4");
    setup.validation = make_instance_set("6x4", 4, 99);
    const auto a = train(setup);
    const auto b = train(setup);
    CHECK(format_log(a.log) == format_log(b.log));
    CHECK(a.last == b.last);
    REQUIRE(a.log.size() == 12);
    for (std::size_t k = 1; k < a.log.size(); ++k)
        CHECK(a.log[k].best_val_makespan <= a.log[k - 1].best_val_makespan);
    int validations = 0;
    for (const auto &row : a.log) validations += row.val_makespan.has_value();
    CHECK(validations == 4);
    CHECK(a.best_validation == a.log.back().best_val_makespan);
}

TEST_CASE("fine-tuning logs the divergence from its anchor") {
    const auto pool = make_instance_set("6x4", 3, 8);
    TrainSetup setup;
    setup.ppo.max_iterations = 4;
    setup.ppo.batch_size = 2;
    setup.ppo.update_interval = 2;
    setup.ppo.validate_interval = 2;
    setup.ppo.minibatch = 32;
    setup.net = tiny_net(1);
    const PolicyParams start(setup.net);
    setup.init = start;
    setup.anchor = start;
    setup.validation = pool;
    setup.train_source = fixed_instances(pool);
    const auto r = train(setup);
    bool logged = false;
    for (const auto &row : r.log) {
        CHECK(row.kl >= 0.0);
        CHECK(row.kl < 0.1);
        logged |= row.kl > 0.0;
    }
    CHECK(logged);
}
