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

// Command-line front end: instance generation, dispatching rules, the exact
// oracle, training, evaluation, ablations and Gantt export.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fjsplb/baselines.hpp"
#include "fjsplb/bench.hpp"
#include "fjsplb/error.hpp"
#include "fjsplb/instance.hpp"
#include "fjsplb/parallel.hpp"
#include "fjsplb/ppo.hpp"

namespace fs = std::filesystem;
using namespace fjsplb;
using nlohmann::json;

namespace {

std::vector<Instance> load_dir(const std::string &dir) {
    std::vector<std::string> files;
    for (const auto &e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no instance files (*.json) in " + dir);
    std::vector<Instance> out;
    for (const auto &f : files) out.push_back(read_instance_file(f));
    return out;
}

// Optional JSON config; unknown keys are rejected so typos do not pass silently.
void apply_config(const std::string &path, PPOConfig &ppo, NetConfig &net, EnvConfig &env) {
    const json j = json::parse(read_text_file(path));
    for (const auto &[key, v] : j.items()) {
        if (key == "lr") ppo.lr = v;
        else if (key == "gamma") ppo.gamma = v;
        else if (key == "k_epochs") ppo.k_epochs = v;
        else if (key == "a_coeff") ppo.a_coeff = v;
        else if (key == "vf_coeff") ppo.vf_coeff = v;
        else if (key == "entropy_coeff") ppo.entropy_coeff = v;
        else if (key == "kl_coeff") ppo.kl_coeff = v;
        else if (key == "batch_size") ppo.batch_size = v;
        else if (key == "minibatch") ppo.minibatch = v;
        else if (key == "update_interval") ppo.update_interval = v;
        else if (key == "validate_interval") ppo.validate_interval = v;
        else if (key == "resample_interval") ppo.resample_interval = v;
        else if (key == "max_iterations") ppo.max_iterations = v;
        else if (key == "clip_eps") ppo.clip_eps = v;
        else if (key == "gae_smoothing") ppo.gae_smoothing = v;
        else if (key == "lambda") ppo.lambda = v;
        else if (key == "reward_scale") ppo.reward_scale = v;
        else if (key == "max_grad_norm") ppo.max_grad_norm = v;
        else if (key == "validation_size") ppo.validation_size = v;
        else if (key == "embed_dim") net.embed_dim = v;
        else if (key == "hidden_dim") net.hidden_dim = v;
        else if (key == "gnn_layers") net.gnn_layers = v;
        else if (key == "activation") {
            const std::string a = v;
            if (a == "tanh") net.activation = Activation::Tanh;
            else if (a == "relu") net.activation = Activation::Relu;
            else throw ConfigError("activation must be tanh or relu");
        } else if (key == "connectivity") net.graph.mode = connectivity_from_string(v.get<std::string>());
        else if (key == "alpha") net.graph.alpha = v;
        else if (key == "features") net.graph.features = FeatureMask::from_string(v.get<std::string>());
        else if (key == "eviction") env.eviction = eviction_policy_from_string(v.get<std::string>());
        else if (key == "kitting_mode") {
            const std::string m = v;
            if (m == "replace") env.kitting_mode = KittingTimeMode::Replace;
            else if (m == "additive") env.kitting_mode = KittingTimeMode::Additive;
            else throw ConfigError("kitting_mode must be replace or additive");
        } else
            throw ConfigError("unknown config key '" + key + "' in " + path);
    }
}

void print_report(const EvalReport &r) {
    std::cout << r.method << " (" << r.strategy << "): makespan " << r.mean_makespan << ", switches "
              << r.mean_switches << ", gap vs " << r.reference << " " << 100.0 * r.mean_gap << "%, "
              << r.mean_seconds << " s/instance\n";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Flexible job-shop scheduling with limited buffers and material kitting"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Global seed (overridden by FJSPLB_SEED)")->capture_default_str();

    // generate
    auto *gen = app.add_subcommand("generate", "Generate synthetic instances");
    std::string gen_size = "10x5", gen_out;
    int gen_count = 1;
    gen->add_option("--size", gen_size, "Instance size NxM")->capture_default_str();
    gen->add_option("--count", gen_count, "Number of instances (a directory is written when > 1)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "Output file or directory")->required();

    // solve
    auto *solve = app.add_subcommand("solve", "Schedule one instance with a dispatching rule");
    std::string solve_rule = "mwr", solve_in, solve_out;
    solve->add_option("--rule", solve_rule, "fifo|mor|spt|mwr|lwr")->capture_default_str();
    solve->add_option("--in", solve_in, "Instance file")->required();
    solve->add_option("--out", solve_out, "Trace file");

    // oracle
    auto *oracle = app.add_subcommand("oracle", "Exact branch-and-bound on a small instance");
    std::string oracle_in, oracle_out;
    double oracle_nodes = 1e7, oracle_time = 60;
    oracle->add_option("--in", oracle_in, "Instance file")->required();
    oracle->add_option("--nodes", oracle_nodes, "Node limit")->capture_default_str();
    oracle->add_option("--time", oracle_time, "Time limit in seconds")->capture_default_str();
    oracle->add_option("--out", oracle_out, "Trace file for the best schedule");

    // train
    auto *trn = app.add_subcommand("train", "Train a policy with PPO");
    std::string train_size = "10x5", train_config, train_out;
    int train_iters = -1;
    trn->add_option("--size", train_size, "Training instance size")->capture_default_str();
    trn->add_option("--config", train_config, "JSON file overriding hyperparameters");
    trn->add_option("--iterations", train_iters, "Overrides max_iterations");
    trn->add_option("--out", train_out, "Output directory (checkpoints, log.csv)")->required();

    // finetune
    auto *ft = app.add_subcommand("finetune", "Fine-tune a checkpoint on a fixed instance pool");
    std::string ft_from, ft_data, ft_out, ft_config;
    double ft_kl = 0.05;
    int ft_iters = -1;
    ft->add_option("--from", ft_from, "Starting checkpoint (also the KL anchor)")->required();
    ft->add_option("--kl", ft_kl, "KL coefficient to the anchor")->capture_default_str();
    ft->add_option("--data", ft_data, "Directory of instance files")->required();
    ft->add_option("--config", ft_config, "JSON file overriding hyperparameters");
    ft->add_option("--iterations", ft_iters, "Overrides max_iterations");
    ft->add_option("--out", ft_out, "Output directory")->required();

    // eval
    auto *ev = app.add_subcommand("eval", "Evaluate a method on a test set");
    std::string ev_method = "mwr", ev_strategy = "greedy", ev_size = "10x5", ev_data, ev_out, ev_detail,
                ev_reference = "best-pdr";
    int ev_count = 100, ev_samples = 100;
    bool ev_time = false;
    ev->add_option("--method", ev_method, "fifo|mor|spt|mwr|lwr|random|ckpt:PATH")->capture_default_str();
    ev->add_option("--strategy", ev_strategy, "greedy|sampling")->capture_default_str();
    ev->add_option("--samples", ev_samples, "Runs per instance for sampling")->capture_default_str();
    ev->add_option("--size", ev_size, "Generated test set size")->capture_default_str();
    ev->add_option("--count", ev_count, "Generated test set count")->capture_default_str();
    ev->add_option("--data", ev_data, "Directory of instance files instead of a generated set");
    ev->add_option("--reference", ev_reference, "best-pdr|oracle")->capture_default_str();
    ev->add_option("--out", ev_out, "Summary CSV");
    ev->add_option("--detail", ev_detail, "Per-instance CSV");
    ev->add_flag("--time", ev_time, "Include wall-time columns in the CSV files");

    // ablate
    auto *ab = app.add_subcommand("ablate", "Evaluate the connectivity/feature ablation matrix");
    std::string ab_dir, ab_size = "10x5", ab_out;
    int ab_count = 100;
    ab->add_option("--dir", ab_dir, "Directory with <variant>.ckpt files")->required();
    ab->add_option("--size", ab_size, "Test set size")->capture_default_str();
    ab->add_option("--count", ab_count, "Test set count")->capture_default_str();
    ab->add_option("--out", ab_out, "CSV report");

    // gantt
    auto *ga = app.add_subcommand("gantt", "Export a Gantt document from a trace");
    std::string ga_in, ga_trace, ga_out, ga_svg;
    ga->add_option("--in", ga_in, "Instance file")->required();
    ga->add_option("--trace", ga_trace, "Trace file")->required();
    ga->add_option("--out", ga_out, "Gantt JSON")->required();
    ga->add_option("--svg", ga_svg, "Optional SVG image");

    CLI11_PARSE(app, argc, argv);

    if (const char *env = std::getenv("FJSPLB_SEED")) {
        try {
            seed = std::stoull(env);
        } catch (const std::exception &) {
            std::cerr << "error: FJSPLB_SEED must be an unsigned integer\n";
            return 2;
        }
    }

    try {
        if (*gen) {
            if (gen_count == 1) {
                write_instance_file(gen_out, generate_instance(GeneratorConfig::for_size(gen_size, seed)));
            } else {
                fs::create_directories(gen_out);
                const auto set = make_instance_set(gen_size, gen_count, seed);
                for (std::size_t i = 0; i < set.size(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof name, "inst_%04zu.json", i);
                    write_instance_file((fs::path(gen_out) / name).string(), set[i]);
                }
            }
        } else if (*solve) {
            const Instance inst = read_instance_file(solve_in);
            const auto t = pdr_schedule(Environment(inst), rule_from_string(solve_rule));
            std::cout << "makespan " << t.makespan << ", switches " << t.total_switches << "\n";
            if (!solve_out.empty()) write_text_file(solve_out, save_trace(t));
        } else if (*oracle) {
            const Instance inst = read_instance_file(oracle_in);
            const auto r = branch_and_bound(Environment(inst), static_cast<std::int64_t>(oracle_nodes), oracle_time);
            std::cout << (r.optimal ? "optimal" : "incumbent") << " makespan " << r.optimal_makespan << ", switches "
                      << r.best_schedule.total_switches << ", nodes " << r.nodes_explored << "\n";
            if (!oracle_out.empty()) write_text_file(oracle_out, save_trace(r.best_schedule));
        } else if (*trn || *ft) {
            TrainSetup setup;
            setup.ppo.seed = seed;
            setup.net.seed = seed;
            const std::string &cfg = *trn ? train_config : ft_config;
            if (!cfg.empty()) apply_config(cfg, setup.ppo, setup.net, setup.env);
            const int iters = *trn ? train_iters : ft_iters;
            if (iters >= 0) setup.ppo.max_iterations = iters;
            if (*trn) {
                setup.net.category_count = GeneratorConfig::for_size(train_size, 0).category_count;
                setup.train_source = generated_instances(train_size);
                setup.validation = validation_set(train_size, setup.ppo.validation_size, seed);
                setup.out_dir = train_out;
            } else {
                const PolicyParams start = read_checkpoint_file(ft_from);
                setup.net = start.config();
                setup.init = start;
                setup.anchor = start;
                setup.ppo.kl_coeff = ft_kl;
                auto pool = load_dir(ft_data);
                setup.validation = pool;
                setup.train_source = fixed_instances(std::move(pool));
                setup.out_dir = ft_out;
            }
            const auto result = train(setup);
            std::cout << "best validation makespan " << result.best_validation << "\n";
        } else if (*ev) {
            const Method method = Method::parse(ev_method);
            const auto instances = ev_data.empty() ? test_set(ev_size, ev_count, seed) : load_dir(ev_data);
            EvalOptions opt;
            opt.strategy = strategy_from_string(ev_strategy);
            opt.samples = ev_samples;
            opt.seed = seed;
            Reference ref;
            if (ev_reference == "best-pdr") ref = Reference::BestPDR;
            else if (ev_reference == "oracle") ref = Reference::Oracle;
            else throw ConfigError("reference must be best-pdr or oracle");
            const auto refs = reference_makespans(instances, ref, opt.env);
            const auto rep = evaluate(method, instances, refs, to_string(ref), opt);
            print_report(rep);
            if (!ev_out.empty()) write_text_file(ev_out, summary_csv(std::span(&rep, 1), ev_time));
            if (!ev_detail.empty()) write_text_file(ev_detail, detail_csv(rep, ev_time));
        } else if (*ab) {
            auto variants = ablation_variants();
            for (auto &v : variants) {
                const fs::path f = fs::path(ab_dir) / (v.name + ".ckpt");
                if (fs::exists(f)) v.policy = read_checkpoint_file(f.string());
            }
            EvalOptions opt;
            opt.seed = seed;
            const auto rows = ablation_matrix(variants, test_set(ab_size, ab_count, seed), opt);
            const std::string csv = ablation_csv(rows);
            std::cout << csv;
            if (!ab_out.empty()) write_text_file(ab_out, csv);
        } else if (*ga) {
            const Instance inst = read_instance_file(ga_in);
            const EpisodeTrace trace = load_trace(read_text_file(ga_trace));
            const auto problems = check_trace(inst, trace);
            if (!problems.empty()) throw ValidationError("trace is not valid for this instance: " + problems.front());
            const GanttDoc doc = export_gantt(inst, trace);
            write_text_file(ga_out, gantt_json(doc));
            if (!ga_svg.empty()) write_text_file(ga_svg, gantt_svg(doc));
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
