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

#include "fjsplb/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fjsplb/error.hpp"

namespace fjsplb {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using RowVec = Eigen::RowVectorXd;

ConstMap weight(const PolicyParams &p, const DenseLayer &l) {
    return ConstMap(p.flat().data() + l.offset, l.out, l.in);
}

Eigen::Map<const RowVec> bias(const PolicyParams &p, const DenseLayer &l) {
    return Eigen::Map<const RowVec>(p.flat().data() + l.offset + l.weight_count(), l.out);
}

void activate(Matrix &z, Activation a) {
    if (a == Activation::Tanh)
        z = z.array().tanh();
    else
        z = z.cwiseMax(0.0);
}

// d(act)/dz expressed through the activation output.
Matrix activation_grad(const Matrix &y, Activation a) {
    if (a == Activation::Tanh) return (1.0 - y.array().square()).matrix();
    return (y.array() > 0.0).cast<double>().matrix();
}

Matrix dense(const PolicyParams &p, const DenseLayer &l, const Matrix &x, bool with_activation = true) {
    Matrix z = x * weight(p, l).transpose();
    z.rowwise() += bias(p, l);
    if (with_activation) activate(z, p.config().activation);
    return z;
}

// Backward through y = act(x W^T + b) (or linear): accumulates dW, db and
// returns dx.
Matrix dense_backward(const PolicyParams &p, const DenseLayer &l, const Matrix &x, const Matrix &y, const Matrix &dy,
                      std::span<double> grad, bool with_activation = true) {
    Matrix dz = with_activation ? Matrix(dy.cwiseProduct(activation_grad(y, p.config().activation))) : dy;
    Eigen::Map<Matrix> dW(grad.data() + l.offset, l.out, l.in);
    Eigen::Map<RowVec> db(grad.data() + l.offset + l.weight_count(), l.out);
    dW.noalias() += dz.transpose() * x;
    db += dz.colwise().sum();
    return dz * weight(p, l);
}

void require_finite(const Matrix &m, const char *what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite value in ") + what);
}

void check_graph(const PolicyParams &params, const HeteroGraph &g) {
    const auto &c = params.config();
    if (g.category_count != c.category_count)
        throw ContractError("graph has " + std::to_string(g.category_count) + " categories, network expects " +
                            std::to_string(c.category_count));
    if (static_cast<int>(g.op_features.size()) != g.op_count * g.op_dim() ||
        static_cast<int>(g.machine_features.size()) != g.machine_count * machine_feature::dim ||
        static_cast<int>(g.buffer_features.size()) != g.buffer_dim())
        throw ContractError("graph feature arrays do not match their declared shapes");
    if (g.op_count < 1 || g.machine_count < 1) throw ContractError("graph needs operations and machines");
}

} // namespace

void NetConfig::validate() const {
    if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("embed_dim and hidden_dim must be >= 1");
    if (gnn_layers < 1) throw ConfigError("gnn_layers must be >= 1");
    if (category_count < 1) throw ConfigError("category_count must be >= 1");
}

PolicyParams::PolicyParams(NetConfig config) : config_(std::move(config)) {
    config_.validate();
    const int E = config_.embed_dim, H = config_.hidden_dim;
    std::size_t offset = 0;
    auto add = [&](std::string name, int out, int in) {
        layers_.push_back({std::move(name), offset, out, in});
        offset += layers_.back().size();
    };
    add("op_encoder", E, op_feature::dim(config_.category_count));
    add("machine_encoder", E, machine_feature::dim);
    add("buffer_encoder", E, buffer_feature_dim(config_.category_count));
    for (int l = 0; l < config_.gnn_layers; ++l) {
        add("machine_layer" + std::to_string(l), E, 2 * E);
        add("op_layer" + std::to_string(l), E, 5 * E);
    }
    add("actor_hidden", H, 4 * E);
    add("actor_out", 1, H);
    add("critic_hidden", H, 2 * E);
    add("critic_out", 1, H);
    values_.resize(offset);

    std::mt19937_64 rng(config_.seed);
    for (const auto &l : layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t k = 0; k < l.size(); ++k) values_[l.offset + k] = u(rng);
    }
}

Matrix operation_buffer_embedding(const PolicyParams &params, const HeteroGraph &g) {
    check_graph(params, g);
    Matrix xb = Eigen::Map<const Matrix>(g.buffer_features.data(), 1, g.buffer_dim());
    Matrix eb = dense(params, params.buffer_encoder(), xb);
    Matrix delta = Matrix::Zero(g.op_count, params.config().embed_dim);
    for (const auto &e : g.buffer_edges) delta.row(e.op) = e.weight * eb.row(0);
    return delta;
}

Embeddings embed(const PolicyParams &params, const HeteroGraph &g, const Matrix *delta_override) {
    check_graph(params, g);
    const auto &cfg = params.config();
    const int E = cfg.embed_dim, K = cfg.gnn_layers, N = g.op_count, M = g.machine_count;

    Embeddings emb;
    emb.op_degree.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i)
        emb.op_degree[static_cast<std::size_t>(i)] =
            g.op_machine_ptr[static_cast<std::size_t>(i + 1)] - g.op_machine_ptr[static_cast<std::size_t>(i)];
    emb.machine_degree.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m)
        emb.machine_degree[static_cast<std::size_t>(m)] =
            g.machine_op_ptr[static_cast<std::size_t>(m + 1)] - g.machine_op_ptr[static_cast<std::size_t>(m)];

    const Matrix xo = Eigen::Map<const Matrix>(g.op_features.data(), N, g.op_dim());
    const Matrix xm = Eigen::Map<const Matrix>(g.machine_features.data(), M, machine_feature::dim);
    const Matrix xb = Eigen::Map<const Matrix>(g.buffer_features.data(), 1, g.buffer_dim());
    emb.op.push_back(dense(params, params.op_encoder(), xo));
    emb.machine.push_back(dense(params, params.machine_encoder(), xm));
    Matrix eb = dense(params, params.buffer_encoder(), xb);
    emb.buffer = eb.row(0).transpose();

    if (delta_override) {
        if (delta_override->rows() != N || delta_override->cols() != E)
            throw ContractError("delta override has the wrong shape");
        emb.delta = *delta_override;
    } else {
        emb.delta = Matrix::Zero(N, E);
        for (const auto &e : g.buffer_edges) emb.delta.row(e.op) = e.weight * eb.row(0);
    }

    for (int l = 0; l < K; ++l) {
        const Matrix &ho = emb.op.back();
        Matrix im(M, 2 * E);
        im.leftCols(E) = emb.machine.back();
        im.rightCols(E).setZero();
        for (int m = 0; m < M; ++m) {
            const int deg = emb.machine_degree[static_cast<std::size_t>(m)];
            if (deg == 0) continue;
            for (int k = g.machine_op_ptr[static_cast<std::size_t>(m)]; k < g.machine_op_ptr[static_cast<std::size_t>(m + 1)]; ++k)
                im.row(m).rightCols(E) += ho.row(g.machine_op_idx[static_cast<std::size_t>(k)]);
            im.row(m).rightCols(E) /= static_cast<double>(deg);
        }
        emb.machine.push_back(dense(params, params.machine_layer(l), im));
        emb.machine_inputs.push_back(std::move(im));

        const Matrix &hm = emb.machine.back();
        Matrix io = Matrix::Zero(N, 5 * E);
        io.leftCols(E) = ho;
        for (int i = 0; i < N; ++i) {
            const int pr = g.pred[static_cast<std::size_t>(i)], su = g.succ[static_cast<std::size_t>(i)];
            if (pr >= 0) io.row(i).segment(E, E) = ho.row(pr);
            if (su >= 0) io.row(i).segment(2 * E, E) = ho.row(su);
            const int deg = emb.op_degree[static_cast<std::size_t>(i)];
            if (deg > 0) {
                for (int k = g.op_machine_ptr[static_cast<std::size_t>(i)]; k < g.op_machine_ptr[static_cast<std::size_t>(i + 1)]; ++k)
                    io.row(i).segment(3 * E, E) += hm.row(g.op_machine_idx[static_cast<std::size_t>(k)]);
                io.row(i).segment(3 * E, E) /= static_cast<double>(deg);
            }
        }
        io.rightCols(E) = emb.delta;
        emb.op.push_back(dense(params, params.op_layer(l), io));
        emb.op_inputs.push_back(std::move(io));
    }

    emb.pooled.resize(2 * E);
    emb.pooled.head(E) = emb.op.back().colwise().mean().transpose();
    emb.pooled.tail(E) = emb.machine.back().colwise().mean().transpose();
    require_finite(emb.op.back(), "operation embedding");
    require_finite(emb.machine.back(), "machine embedding");
    return emb;
}

Matrix machine_embedding(const PolicyParams &params, const HeteroGraph &graph) {
    return embed(params, graph).final_machine();
}

Matrix operation_embedding(const PolicyParams &params, const HeteroGraph &graph, const Matrix &delta) {
    return embed(params, graph, &delta).final_op();
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (std::size_t k = 0; k < logits.size(); ++k) z += (p[k] = std::exp(logits[k] - mx));
    for (auto &v : p) v /= z;
    return p;
}

std::size_t greedy_index(std::span<const double> probs) {
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::size_t sample_index(std::span<const double> probs, std::mt19937_64 &rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) return k;
    }
    // Rounding left u above the total: take the last action with mass.
    for (std::size_t k = probs.size(); k-- > 0;)
        if (probs[k] > 0) return k;
    return 0;
}

PolicyOutput actor_critic(const PolicyParams &params, const Embeddings &emb, std::span<const Action> pairs,
                          ForwardCache *cache) {
    if (pairs.empty()) throw ContractError("actor_critic needs at least one eligible pair");
    const int E = params.config().embed_dim;
    const int n = static_cast<int>(pairs.size());
    const Matrix &ho = emb.final_op();
    const Matrix &hm = emb.final_machine();

    Matrix q(n, 4 * E);
    for (int k = 0; k < n; ++k) {
        const auto &a = pairs[static_cast<std::size_t>(k)];
        if (a.op < 0 || a.op >= ho.rows() || a.machine < 0 || a.machine >= hm.rows())
            throw ContractError("eligible pair refers to a node outside the graph");
        q.row(k).head(E) = ho.row(a.op);
        q.row(k).segment(E, E) = hm.row(a.machine);
        q.row(k).tail(2 * E) = emb.pooled.transpose();
    }
    Matrix hidden = dense(params, params.actor_hidden(), q);
    Matrix logits = dense(params, params.actor_out(), hidden, false);
    Matrix pooled = emb.pooled.transpose();
    Matrix ch = dense(params, params.critic_hidden(), pooled);
    Matrix v = dense(params, params.critic_out(), ch, false);
    require_finite(logits, "actor logits");
    require_finite(v, "critic value");

    PolicyOutput out;
    out.logits.assign(logits.data(), logits.data() + n);
    out.probs = softmax(out.logits);
    out.value = v(0, 0);
    if (cache) {
        cache->pairs.assign(pairs.begin(), pairs.end());
        cache->actor_input = std::move(q);
        cache->actor_hidden = std::move(hidden);
        cache->critic_hidden = ch.row(0).transpose();
    }
    return out;
}

PolicyOutput evaluate_policy(const PolicyParams &params, const HeteroGraph &graph, std::span<const Action> pairs,
                             ForwardCache *cache) {
    if (pairs.empty()) throw ContractError("evaluate_policy needs at least one eligible pair");
    Embeddings emb = embed(params, graph);
    if (!cache) return actor_critic(params, emb, pairs, nullptr);
    auto out = actor_critic(params, emb, pairs, cache);
    cache->graph = &graph;
    cache->emb = std::move(emb);
    return out;
}

void backward(const PolicyParams &params, const ForwardCache &c, std::span<const double> dlogits, double dvalue,
              std::span<double> grad) {
    if (!c.graph) throw ContractError("backward needs a cached forward pass");
    if (dlogits.size() != c.pairs.size()) throw ContractError("dlogits size does not match the cached pairs");
    if (grad.size() != params.size()) throw ContractError("gradient buffer has the wrong size");
    const HeteroGraph &g = *c.graph;
    const Embeddings &emb = c.emb;
    const int E = params.config().embed_dim, K = params.config().gnn_layers;
    const int N = g.op_count, M = g.machine_count, n = static_cast<int>(c.pairs.size());

    std::vector<Matrix> d_op(static_cast<std::size_t>(K + 1), Matrix::Zero(N, E));
    std::vector<Matrix> d_machine(static_cast<std::size_t>(K + 1), Matrix::Zero(M, E));
    Vector d_pooled = Vector::Zero(2 * E);

    // Actor head.
    Matrix d_logits = Eigen::Map<const Matrix>(dlogits.data(), n, 1);
    Matrix logits_dummy; // output of the linear layer is not needed for its gradient
    Matrix d_hidden = dense_backward(params, params.actor_out(), c.actor_hidden, logits_dummy, d_logits, grad, false);
    Matrix d_q = dense_backward(params, params.actor_hidden(), c.actor_input, c.actor_hidden, d_hidden, grad);
    for (int k = 0; k < n; ++k) {
        const auto &a = c.pairs[static_cast<std::size_t>(k)];
        d_op[static_cast<std::size_t>(K)].row(a.op) += d_q.row(k).head(E);
        d_machine[static_cast<std::size_t>(K)].row(a.machine) += d_q.row(k).segment(E, E);
        d_pooled += d_q.row(k).tail(2 * E).transpose();
    }

    // Critic head.
    {
        Matrix ch = c.critic_hidden.transpose();
        Matrix dv(1, 1);
        dv(0, 0) = dvalue;
        Matrix d_ch = dense_backward(params, params.critic_out(), ch, logits_dummy, dv, grad, false);
        Matrix pooled = emb.pooled.transpose();
        Matrix d_in = dense_backward(params, params.critic_hidden(), pooled, ch, d_ch, grad);
        d_pooled += d_in.row(0).transpose();
    }

    // Mean pooling.
    d_op[static_cast<std::size_t>(K)].rowwise() += (d_pooled.head(E) / static_cast<double>(N)).transpose();
    d_machine[static_cast<std::size_t>(K)].rowwise() += (d_pooled.tail(E) / static_cast<double>(M)).transpose();

    Matrix d_delta = Matrix::Zero(N, E);
    for (int l = K - 1; l >= 0; --l) {
        const auto lu = static_cast<std::size_t>(l);
        // Operation layer l: out op[l+1], input [op[l] | pred | succ | mean machine[l+1] | delta].
        Matrix d_io = dense_backward(params, params.op_layer(l), emb.op_inputs[lu], emb.op[lu + 1], d_op[lu + 1], grad);
        d_op[lu] += d_io.leftCols(E);
        for (int i = 0; i < N; ++i) {
            const int pr = g.pred[static_cast<std::size_t>(i)], su = g.succ[static_cast<std::size_t>(i)];
            if (pr >= 0) d_op[lu].row(pr) += d_io.row(i).segment(E, E);
            if (su >= 0) d_op[lu].row(su) += d_io.row(i).segment(2 * E, E);
            const int deg = emb.op_degree[static_cast<std::size_t>(i)];
            if (deg == 0) continue;
            const auto share = (d_io.row(i).segment(3 * E, E) / static_cast<double>(deg)).eval();
            for (int k = g.op_machine_ptr[static_cast<std::size_t>(i)]; k < g.op_machine_ptr[static_cast<std::size_t>(i + 1)]; ++k)
                d_machine[lu + 1].row(g.op_machine_idx[static_cast<std::size_t>(k)]) += share;
        }
        d_delta += d_io.rightCols(E);

        // Machine layer l: out machine[l+1], input [machine[l] | mean op[l]].
        Matrix d_im = dense_backward(params, params.machine_layer(l), emb.machine_inputs[lu], emb.machine[lu + 1],
                                     d_machine[lu + 1], grad);
        d_machine[lu] += d_im.leftCols(E);
        for (int m = 0; m < M; ++m) {
            const int deg = emb.machine_degree[static_cast<std::size_t>(m)];
            if (deg == 0) continue;
            const auto share = (d_im.row(m).rightCols(E) / static_cast<double>(deg)).eval();
            for (int k = g.machine_op_ptr[static_cast<std::size_t>(m)]; k < g.machine_op_ptr[static_cast<std::size_t>(m + 1)]; ++k)
                d_op[lu].row(g.machine_op_idx[static_cast<std::size_t>(k)]) += share;
        }
    }

    // Encoders.
    const Matrix xo = Eigen::Map<const Matrix>(g.op_features.data(), N, g.op_dim());
    const Matrix xm = Eigen::Map<const Matrix>(g.machine_features.data(), M, machine_feature::dim);
    const Matrix xb = Eigen::Map<const Matrix>(g.buffer_features.data(), 1, g.buffer_dim());
    (void)dense_backward(params, params.op_encoder(), xo, emb.op[0], d_op[0], grad);
    (void)dense_backward(params, params.machine_encoder(), xm, emb.machine[0], d_machine[0], grad);
    Matrix d_eb = Matrix::Zero(1, E);
    for (const auto &e : g.buffer_edges) d_eb += e.weight * d_delta.row(e.op);
    Matrix eb = emb.buffer.transpose();
    (void)dense_backward(params, params.buffer_encoder(), xb, eb, d_eb, grad);
}

void check_finite_gradient(const PolicyParams &params, std::span<const double> grad) {
    for (const auto &l : params.layers())
        for (std::size_t k = 0; k < l.size(); ++k)
            if (!std::isfinite(grad[l.offset + k])) throw NumericError("non-finite gradient in layer " + l.name);
}

namespace {

using nlohmann::json;

const char *activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation activation_from(const std::string &s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    throw ParseError("checkpoint: unknown activation '" + s + "'");
}

} // namespace

std::string save_checkpoint(const PolicyParams &params) {
    const auto &c = params.config();
    json doc;
    doc["format"] = "fjsplb-checkpoint";
    doc["version"] = 1;
    doc["config"] = {{"embed_dim", c.embed_dim},
                     {"hidden_dim", c.hidden_dim},
                     {"gnn_layers", c.gnn_layers},
                     {"activation", activation_name(c.activation)},
                     {"seed", c.seed},
                     {"category_count", c.category_count},
                     {"connectivity", to_string(c.graph.mode)},
                     {"alpha", c.graph.alpha},
                     {"features", c.graph.features.name()}};
    json tensors = json::array();
    for (const auto &l : params.layers()) {
        const auto *p = params.flat().data() + l.offset;
        tensors.push_back({{"name", l.name + ".weight"}, {"shape", {l.out, l.in}},
                           {"values", std::vector<double>(p, p + l.weight_count())}});
        tensors.push_back({{"name", l.name + ".bias"}, {"shape", {l.out}},
                           {"values", std::vector<double>(p + l.weight_count(), p + l.size())}});
    }
    doc["tensors"] = tensors;
    return doc.dump() + "\n";
}

PolicyParams load_checkpoint(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("checkpoint: parse error at byte ") + std::to_string(e.byte));
    }
    try {
        if (doc.at("format").get<std::string>() != "fjsplb-checkpoint" || doc.at("version").get<int>() != 1)
            throw ParseError("checkpoint: unsupported format or version");
        const json &jc = doc.at("config");
        NetConfig c;
        c.embed_dim = jc.at("embed_dim").get<int>();
        c.hidden_dim = jc.at("hidden_dim").get<int>();
        c.gnn_layers = jc.at("gnn_layers").get<int>();
        c.activation = activation_from(jc.at("activation").get<std::string>());
        c.seed = jc.at("seed").get<std::uint64_t>();
        c.category_count = jc.at("category_count").get<int>();
        c.graph.mode = connectivity_from_string(jc.at("connectivity").get<std::string>());
        c.graph.alpha = jc.at("alpha").get<double>();
        c.graph.features = FeatureMask::from_string(jc.at("features").get<std::string>());
        PolicyParams params(c);
        const json &tensors = doc.at("tensors");
        if (tensors.size() != 2 * params.layers().size()) throw ParseError("checkpoint: tensor count mismatch");
        std::size_t t = 0;
        for (const auto &l : params.layers()) {
            for (int part = 0; part < 2; ++part, ++t) {
                const json &jt = tensors[t];
                const std::string want = l.name + (part == 0 ? ".weight" : ".bias");
                if (jt.at("name").get<std::string>() != want) throw ParseError("checkpoint: expected tensor " + want);
                auto values = jt.at("values").get<std::vector<double>>();
                const std::size_t n = part == 0 ? l.weight_count() : static_cast<std::size_t>(l.out);
                if (values.size() != n) throw ParseError("checkpoint: tensor " + want + " has the wrong size");
                std::copy(values.begin(), values.end(),
                          params.flat().begin() + static_cast<std::ptrdiff_t>(l.offset + (part == 0 ? 0 : l.weight_count())));
            }
        }
        return params;
    } catch (const json::exception &e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    } catch (const ConfigError &e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void write_checkpoint_file(const std::string &path, const PolicyParams &params) {
    write_text_file(path, save_checkpoint(params));
}

PolicyParams read_checkpoint_file(const std::string &path) { return load_checkpoint(read_text_file(path)); }

} // namespace fjsplb
