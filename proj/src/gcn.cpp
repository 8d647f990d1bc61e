#include "fpv/gcn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace fpv {

Pooling parse_pooling(const std::string& name) {
    if (name == "mean") return Pooling::Mean;
    if (name == "sum") return Pooling::Sum;
    throw Error("BadPooling", "pooling must be 'mean' or 'sum', got '" + name + "'");
}

const char* to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "sum"; }

namespace {

void glorot(Tensor& w, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / (w.rows + w.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w.data) v = dist(rng);
}

Linear make_linear(int in, int out) {
    Linear l;
    l.w = Tensor(in, out);
    l.b = Tensor(1, out);
    return l;
}

}  // namespace

void GcnModel::init(std::uint64_t seed) {
    input_conv = make_linear(kNumRoomLabels, cfg.hidden_dim);
    layers.clear();
    for (int i = 0; i < cfg.num_layers; ++i) {
        GatedLayer layer;
        layer.root = make_linear(cfg.hidden_dim, cfg.hidden_dim);
        layer.value = make_linear(cfg.hidden_dim, cfg.hidden_dim);
        layer.key = make_linear(cfg.hidden_dim, cfg.hidden_dim);
        layer.query = make_linear(cfg.hidden_dim, cfg.hidden_dim);
        layers.push_back(std::move(layer));
    }
    fpv_head = make_linear(cfg.hidden_dim, 1);
    reg_head = make_linear(1 + cfg.tab_dim, 1);

    std::mt19937_64 rng(seed);
    for (Tensor* t : parameters()) {
        if (t->rows > 1) glorot(*t, rng);  // weights; biases stay zero
    }
}

std::vector<Tensor*> GcnModel::parameters() {
    std::vector<Tensor*> out{&input_conv.w, &input_conv.b};
    for (auto& layer : layers) {
        for (Linear* lin : {&layer.root, &layer.value, &layer.key, &layer.query}) {
            out.push_back(&lin->w);
            out.push_back(&lin->b);
        }
    }
    out.push_back(&fpv_head.w);
    out.push_back(&fpv_head.b);
    out.push_back(&reg_head.w);
    out.push_back(&reg_head.b);
    return out;
}

std::vector<const Tensor*> GcnModel::parameters() const {
    auto mutable_params = const_cast<GcnModel*>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

std::vector<std::string> GcnModel::parameter_names() const {
    std::vector<std::string> out{"input_conv.w", "input_conv.b"};
    for (size_t i = 0; i < layers.size(); ++i) {
        for (const char* part : {"root", "value", "key", "query"}) {
            out.push_back("layer" + std::to_string(i) + "." + part + ".w");
            out.push_back("layer" + std::to_string(i) + "." + part + ".b");
        }
    }
    out.push_back("fpv_head.w");
    out.push_back("fpv_head.b");
    out.push_back("reg_head.w");
    out.push_back("reg_head.b");
    return out;
}

GraphBatch GraphBatch::build(const std::vector<const AccessGraph*>& graphs,
                             const std::vector<std::vector<double>>* tab_rows) {
    GraphBatch batch;
    batch.n_graphs = static_cast<int>(graphs.size());
    int total_nodes = 0, total_directed = 0;
    for (const AccessGraph* g : graphs) {
        total_nodes += g->node_count();
        total_directed += 2 * g->edge_count();
    }
    batch.n_nodes = total_nodes;
    batch.x = Tensor(total_nodes, kNumRoomLabels);
    batch.edge_w = Tensor(total_directed, 1);
    batch.src.reserve(total_directed);
    batch.dst.reserve(total_directed);
    batch.seg.resize(total_nodes);

    int node_base = 0;
    for (int gi = 0; gi < batch.n_graphs; ++gi) {
        const AccessGraph& g = *graphs[gi];
        for (int v = 0; v < g.node_count(); ++v) {
            batch.x.at(node_base + v, static_cast<int>(g.labels[v])) = 1.0;
            batch.seg[node_base + v] = gi;
        }
        for (const auto& [a, b] : g.edges) {
            batch.src.push_back(node_base + a);
            batch.dst.push_back(node_base + b);
            batch.src.push_back(node_base + b);
            batch.dst.push_back(node_base + a);
        }
        node_base += g.node_count();
    }
    for (double& w : batch.edge_w.data) w = 1.0;

    if (tab_rows) {
        if (tab_rows->size() != graphs.size())
            throw Error("ShapeMismatch", "one tabular row per graph required");
        int tab_dim = tab_rows->empty() ? 0 : static_cast<int>(tab_rows->front().size());
        batch.tab = Tensor(batch.n_graphs, tab_dim);
        for (int r = 0; r < batch.n_graphs; ++r) {
            const auto& row = (*tab_rows)[r];
            if (static_cast<int>(row.size()) != tab_dim)
                throw Error("ShapeMismatch", "ragged tabular rows");
            for (int c = 0; c < tab_dim; ++c) batch.tab.at(r, c) = row[c];
        }
    }
    return batch;
}

namespace {

struct LinearLeaves {
    int w = -1;
    int b = -1;
};

LinearLeaves push_linear(Tape& tape, const Linear& lin, bool grads, std::vector<int>& out) {
    LinearLeaves l;
    l.w = tape.leaf(lin.w, grads);
    l.b = tape.leaf(lin.b, grads);
    out.push_back(l.w);
    out.push_back(l.b);
    return l;
}

int affine(Tape& tape, int x, const LinearLeaves& lin) {
    return tape.add_rowvec(tape.matmul(x, lin.w), lin.b);
}

}  // namespace

JointNodes joint_forward(Tape& tape, const GcnModel& m, const GraphBatch& batch,
                         bool input_grads, bool param_grads) {
    JointNodes out;
    out.x_leaf = tape.leaf(batch.x, input_grads);
    out.w_leaf = tape.leaf(batch.edge_w, input_grads);

    LinearLeaves conv = push_linear(tape, m.input_conv, param_grads, out.param_leaves);
    std::vector<std::array<LinearLeaves, 4>> gated;
    for (const auto& layer : m.layers) {
        std::array<LinearLeaves, 4> leaves{
            push_linear(tape, layer.root, param_grads, out.param_leaves),
            push_linear(tape, layer.value, param_grads, out.param_leaves),
            push_linear(tape, layer.key, param_grads, out.param_leaves),
            push_linear(tape, layer.query, param_grads, out.param_leaves),
        };
        gated.push_back(leaves);
    }
    LinearLeaves fpv_head = push_linear(tape, m.fpv_head, param_grads, out.param_leaves);
    LinearLeaves reg_head = push_linear(tape, m.reg_head, param_grads, out.param_leaves);

    // Input convolution: out = D^-1/2 (A_w + I) D^-1/2 X W + b, self-loop
    // weight pinned to 1 so a zero edge weight reproduces edge deletion.
    int xw = tape.matmul(out.x_leaf, conv.w);
    int h;
    if (!batch.src.empty()) {
        int deg = tape.add_const(tape.scatter_add_rows(out.w_leaf, batch.dst, batch.n_nodes), 1.0);
        int dinv = tape.rsqrt(deg);
        int coeff = tape.hadamard(tape.hadamard(out.w_leaf, tape.gather_rows(dinv, batch.src)),
                                  tape.gather_rows(dinv, batch.dst));
        int msg = tape.scatter_add_rows(tape.scale_rows(tape.gather_rows(xw, batch.src), coeff),
                                        batch.dst, batch.n_nodes);
        int self = tape.scale_rows(xw, tape.hadamard(dinv, dinv));
        h = tape.add_rowvec(tape.add(msg, self), conv.b);
    } else {
        // No edges anywhere in the batch: normalization is the identity.
        h = tape.add_rowvec(xw, conv.b);
    }

    for (const auto& leaves : gated) {
        int root = affine(tape, h, leaves[0]);
        int value = affine(tape, h, leaves[1]);
        int key = affine(tape, h, leaves[2]);
        int query = affine(tape, h, leaves[3]);
        int combined;
        if (!batch.src.empty()) {
            int gate = tape.sigmoid(tape.add(tape.gather_rows(key, batch.dst),
                                             tape.gather_rows(query, batch.src)));
            int msg = tape.hadamard(gate, tape.gather_rows(value, batch.src));
            int agg = tape.scatter_add_rows(msg, batch.dst, batch.n_nodes);
            combined = tape.add(root, agg);
        } else {
            combined = root;
        }
        h = tape.relu(tape.add(combined, h));
    }

    int pooled = m.cfg.pooling == Pooling::Mean ? tape.segment_mean(h, batch.seg, batch.n_graphs)
                                                : tape.segment_sum(h, batch.seg, batch.n_graphs);
    out.fpv = affine(tape, pooled, fpv_head);

    if (batch.tab.size() > 0) {
        if (batch.tab.cols != m.cfg.tab_dim)
            throw Error("ShapeMismatch", "tabular width does not match the model");
        int tab = tape.leaf(batch.tab, false);
        out.pred = affine(tape, tape.concat_cols(out.fpv, tab), reg_head);
    }
    return out;
}

std::vector<double> fpv_scores(const GcnModel& m, const std::vector<const AccessGraph*>& graphs) {
    std::vector<double> scores;
    scores.reserve(graphs.size());
    constexpr size_t kChunk = 1024;
    Tape tape;
    for (size_t start = 0; start < graphs.size(); start += kChunk) {
        size_t stop = std::min(graphs.size(), start + kChunk);
        std::vector<const AccessGraph*> chunk(graphs.begin() + start, graphs.begin() + stop);
        GraphBatch batch = GraphBatch::build(chunk);
        tape.reset();
        JointNodes nodes = joint_forward(tape, m, batch, false, false);
        auto vals = tape.value(nodes.fpv);
        scores.insert(scores.end(), vals.begin(), vals.end());
    }
    return scores;
}

std::vector<double> fpv_deviation(const std::vector<double>& raw) {
    if (raw.size() < 2) throw Error("TooFewScores", "deviation needs at least 2 scores");
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= static_cast<double>(raw.size());
    double var = 0.0;
    for (double v : raw) var += (v - mean) * (v - mean);
    var /= static_cast<double>(raw.size());
    double sd = std::sqrt(var);
    if (sd == 0.0) throw Error("ZeroSpread", "deviation undefined for constant scores");
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = 10.0 * (raw[i] - mean) / sd + 50.0;
    return out;
}

}  // namespace fpv
