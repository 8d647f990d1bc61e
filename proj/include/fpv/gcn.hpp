#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpv/graph.hpp"
#include "fpv/tape.hpp"

namespace fpv {

enum class Pooling : std::uint8_t { Mean, Sum };

Pooling parse_pooling(const std::string& name);
const char* to_string(Pooling p);

struct GcnConfig {
    int hidden_dim = 64;
    int num_layers = 3;  // gated layers after the input convolution
    Pooling pooling = Pooling::Mean;
    int tab_dim = 16;  // tabular feature width consumed by the regression head

    bool operator==(const GcnConfig&) const = default;
};

struct Linear {
    Tensor w;  // [in, out]
    Tensor b;  // [1, out]
};

/// One gated graph convolution layer:
///   out_i = relu( root(h_i) + sum_j gate_ij .* value(h_j) + h_i ),
///   gate_ij = sigmoid( key(h_i) + query(h_j) ),  j over neighbors of i.
struct GatedLayer {
    Linear root, value, key, query;
};

/// Joint model: symmetric-normalized input convolution with per-edge weights
/// (self-loop weight fixed at 1), a stack of gated layers with residuals,
/// graph pooling to a scalar floor-plan value, and a linear regression head
/// over [fpv, tabular features, constant]. The input convolution has no
/// standalone activation; the gated layers carry the nonlinearity.
struct GcnModel {
    GcnConfig cfg;
    Linear input_conv;  // 10 -> d
    std::vector<GatedLayer> layers;
    Linear fpv_head;  // d -> 1
    Linear reg_head;  // (1 + tab_dim) -> 1

    /// Glorot-uniform weights, zero biases, deterministic in the seed.
    void init(std::uint64_t seed);

    /// Stable parameter ordering shared by the optimizer and checkpoints.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;
};

/// Block-diagonal batch of graphs: node rows are concatenated, directed
/// edges carry both orientations of every undirected edge, and `seg` maps
/// each node row to its graph. Tabular rows are optional (scoring needs
/// only the graph branch).
struct GraphBatch {
    int n_nodes = 0;
    int n_graphs = 0;
    Tensor x;       // [N, 10] one-hot room types
    std::vector<int> src, dst;
    Tensor edge_w;  // [2E, 1], ones outside attribution
    std::vector<int> seg;
    Tensor tab;     // [B, tab_dim] or empty

    static GraphBatch build(const std::vector<const AccessGraph*>& graphs,
                            const std::vector<std::vector<double>>* tab_rows = nullptr);
};

struct JointNodes {
    int x_leaf = -1;
    int w_leaf = -1;
    int fpv = -1;   // [B, 1] raw floor plan values
    int pred = -1;  // [B, 1] rent predictions, -1 when no tabular block
    std::vector<int> param_leaves;  // aligned with GcnModel::parameters()
};

/// Builds the forward pass on the tape. `input_grads` makes the node-feature
/// and edge-weight leaves differentiable (attribution); `param_grads` makes
/// the parameter leaves differentiable (training).
JointNodes joint_forward(Tape& tape, const GcnModel& m, const GraphBatch& batch,
                         bool input_grads, bool param_grads);

/// Raw FPV per graph, batched in chunks. Isomorphic graphs score equal up to
/// floating-point reassociation.
std::vector<double> fpv_scores(const GcnModel& m, const std::vector<const AccessGraph*>& graphs);

/// Deviation scores: 10 * (x - mean) / sd + 50, population SD.
/// Throws on fewer than 2 scores or zero spread.
std::vector<double> fpv_deviation(const std::vector<double>& raw);

}  // namespace fpv
