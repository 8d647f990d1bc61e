#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fpv {

/// Dense row-major matrix. Vectors are column matrices (n x 1) or row
/// matrices (1 x n) depending on role.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    int size() const { return rows * cols; }
    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

/// Define-by-run reverse-mode tape over matrix operations. Forward values
/// are computed eagerly as nodes are created; backward() walks the nodes in
/// reverse. Per-node value/grad buffers are pooled and survive reset(), so a
/// tape reused across training steps stops allocating after the first step.
///
/// Index arguments (gather/scatter/segment ids) are borrowed: the caller
/// keeps them alive for the lifetime of the tape generation.
class Tape {
public:
    // Leaves. `needs_grad` controls whether backward() accumulates into the
    // node; anything derived from a grad-requiring node gets gradients too.
    int leaf(const Tensor& t, bool needs_grad);
    int leaf(int rows, int cols, const double* values, bool needs_grad);

    int matmul(int a, int b);                 // [m,k]x[k,n]
    int add(int a, int b);                    // same shape
    int add_rowvec(int a, int b);             // [m,n] + broadcast [1,n]
    int add_const(int a, double s);
    int relu(int a);
    int sigmoid(int a);
    int hadamard(int a, int b);
    int rsqrt(int a);                         // elementwise x^(-1/2), x > 0
    int gather_rows(int a, const std::vector<int>& idx);
    int scatter_add_rows(int a, const std::vector<int>& idx, int out_rows);
    int scale_rows(int a, int s);             // [m,n] rows scaled by [m,1]
    int segment_mean(int a, const std::vector<int>& seg, int n_segments);
    int segment_sum(int a, const std::vector<int>& seg, int n_segments);
    int concat_cols(int a, int b);

    int rows(int id) const { return nodes_[id].rows; }
    int cols(int id) const { return nodes_[id].cols; }
    std::span<double> value(int id);
    std::span<const double> value(int id) const;
    /// Gradient buffer of a node; valid after backward() for nodes that
    /// require grad.
    std::span<const double> grad(int id) const;

    /// Seeds d(out)/d(out) = seed and accumulates gradients down the tape.
    /// seed must have out's size.
    void backward(int out, std::span<const double> seed);

    /// Clears node metadata, keeping pooled buffers for reuse.
    void reset();

private:
    enum class Op : std::uint8_t {
        Leaf, MatMul, Add, AddRowVec, AddConst, Relu, Sigmoid, Hadamard, Rsqrt,
        GatherRows, ScatterAddRows, ScaleRows, SegmentMean, SegmentSum, ConcatCols,
    };

    struct Node {
        Op op = Op::Leaf;
        int a = -1;
        int b = -1;
        int rows = 0;
        int cols = 0;
        bool needs_grad = false;
        double scalar = 0.0;
        const std::vector<int>* idx = nullptr;
        std::vector<int> seg_sizes;  // SegmentMean only
    };

    int new_node(Op op, int rows, int cols, int a, int b);
    double* val(int id) { return val_pool_[id].data(); }
    double* grd(int id) { return grad_pool_[id].data(); }
    void backward_node(int id);

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> val_pool_;
    std::vector<std::vector<double>> grad_pool_;
};

}  // namespace fpv
