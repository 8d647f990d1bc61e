#include "fpv/tape.hpp"

#include <cmath>
#include <cstring>

#include "fpv/graph.hpp"  // fpv::Error
#include "fpv/kernels.hpp"

namespace fpv {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw Error("ShapeMismatch", what);
}

}  // namespace

// new_node may reallocate nodes_, so ops snapshot input dimensions into
// locals before calling it and never hold Node references across it.
int Tape::new_node(Op op, int rows, int cols, int a, int b) {
    int id = static_cast<int>(nodes_.size());
    Node node;
    node.op = op;
    node.a = a;
    node.b = b;
    node.rows = rows;
    node.cols = cols;
    node.needs_grad = (a >= 0 && nodes_[a].needs_grad) || (b >= 0 && nodes_[b].needs_grad);
    nodes_.push_back(std::move(node));
    if (val_pool_.size() < nodes_.size()) {
        val_pool_.emplace_back();
        grad_pool_.emplace_back();
    }
    size_t need = static_cast<size_t>(rows) * cols;
    if (val_pool_[id].size() < need) val_pool_[id].resize(need);
    return id;
}

int Tape::leaf(const Tensor& t, bool needs_grad) {
    return leaf(t.rows, t.cols, t.ptr(), needs_grad);
}

int Tape::leaf(int rows, int cols, const double* values, bool needs_grad) {
    int id = new_node(Op::Leaf, rows, cols, -1, -1);
    nodes_[id].needs_grad = needs_grad;
    if (rows * cols > 0) std::memcpy(val(id), values, sizeof(double) * rows * cols);
    return id;
}

int Tape::matmul(int a, int b) {
    const int m = nodes_[a].rows, k = nodes_[a].cols, n = nodes_[b].cols;
    require(k == nodes_[b].rows, "matmul inner dimensions differ");
    int id = new_node(Op::MatMul, m, n, a, b);
    kernels::active().gemm_nn(m, n, k, val(a), val(b), val(id), false);
    return id;
}

int Tape::add(int a, int b) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    require(rows == nodes_[b].rows && cols == nodes_[b].cols, "add shapes differ");
    int id = new_node(Op::Add, rows, cols, a, b);
    kernels::active().add(rows * cols, val(a), val(b), val(id));
    return id;
}

int Tape::add_rowvec(int a, int b) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    require(nodes_[b].rows == 1 && nodes_[b].cols == cols, "add_rowvec needs a [1,n] bias");
    int id = new_node(Op::AddRowVec, rows, cols, a, b);
    for (int r = 0; r < rows; ++r)
        kernels::active().add(cols, val(a) + static_cast<size_t>(r) * cols, val(b),
                              val(id) + static_cast<size_t>(r) * cols);
    return id;
}

int Tape::add_const(int a, double s) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    int id = new_node(Op::AddConst, rows, cols, a, -1);
    nodes_[id].scalar = s;
    const double* x = val(a);
    double* y = val(id);
    for (int i = 0, n = rows * cols; i < n; ++i) y[i] = x[i] + s;
    return id;
}

int Tape::relu(int a) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    int id = new_node(Op::Relu, rows, cols, a, -1);
    kernels::active().relu(rows * cols, val(a), val(id));
    return id;
}

int Tape::sigmoid(int a) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    int id = new_node(Op::Sigmoid, rows, cols, a, -1);
    const double* x = val(a);
    double* y = val(id);
    for (int i = 0, n = rows * cols; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return id;
}

int Tape::hadamard(int a, int b) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    require(rows == nodes_[b].rows && cols == nodes_[b].cols, "hadamard shapes differ");
    int id = new_node(Op::Hadamard, rows, cols, a, b);
    kernels::active().hadamard(rows * cols, val(a), val(b), val(id));
    return id;
}

int Tape::rsqrt(int a) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    int id = new_node(Op::Rsqrt, rows, cols, a, -1);
    const double* x = val(a);
    double* y = val(id);
    for (int i = 0, n = rows * cols; i < n; ++i) y[i] = 1.0 / std::sqrt(x[i]);
    return id;
}

int Tape::gather_rows(int a, const std::vector<int>& idx) {
    const int cols = nodes_[a].cols;
    int id = new_node(Op::GatherRows, static_cast<int>(idx.size()), cols, a, -1);
    nodes_[id].idx = &idx;
    const double* src = val(a);
    double* dst = val(id);
    for (size_t e = 0; e < idx.size(); ++e)
        std::memcpy(dst + e * cols, src + static_cast<size_t>(idx[e]) * cols,
                    sizeof(double) * cols);
    return id;
}

int Tape::scatter_add_rows(int a, const std::vector<int>& idx, int out_rows) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    require(static_cast<size_t>(rows) == idx.size(), "scatter needs one index per row");
    int id = new_node(Op::ScatterAddRows, out_rows, cols, a, -1);
    nodes_[id].idx = &idx;
    double* dst = val(id);
    std::memset(dst, 0, sizeof(double) * out_rows * cols);
    const double* src = val(a);
    for (size_t e = 0; e < idx.size(); ++e)
        kernels::active().axpy(cols, 1.0, src + e * cols,
                               dst + static_cast<size_t>(idx[e]) * cols);
    return id;
}

int Tape::scale_rows(int a, int s) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    require(nodes_[s].rows == rows && nodes_[s].cols == 1, "scale_rows needs a [m,1] scale");
    int id = new_node(Op::ScaleRows, rows, cols, a, s);
    const double* src = val(a);
    const double* sc = val(s);
    double* dst = val(id);
    for (int r = 0; r < rows; ++r) {
        double f = sc[r];
        const double* row = src + static_cast<size_t>(r) * cols;
        double* out = dst + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) out[c] = f * row[c];
    }
    return id;
}

int Tape::segment_sum(int a, const std::vector<int>& seg, int n_segments) {
    const int rows = nodes_[a].rows, cols = nodes_[a].cols;
    require(static_cast<size_t>(rows) == seg.size(), "segment ids must cover all rows");
    int id = new_node(Op::SegmentSum, n_segments, cols, a, -1);
    nodes_[id].idx = &seg;
    double* dst = val(id);
    std::memset(dst, 0, sizeof(double) * n_segments * cols);
    const double* src = val(a);
    for (size_t r = 0; r < seg.size(); ++r)
        kernels::active().axpy(cols, 1.0, src + r * cols,
                               dst + static_cast<size_t>(seg[r]) * cols);
    return id;
}

int Tape::segment_mean(int a, const std::vector<int>& seg, int n_segments) {
    int id = segment_sum(a, seg, n_segments);
    Node& node = nodes_[id];
    node.op = Op::SegmentMean;
    node.seg_sizes.assign(n_segments, 0);
    for (int s : seg) node.seg_sizes[s]++;
    const int cols = node.cols;
    double* dst = val(id);
    for (int s = 0; s < n_segments; ++s) {
        require(node.seg_sizes[s] > 0, "segment_mean with an empty segment");
        double inv = 1.0 / node.seg_sizes[s];
        for (int c = 0; c < cols; ++c) dst[static_cast<size_t>(s) * cols + c] *= inv;
    }
    return id;
}

int Tape::concat_cols(int a, int b) {
    const int rows = nodes_[a].rows, ca = nodes_[a].cols, cb = nodes_[b].cols;
    require(rows == nodes_[b].rows, "concat_cols row counts differ");
    int id = new_node(Op::ConcatCols, rows, ca + cb, a, b);
    double* dst = val(id);
    const double* pa = val(a);
    const double* pb = val(b);
    for (int r = 0; r < rows; ++r) {
        std::memcpy(dst + static_cast<size_t>(r) * (ca + cb), pa + static_cast<size_t>(r) * ca,
                    sizeof(double) * ca);
        std::memcpy(dst + static_cast<size_t>(r) * (ca + cb) + ca,
                    pb + static_cast<size_t>(r) * cb, sizeof(double) * cb);
    }
    return id;
}

std::span<double> Tape::value(int id) {
    return {val_pool_[id].data(), static_cast<size_t>(nodes_[id].rows) * nodes_[id].cols};
}

std::span<const double> Tape::value(int id) const {
    return {val_pool_[id].data(), static_cast<size_t>(nodes_[id].rows) * nodes_[id].cols};
}

std::span<const double> Tape::grad(int id) const {
    return {grad_pool_[id].data(), static_cast<size_t>(nodes_[id].rows) * nodes_[id].cols};
}

void Tape::backward(int out, std::span<const double> seed) {
    size_t out_size = static_cast<size_t>(nodes_[out].rows) * nodes_[out].cols;
    require(seed.size() == out_size, "backward seed size mismatch");

    for (int id = 0; id <= out; ++id) {
        if (!nodes_[id].needs_grad) continue;
        size_t n = static_cast<size_t>(nodes_[id].rows) * nodes_[id].cols;
        if (grad_pool_[id].size() < n) grad_pool_[id].resize(n);
        std::memset(grad_pool_[id].data(), 0, sizeof(double) * n);
    }
    if (!nodes_[out].needs_grad) return;
    std::memcpy(grd(out), seed.data(), sizeof(double) * out_size);

    for (int id = out; id >= 0; --id) {
        if (nodes_[id].needs_grad) backward_node(id);
    }
}

void Tape::backward_node(int id) {
    const Node& node = nodes_[id];
    const auto& ops = kernels::active();
    const int n = node.rows * node.cols;
    const double* g = grd(id);

    auto wants = [&](int input) { return input >= 0 && nodes_[input].needs_grad; };

    switch (node.op) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            const int m = nodes_[node.a].rows, k = nodes_[node.a].cols, nn = node.cols;
            if (wants(node.a)) ops.gemm_nt(m, k, nn, g, val(node.b), grd(node.a), true);
            if (wants(node.b)) ops.gemm_tn(k, nn, m, val(node.a), g, grd(node.b), true);
            break;
        }
        case Op::Add:
            if (wants(node.a)) ops.axpy(n, 1.0, g, grd(node.a));
            if (wants(node.b)) ops.axpy(n, 1.0, g, grd(node.b));
            break;
        case Op::AddRowVec:
            if (wants(node.a)) ops.axpy(n, 1.0, g, grd(node.a));
            if (wants(node.b)) {
                double* gb = grd(node.b);
                for (int r = 0; r < node.rows; ++r)
                    ops.axpy(node.cols, 1.0, g + static_cast<size_t>(r) * node.cols, gb);
            }
            break;
        case Op::AddConst:
            if (wants(node.a)) ops.axpy(n, 1.0, g, grd(node.a));
            break;
        case Op::Relu:
            if (wants(node.a)) ops.relu_bwd(n, val(id), g, grd(node.a));
            break;
        case Op::Sigmoid:
            if (wants(node.a)) ops.sigmoid_bwd(n, val(id), g, grd(node.a));
            break;
        case Op::Hadamard:
            if (wants(node.a)) ops.mul_acc(n, g, val(node.b), grd(node.a));
            if (wants(node.b)) ops.mul_acc(n, g, val(node.a), grd(node.b));
            break;
        case Op::Rsqrt:
            if (wants(node.a)) {
                const double* y = val(id);
                double* ga = grd(node.a);
                for (int i = 0; i < n; ++i) ga[i] += g[i] * (-0.5 * y[i] * y[i] * y[i]);
            }
            break;
        case Op::GatherRows:
            if (wants(node.a)) {
                double* ga = grd(node.a);
                const auto& idx = *node.idx;
                for (size_t e = 0; e < idx.size(); ++e)
                    ops.axpy(node.cols, 1.0, g + e * node.cols,
                             ga + static_cast<size_t>(idx[e]) * node.cols);
            }
            break;
        case Op::ScatterAddRows:
            if (wants(node.a)) {
                double* ga = grd(node.a);
                const auto& idx = *node.idx;
                for (size_t e = 0; e < idx.size(); ++e)
                    ops.axpy(node.cols, 1.0, g + static_cast<size_t>(idx[e]) * node.cols,
                             ga + e * node.cols);
            }
            break;
        case Op::ScaleRows: {
            const double* sc = val(node.b);
            if (wants(node.a)) {
                double* ga = grd(node.a);
                for (int r = 0; r < node.rows; ++r)
                    ops.axpy(node.cols, sc[r], g + static_cast<size_t>(r) * node.cols,
                             ga + static_cast<size_t>(r) * node.cols);
            }
            if (wants(node.b)) {
                double* gs = grd(node.b);
                const double* a = val(node.a);
                for (int r = 0; r < node.rows; ++r)
                    gs[r] += ops.dot(node.cols, g + static_cast<size_t>(r) * node.cols,
                                     a + static_cast<size_t>(r) * node.cols);
            }
            break;
        }
        case Op::SegmentSum:
            if (wants(node.a)) {
                double* ga = grd(node.a);
                const auto& seg = *node.idx;
                for (size_t r = 0; r < seg.size(); ++r)
                    ops.axpy(node.cols, 1.0, g + static_cast<size_t>(seg[r]) * node.cols,
                             ga + r * node.cols);
            }
            break;
        case Op::SegmentMean:
            if (wants(node.a)) {
                double* ga = grd(node.a);
                const auto& seg = *node.idx;
                for (size_t r = 0; r < seg.size(); ++r)
                    ops.axpy(node.cols, 1.0 / node.seg_sizes[seg[r]],
                             g + static_cast<size_t>(seg[r]) * node.cols, ga + r * node.cols);
            }
            break;
        case Op::ConcatCols: {
            const int ca = nodes_[node.a].cols, cb = nodes_[node.b].cols;
            if (wants(node.a)) {
                double* ga = grd(node.a);
                for (int r = 0; r < node.rows; ++r)
                    ops.axpy(ca, 1.0, g + static_cast<size_t>(r) * node.cols,
                             ga + static_cast<size_t>(r) * ca);
            }
            if (wants(node.b)) {
                double* gb = grd(node.b);
                for (int r = 0; r < node.rows; ++r)
                    ops.axpy(cb, 1.0, g + static_cast<size_t>(r) * node.cols + ca,
                             gb + static_cast<size_t>(r) * cb);
            }
            break;
        }
    }
}

void Tape::reset() { nodes_.clear(); }

}  // namespace fpv
