#pragma once

#include <string>

namespace fpv::kernels {

/// Dense double-precision primitives behind the autodiff engine. Every entry
/// has a scalar reference implementation and may have SIMD variants; the
/// active table is chosen once at startup from CPU capabilities and can be
/// overridden with select() or the FPV_KERNELS environment variable
/// ("scalar", "avx2", "auto"). All matrices are row-major and contiguous.
struct Ops {
    const char* name;

    // C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]
    void (*gemm_nn)(int m, int n, int k, const double* a, const double* b, double* c,
                    bool accumulate);
    // C[m x n] = ... + A[m x k] * B^T, with B stored [n x k]
    void (*gemm_nt)(int m, int n, int k, const double* a, const double* b, double* c,
                    bool accumulate);
    // C[m x n] = ... + A^T * B, with A stored [k x m], B stored [k x n]
    void (*gemm_tn)(int m, int n, int k, const double* a, const double* b, double* c,
                    bool accumulate);

    void (*add)(int n, const double* a, const double* b, double* out);
    void (*hadamard)(int n, const double* a, const double* b, double* out);
    void (*mul_acc)(int n, const double* a, const double* b, double* acc);  // acc += a.*b
    void (*axpy)(int n, double alpha, const double* x, double* y);          // y += alpha*x
    double (*dot)(int n, const double* a, const double* b);

    void (*relu)(int n, const double* x, double* out);
    // acc += g where the forward output y was positive
    void (*relu_bwd)(int n, const double* y, const double* g, double* acc);
    // acc += g .* y .* (1 - y), y = sigmoid forward output
    void (*sigmoid_bwd)(int n, const double* y, const double* g, double* acc);

    void (*adam_step)(int n, double* w, double* m, double* v, const double* g, double lr,
                      double beta1, double beta2, double eps, double bc1, double bc2);
};

const Ops& scalar_ops();
bool avx2_available();
const Ops& avx2_ops();  // valid to call only when avx2_available()

/// The active dispatch table.
const Ops& active();

/// Force a backend ("scalar", "avx2") or re-run auto-detection ("auto").
/// Throws fpv::Error for unknown or unsupported names.
void select(const std::string& name);

}  // namespace fpv::kernels
