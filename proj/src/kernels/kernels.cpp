#include "fpv/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

#include "fpv/graph.hpp"  // fpv::Error

namespace fpv::kernels {

namespace scalar {

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<size_t>(i) * n;
        if (!accumulate) std::memset(ci, 0, sizeof(double) * n);
        const double* ai = a + static_cast<size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            double av = ai[kk];
            if (av == 0.0) continue;
            const double* bk = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            double sum = 0.0;
            for (int kk = 0; kk < k; ++kk) sum += ai[kk] * bj[kk];
            ci[j] = accumulate ? ci[j] + sum : sum;
        }
    }
}

void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
    for (int kk = 0; kk < k; ++kk) {
        const double* ak = a + static_cast<size_t>(kk) * m;
        const double* bk = b + static_cast<size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            double av = ak[i];
            if (av == 0.0) continue;
            double* ci = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void add(int n, const double* a, const double* b, double* out) {
    for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void hadamard(int n, const double* a, const double* b, double* out) {
    for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(int n, const double* a, const double* b, double* acc) {
    for (int i = 0; i < n; ++i) acc[i] += a[i] * b[i];
}

void axpy(int n, double alpha, const double* x, double* y) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(int n, const double* a, const double* b) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void relu(int n, const double* x, double* out) {
    for (int i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(int n, const double* y, const double* g, double* acc) {
    for (int i = 0; i < n; ++i)
        if (y[i] > 0.0) acc[i] += g[i];
}

void sigmoid_bwd(int n, const double* y, const double* g, double* acc) {
    for (int i = 0; i < n; ++i) acc[i] += g[i] * y[i] * (1.0 - y[i]);
}

void adam_step(int n, double* w, double* m, double* v, const double* g, double lr, double beta1,
               double beta2, double eps, double bc1, double bc2) {
    for (int i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace scalar

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",          scalar::gemm_nn, scalar::gemm_nt,  scalar::gemm_tn,
        scalar::add,       scalar::hadamard, scalar::mul_acc, scalar::axpy,
        scalar::dot,       scalar::relu,     scalar::relu_bwd, scalar::sigmoid_bwd,
        scalar::adam_step,
    };
    return ops;
}

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const Ops* pick_auto() {
    if (avx2_available()) return &avx2_ops();
    return &scalar_ops();
}

const Ops* initial() {
    if (const char* env = std::getenv("FPV_KERNELS")) {
        std::string name = env;
        if (name == "scalar") return &scalar_ops();
        if (name == "avx2" && avx2_available()) return &avx2_ops();
        // Unknown or unsupported env override: fall through to auto.
    }
    return pick_auto();
}

const Ops*& active_slot() {
    static const Ops* slot = initial();
    return slot;
}

}  // namespace

const Ops& active() { return *active_slot(); }

void select(const std::string& name) {
    if (name == "scalar") {
        active_slot() = &scalar_ops();
    } else if (name == "avx2") {
        if (!avx2_available()) throw Error("KernelUnsupported", "AVX2 not available on this CPU");
        active_slot() = &avx2_ops();
    } else if (name == "auto") {
        active_slot() = pick_auto();
    } else {
        throw Error("KernelUnknown", "unknown kernel backend '" + name + "'");
    }
}

}  // namespace fpv::kernels
