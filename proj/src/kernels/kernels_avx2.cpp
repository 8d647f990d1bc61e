// AVX2+FMA variants of the kernel table. Compiled with -mavx2 -mfma in its
// own translation unit; only reached through runtime dispatch.

#include "fpv/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace fpv::kernels {

namespace avx2 {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

// Row-of-C register blocking: accumulate a 16-column tile of C across the
// whole k loop, then store once.
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
    constexpr int kTile = 16;
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * n;
        int j = 0;
        for (; j + kTile <= n; j += kTile) {
            __m256d c0, c1, c2, c3;
            if (accumulate) {
                c0 = _mm256_loadu_pd(ci + j);
                c1 = _mm256_loadu_pd(ci + j + 4);
                c2 = _mm256_loadu_pd(ci + j + 8);
                c3 = _mm256_loadu_pd(ci + j + 12);
            } else {
                c0 = c1 = c2 = c3 = _mm256_setzero_pd();
            }
            for (int kk = 0; kk < k; ++kk) {
                const double* bk = b + static_cast<size_t>(kk) * n + j;
                __m256d av = _mm256_set1_pd(ai[kk]);
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bk), c0);
                c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bk + 4), c1);
                c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bk + 8), c2);
                c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bk + 12), c3);
            }
            _mm256_storeu_pd(ci + j, c0);
            _mm256_storeu_pd(ci + j + 4, c1);
            _mm256_storeu_pd(ci + j + 8, c2);
            _mm256_storeu_pd(ci + j + 12, c3);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d c0 = accumulate ? _mm256_loadu_pd(ci + j) : _mm256_setzero_pd();
            for (int kk = 0; kk < k; ++kk) {
                __m256d av = _mm256_set1_pd(ai[kk]);
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<size_t>(kk) * n + j), c0);
            }
            _mm256_storeu_pd(ci + j, c0);
        }
        for (; j < n; ++j) {
            double sum = accumulate ? ci[j] : 0.0;
            for (int kk = 0; kk < k; ++kk) sum += ai[kk] * b[static_cast<size_t>(kk) * n + j];
            ci[j] = sum;
        }
    }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            __m256d acc = _mm256_setzero_pd();
            int kk = 0;
            for (; kk + 4 <= k; kk += 4)
                acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + kk), _mm256_loadu_pd(bj + kk), acc);
            double sum = hsum(acc);
            for (; kk < k; ++kk) sum += ai[kk] * bj[kk];
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
            __m256d avv = _mm256_set1_pd(av);
            int j = 0;
            for (; j + 4 <= n; j += 4)
                _mm256_storeu_pd(ci + j,
                                 _mm256_fmadd_pd(avv, _mm256_loadu_pd(bk + j),
                                                 _mm256_loadu_pd(ci + j)));
            for (; j < n; ++j) ci[j] += av * bk[j];
        }
    }
}

void add(int n, const double* a, const double* b, double* out) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void hadamard(int n, const double* a, const double* b, double* out) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(int n, const double* a, const double* b, double* acc) {
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                                  _mm256_loadu_pd(acc + i)));
    for (; i < n; ++i) acc[i] += a[i] * b[i];
}

void axpy(int n, double alpha, const double* x, double* y) {
    __m256d av = _mm256_set1_pd(alpha);
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(int n, const double* a, const double* b) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double sum = hsum(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void relu(int n, const double* x, double* out) {
    __m256d zero = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(int n, const double* y, const double* g, double* acc) {
    __m256d zero = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(y + i), zero, _CMP_GT_OQ);
        __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), gated));
    }
    for (; i < n; ++i)
        if (y[i] > 0.0) acc[i] += g[i];
}

void sigmoid_bwd(int n, const double* y, const double* g, double* acc) {
    __m256d one = _mm256_set1_pd(1.0);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        __m256d gy = _mm256_mul_pd(_mm256_loadu_pd(g + i), yv);
        __m256d d = _mm256_mul_pd(gy, _mm256_sub_pd(one, yv));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), d));
    }
    for (; i < n; ++i) acc[i] += g[i] * y[i] * (1.0 - y[i]);
}

void adam_step(int n, double* w, double* m, double* v, const double* g, double lr, double beta1,
               double beta2, double eps, double bc1, double bc2) {
    __m256d b1 = _mm256_set1_pd(beta1), nb1 = _mm256_set1_pd(1.0 - beta1);
    __m256d b2 = _mm256_set1_pd(beta2), nb2 = _mm256_set1_pd(1.0 - beta2);
    __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
    __m256d ibc1 = _mm256_set1_pd(1.0 / bc1), ibc2 = _mm256_set1_pd(1.0 / bc2);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_fmadd_pd(nb1, gv, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(nb2, _mm256_mul_pd(gv, gv),
                                     _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(mv, ibc1);
        __m256d vhat = _mm256_mul_pd(vv, ibc2);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        __m256d upd = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom);
        _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace avx2

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2",          avx2::gemm_nn, avx2::gemm_nt,  avx2::gemm_tn,
        avx2::add,       avx2::hadamard, avx2::mul_acc, avx2::axpy,
        avx2::dot,       avx2::relu,     avx2::relu_bwd, avx2::sigmoid_bwd,
        avx2::adam_step,
    };
    return ops;
}

}  // namespace fpv::kernels

#else

namespace fpv::kernels {
const Ops& avx2_ops() { return scalar_ops(); }
}  // namespace fpv::kernels

#endif
