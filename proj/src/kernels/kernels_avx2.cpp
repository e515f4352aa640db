#ifdef LDP_HAVE_AVX2

#include "ldp/kernels.hpp"

#include <cmath>
#include <immintrin.h>

// AVX2 variants. 4 doubles per vector matches the scalar reference's four
// accumulator lanes, and multiply/add stay separate instructions (the build
// disables contraction), so results are bit-identical to the reference.

namespace ldp::kern {
namespace {

void add_avx2(const double* a, const double* b, double* c, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(c + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                              _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) c[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* c, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(c + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                              _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) c[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* c, size_t n) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(c + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                              _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) c[i] = a[i] * b[i];
}

void axpy_avx2(double a, const double* x, double* y, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (; i < n; ++i) x[i] *= a;
}

// Fold the four lanes as (l0+l1)+(l2+l3), same as the scalar reference.
double hsum_lanes(__m256d acc) {
    double lane[4];
    _mm256_storeu_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sum_avx2(const double* x, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double total = hsum_lanes(acc);
    for (size_t i = body; i < n; ++i) total += x[i];
    return total;
}

double dot_avx2(const double* x, const double* y, size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                           _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, prod);
    }
    double total = hsum_lanes(acc);
    for (size_t i = body; i < n; ++i) total += x[i] * y[i];
    return total;
}

void relu_avx2(const double* x, double* y, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx2(const double* x, const double* dy, double* dx, size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

void adam_avx2(double* p, double* g, double* m, double* v, size_t n,
               double lr, double beta1, double beta2, double eps,
               double inv_bc1, double inv_bc2) {
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vom1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d vom2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vibc1 = _mm256_set1_pd(inv_bc1);
    const __m256d vibc2 = _mm256_set1_pd(inv_bc2);
    const __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_add_pd(_mm256_mul_pd(vb1, mi), _mm256_mul_pd(vom1, gi));
        vi = _mm256_add_pd(_mm256_mul_pd(vb2, vi),
                           _mm256_mul_pd(vom2, _mm256_mul_pd(gi, gi)));
        const __m256d mhat = _mm256_mul_pd(mi, vibc1);
        const __m256d vhat = _mm256_mul_pd(vi, vibc2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        const __m256d upd = _mm256_mul_pd(vlr, _mm256_div_pd(mhat, denom));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        _mm256_storeu_pd(g + i, zero);
    }
    const double om1 = 1.0 - beta1;
    const double om2 = 1.0 - beta2;
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + om1 * g[i];
        v[i] = beta2 * v[i] + om2 * (g[i] * g[i]);
        const double mhat = m[i] * inv_bc1;
        const double vhat = v[i] * inv_bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
        g[i] = 0.0;
    }
}

}  // namespace

const Ops* avx2_ops_impl() {
    static const Ops ops = {
        add_avx2, sub_avx2,  mul_avx2,       axpy_avx2, scale_avx2,
        sum_avx2, dot_avx2, relu_avx2, relu_grad_avx2, adam_avx2,
    };
    return &ops;
}

}  // namespace ldp::kern

#endif  // LDP_HAVE_AVX2
