#pragma once

#include <cstddef>
#include <string_view>

// Vector kernels used by the autograd inner loops. Every kernel has a scalar
// reference implementation and an AVX2 variant selected at runtime. The two
// backends are bit-exact: reductions accumulate in four interleaved lanes
// whose partial sums are combined in a fixed order, and no FMA contraction
// is used on either side.

namespace ldp::kern {

struct Ops {
    // c[i] = a[i] + b[i]
    void (*add)(const double* a, const double* b, double* c, size_t n);
    // c[i] = a[i] - b[i]
    void (*sub)(const double* a, const double* b, double* c, size_t n);
    // c[i] = a[i] * b[i]
    void (*mul)(const double* a, const double* b, double* c, size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, size_t n);
    // sum of x, 4-lane blocked accumulation
    double (*sum)(const double* x, size_t n);
    // dot product, 4-lane blocked accumulation
    double (*dot)(const double* x, const double* y, size_t n);
    // y[i] = max(x[i], 0)
    void (*relu)(const double* x, double* y, size_t n);
    // dx[i] += dy[i] where x[i] > 0
    void (*relu_grad)(const double* x, const double* dy, double* dx, size_t n);
    // Adam update with bias correction; zeroes the gradient afterwards.
    // inv_bc1/inv_bc2 are the precomputed 1/(1-beta^t) factors.
    void (*adam_update)(double* p, double* g, double* m, double* v, size_t n,
                        double lr, double beta1, double beta2, double eps,
                        double inv_bc1, double inv_bc2);
};

enum class Backend { Auto, Scalar, Avx2 };

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unsupported by the CPU or the build
bool avx2_available();

// Active backend; Auto resolves once at first use.
void set_backend(Backend b);
const Ops& ops();
std::string_view backend_name();

// C (m x n) += A (m x k) * B (k x n), row-major, via axpy over rows of B.
// Accumulation order over k is identical in both backends.
void matmul_acc(const double* a, const double* b, double* c,
                size_t m, size_t k, size_t n);

}  // namespace ldp::kern
