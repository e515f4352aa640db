#include "ldp/kernels.hpp"

#include <cmath>

// Reference kernels. Reductions run four interleaved accumulator lanes over
// the aligned body and fold them as (l0+l1)+(l2+l3); the SIMD backend mirrors
// this exactly, which is what makes the two bit-identical.

namespace ldp::kern {
namespace {

void add_scalar(const double* a, const double* b, double* c, size_t n) {
    for (size_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* c, size_t n) {
    for (size_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* c, size_t n) {
    for (size_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

void axpy_scalar(double a, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, size_t n) {
    for (size_t i = 0; i < n; ++i) x[i] *= a;
}

double sum_scalar(const double* x, size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        lane[0] += x[i];
        lane[1] += x[i + 1];
        lane[2] += x[i + 2];
        lane[3] += x[i + 3];
    }
    double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (size_t i = body; i < n; ++i) total += x[i];
    return total;
}

double dot_scalar(const double* x, const double* y, size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        lane[0] += x[i] * y[i];
        lane[1] += x[i + 1] * y[i + 1];
        lane[2] += x[i + 2] * y[i + 2];
        lane[3] += x[i + 3] * y[i + 3];
    }
    double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (size_t i = body; i < n; ++i) total += x[i] * y[i];
    return total;
}

void relu_scalar(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_scalar(const double* x, const double* dy, double* dx, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) dx[i] += dy[i];
    }
}

void adam_scalar(double* p, double* g, double* m, double* v, size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double inv_bc1, double inv_bc2) {
    const double om1 = 1.0 - beta1;
    const double om2 = 1.0 - beta2;
    for (size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + om1 * g[i];
        v[i] = beta2 * v[i] + om2 * (g[i] * g[i]);
        const double mhat = m[i] * inv_bc1;
        const double vhat = v[i] * inv_bc2;
        p[i] = p[i] - lr * (mhat / (std::sqrt(vhat) + eps));
        g[i] = 0.0;
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        add_scalar, sub_scalar,  mul_scalar,       axpy_scalar, scale_scalar,
        sum_scalar, dot_scalar, relu_scalar, relu_grad_scalar, adam_scalar,
    };
    return ops;
}

}  // namespace ldp::kern
