#include "ldp/kernels.hpp"

#include <atomic>

namespace ldp::kern {

#ifdef LDP_HAVE_AVX2
const Ops* avx2_ops_impl();
#endif

bool avx2_available() {
#ifdef LDP_HAVE_AVX2
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const Ops* avx2_ops() {
#ifdef LDP_HAVE_AVX2
    if (avx2_available()) return avx2_ops_impl();
#endif
    return nullptr;
}

namespace {
std::atomic<const Ops*> g_active{nullptr};

const Ops* resolve(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &scalar_ops();
        case Backend::Avx2:
            if (const Ops* o = avx2_ops()) return o;
            return &scalar_ops();
        case Backend::Auto:
        default:
            if (const Ops* o = avx2_ops()) return o;
            return &scalar_ops();
    }
}
}  // namespace

void set_backend(Backend b) { g_active.store(resolve(b), std::memory_order_relaxed); }

const Ops& ops() {
    const Ops* o = g_active.load(std::memory_order_relaxed);
    if (!o) {
        o = resolve(Backend::Auto);
        g_active.store(o, std::memory_order_relaxed);
    }
    return *o;
}

std::string_view backend_name() {
    return &ops() == &scalar_ops() ? "scalar" : "avx2";
}

void matmul_acc(const double* a, const double* b, double* c,
                size_t m, size_t k, size_t n) {
    const Ops& o = ops();
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            if (aik != 0.0) o.axpy(aik, b + kk * n, crow, n);
        }
    }
}

}  // namespace ldp::kern
