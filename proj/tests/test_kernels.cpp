#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ldp/kernels.hpp"
#include "ldp/rng.hpp"

using namespace ldp;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (double& x : v) x = lo + (hi - lo) * rng.next_double();
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 100, 1001};

}  // namespace

TEST_CASE("scalar and avx2 backends are bit-identical") {
    const kern::Ops* simd = kern::avx2_ops();
    if (!simd) {
        MESSAGE("avx2 not available; equivalence suite skipped");
        return;
    }
    const kern::Ops& ref = kern::scalar_ops();
    Rng rng(42);

    for (size_t n : kSizes) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);

        std::vector<double> c1(n), c2(n);
        ref.add(a.data(), b.data(), c1.data(), n);
        simd->add(a.data(), b.data(), c2.data(), n);
        CHECK(bit_equal(c1, c2));

        ref.sub(a.data(), b.data(), c1.data(), n);
        simd->sub(a.data(), b.data(), c2.data(), n);
        CHECK(bit_equal(c1, c2));

        ref.mul(a.data(), b.data(), c1.data(), n);
        simd->mul(a.data(), b.data(), c2.data(), n);
        CHECK(bit_equal(c1, c2));

        std::vector<double> y1 = b, y2 = b;
        ref.axpy(1.7, a.data(), y1.data(), n);
        simd->axpy(1.7, a.data(), y2.data(), n);
        CHECK(bit_equal(y1, y2));

        y1 = a;
        y2 = a;
        ref.scale(0.37, y1.data(), n);
        simd->scale(0.37, y2.data(), n);
        CHECK(bit_equal(y1, y2));

        const double s1 = ref.sum(a.data(), n);
        const double s2 = simd->sum(a.data(), n);
        CHECK(std::memcmp(&s1, &s2, sizeof(double)) == 0);

        const double d1 = ref.dot(a.data(), b.data(), n);
        const double d2 = simd->dot(a.data(), b.data(), n);
        CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

        ref.relu(a.data(), c1.data(), n);
        simd->relu(a.data(), c2.data(), n);
        CHECK(bit_equal(c1, c2));

        std::vector<double> g1 = b, g2 = b;
        ref.relu_grad(a.data(), b.data(), g1.data(), n);
        simd->relu_grad(a.data(), b.data(), g2.data(), n);
        CHECK(bit_equal(g1, g2));

        // Adam: identical state evolution on both backends.
        auto p1 = a, p2 = a;
        auto gg1 = b, gg2 = b;
        std::vector<double> m1(n, 0.0), m2(n, 0.0), v1(n, 0.0), v2(n, 0.0);
        ref.adam_update(p1.data(), gg1.data(), m1.data(), v1.data(), n, 2e-4, 0.9,
                        0.999, 1e-8, 1.0 / (1.0 - 0.9), 1.0 / (1.0 - 0.999));
        simd->adam_update(p2.data(), gg2.data(), m2.data(), v2.data(), n, 2e-4, 0.9,
                          0.999, 1e-8, 1.0 / (1.0 - 0.9), 1.0 / (1.0 - 0.999));
        CHECK(bit_equal(p1, p2));
        CHECK(bit_equal(m1, m2));
        CHECK(bit_equal(v1, v2));
        CHECK(bit_equal(gg1, gg2));  // both zeroed
    }
}

TEST_CASE("kernel reductions agree with a long-double reference") {
    Rng rng(7);
    for (size_t n : kSizes) {
        const auto a = random_vec(rng, n);
        const auto b = random_vec(rng, n);
        long double acc = 0.0L;
        for (size_t i = 0; i < n; ++i) acc += (long double)a[i] * b[i];
        const double want = double(acc);
        const double got = kern::ops().dot(a.data(), b.data(), n);
        CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("matmul_acc matches a naive triple loop") {
    Rng rng(9);
    const int m = 7, k = 13, n = 5;
    const auto a = random_vec(rng, size_t(m) * k);
    const auto b = random_vec(rng, size_t(k) * n);
    std::vector<double> got(size_t(m) * n, 0.0);
    kern::matmul_acc(a.data(), b.data(), got.data(), m, k, n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            long double acc = 0.0L;
            for (int kk = 0; kk < k; ++kk)
                acc += (long double)a[size_t(i) * k + kk] * b[size_t(kk) * n + j];
            CHECK(got[size_t(i) * n + j] == doctest::Approx(double(acc)).epsilon(1e-12));
        }
    }
}

TEST_CASE("backend selection is sticky and reports a name") {
    kern::set_backend(kern::Backend::Scalar);
    CHECK(kern::backend_name() == "scalar");
    kern::set_backend(kern::Backend::Auto);
    if (kern::avx2_available())
        CHECK(kern::backend_name() == "avx2");
    else
        CHECK(kern::backend_name() == "scalar");
}
