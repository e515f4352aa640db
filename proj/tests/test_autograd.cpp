#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fd_check.hpp"
#include "ldp/autograd.hpp"
#include "ldp/optim.hpp"
#include "ldp/rng.hpp"

using namespace ldp;
using ag::Tensor;

namespace {

Tensor random_tensor(Rng& rng, ag::Shape shape, bool requires_grad = true,
                     double spread = 1.0) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> vals(size_t(n), 0.0);
    for (double& v : vals) v = spread * (2.0 * rng.next_double() - 1.0);
    Tensor t = Tensor::from_data(std::move(shape), std::move(vals));
    t.set_requires_grad(requires_grad);
    return t;
}

// Fixed random projection making any output a scalar, so every op can be
// checked through the same loss.
std::vector<double> projection(Rng& rng, int64_t n) {
    std::vector<double> w(size_t(n), 0.0);
    for (double& v : w) v = 2.0 * rng.next_double() - 1.0;
    return w;
}

double project(const Tensor& t, const std::vector<double>& w) {
    double s = 0.0;
    for (int64_t i = 0; i < t.size(); ++i) s += t.data()[i] * w[size_t(i)];
    return s;
}

Tensor project_graph(const Tensor& t, const std::vector<double>& w) {
    Tensor wt = Tensor::from_data(t.shape(), w);
    return ag::sum(ag::mul(t, wt));
}

}  // namespace

TEST_CASE("softmax of a symmetric pair is uniform") {
    Tensor x = Tensor::from_data({2}, {0.0, 0.0});
    Tensor y = ag::softmax(x);
    CHECK(y.data()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y.data()[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(3);
    Tensor x = random_tensor(rng, {5, 9}, false, 4.0);
    Tensor y = ag::softmax(x);
    for (int r = 0; r < 5; ++r) {
        double s = 0.0;
        for (int c = 0; c < 9; ++c) s += y.data()[r * 9 + c];
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("cross entropy of uniform logits is ln 2 and never negative") {
    Tensor x = Tensor::from_data({2}, {0.0, 0.0});
    CHECK(ag::cross_entropy(x, 0).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Tensor logits = random_tensor(rng, {6}, false, 5.0);
        CHECK(ag::cross_entropy(logits, int(rng.below(6))).item() >= 0.0);
    }
}

TEST_CASE("matmul by the identity is exact") {
    Rng rng(11);
    Tensor a = random_tensor(rng, {3, 7}, false);
    std::vector<double> eye(9, 0.0);
    eye[0] = eye[4] = eye[8] = 1.0;
    Tensor i3 = Tensor::from_data({3, 3}, eye);
    Tensor out = ag::matmul(i3, a);
    CHECK(std::memcmp(out.data(), a.data(), sizeof(double) * 21) == 0);
}

TEST_CASE("backward of sum gives ones; backward of x*x gives 2x") {
    Rng rng(13);
    Tensor x = random_tensor(rng, {4, 3});
    ag::backward(ag::sum(x));
    for (int64_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == 1.0);

    Tensor y = random_tensor(rng, {4, 3});
    ag::backward(ag::sum(ag::mul(y, y)));
    for (int64_t i = 0; i < y.size(); ++i)
        CHECK(y.grad()[i] == doctest::Approx(2.0 * y.data()[i]).epsilon(1e-12));
}

TEST_CASE("gradient accumulates over shared subexpressions") {
    Tensor x = Tensor::from_data({2}, {1.5, -0.5});
    x.set_requires_grad(true);
    Tensor shared = ag::scale(x, 2.0);
    Tensor loss = ag::sum(ag::add(shared, shared));
    ag::backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(4.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("non-scalar loss is rejected") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0});
    x.set_requires_grad(true);
    CHECK_THROWS_AS(ag::backward(ag::relu(x)), ag::ShapeError);
}

TEST_CASE("shape mismatches name both shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 5});
    try {
        (void)ag::add(a, b);
        FAIL("expected ShapeError");
    } catch (const ag::ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2, 3]") != std::string::npos);
        CHECK(msg.find("[4, 5]") != std::string::npos);
    }
}

TEST_CASE("finite differences validate every op") {
    Rng rng(17);
    const double tol = 1e-4;

    auto check_unary = [&](const char* name, auto op, Tensor x) {
        auto w = projection(rng, op(x).size());
        ag::backward(project_graph(op(x), w));
        std::vector<std::vector<double>> analytic{x.grad_values()};
        x.zero_grad();
        const double err = fd::max_rel_error(
            {x}, [&] { return project(op(x), w); }, analytic);
        INFO(name);
        CHECK(err <= tol);
    };

    check_unary("relu", [](const Tensor& t) { return ag::relu(t); },
                [&] {
                    // keep inputs away from the kink
                    Tensor t = random_tensor(rng, {3, 4});
                    for (int64_t i = 0; i < t.size(); ++i)
                        if (std::abs(t.data()[i]) < 0.05)
                            t.data()[i] = t.data()[i] < 0 ? -0.1 : 0.1;
                    return t;
                }());
    check_unary("gelu", [](const Tensor& t) { return ag::gelu(t); },
                random_tensor(rng, {3, 4}));
    check_unary("layer_norm", [](const Tensor& t) { return ag::layer_norm(t); },
                random_tensor(rng, {3, 4}));
    check_unary("softmax", [](const Tensor& t) { return ag::softmax(t); },
                random_tensor(rng, {3, 4}));
    check_unary("transpose", [](const Tensor& t) { return ag::transpose(t); },
                random_tensor(rng, {3, 4}));
    check_unary("reshape", [](const Tensor& t) { return ag::reshape(t, {4, 3}); },
                random_tensor(rng, {3, 4}));
    check_unary("scale", [](const Tensor& t) { return ag::scale(t, -1.7); },
                random_tensor(rng, {3, 4}));

    SUBCASE("add / mul, equal shapes and row broadcast") {
        for (bool broadcast : {false, true}) {
            Tensor a = random_tensor(rng, {3, 4});
            Tensor b = broadcast ? random_tensor(rng, {4}) : random_tensor(rng, {3, 4});
            for (auto op : {0, 1}) {
                auto run = [&] { return op == 0 ? ag::add(a, b) : ag::mul(a, b); };
                auto w = projection(rng, run().size());
                ag::backward(project_graph(run(), w));
                std::vector<std::vector<double>> analytic{a.grad_values(),
                                                          b.grad_values()};
                a.zero_grad();
                b.zero_grad();
                const double err = fd::max_rel_error(
                    {a, b}, [&] { return project(run(), w); }, analytic);
                CHECK(err <= tol);
            }
        }
    }

    SUBCASE("matmul") {
        Tensor a = random_tensor(rng, {3, 4});
        Tensor b = random_tensor(rng, {4, 5});
        auto run = [&] { return ag::matmul(a, b); };
        auto w = projection(rng, 15);
        ag::backward(project_graph(run(), w));
        std::vector<std::vector<double>> analytic{a.grad_values(), b.grad_values()};
        a.zero_grad();
        b.zero_grad();
        CHECK(fd::max_rel_error({a, b}, [&] { return project(run(), w); }, analytic) <=
              tol);
    }

    SUBCASE("concat and split, both axes") {
        for (int axis : {0, 1}) {
            Tensor a = random_tensor(rng, {2, 4});
            Tensor b = random_tensor(rng, {2, 4});
            auto run = [&] { return ag::concat({a, b}, axis); };
            auto w = projection(rng, 16);
            ag::backward(project_graph(run(), w));
            std::vector<std::vector<double>> analytic{a.grad_values(), b.grad_values()};
            a.zero_grad();
            b.zero_grad();
            CHECK(fd::max_rel_error({a, b}, [&] { return project(run(), w); },
                                    analytic) <= tol);

            Tensor c = random_tensor(rng, {4, 4});
            auto run_split = [&] { return ag::split(c, 2, axis)[1]; };
            auto w2 = projection(rng, 8);
            ag::backward(project_graph(run_split(), w2));
            std::vector<std::vector<double>> analytic2{c.grad_values()};
            c.zero_grad();
            CHECK(fd::max_rel_error({c}, [&] { return project(run_split(), w2); },
                                    analytic2) <= tol);
        }
    }

    SUBCASE("embedding") {
        Tensor table = random_tensor(rng, {6, 3});
        const std::vector<int> idx{4, 1, 4, 0};
        auto run = [&] { return ag::embedding(table, idx); };
        auto w = projection(rng, 12);
        ag::backward(project_graph(run(), w));
        std::vector<std::vector<double>> analytic{table.grad_values()};
        table.zero_grad();
        CHECK(fd::max_rel_error({table}, [&] { return project(run(), w); }, analytic) <=
              tol);
    }

    SUBCASE("cross_entropy") {
        Tensor logits = random_tensor(rng, {5});
        auto run = [&] { return ag::cross_entropy(logits, 2); };
        ag::backward(run());
        std::vector<std::vector<double>> analytic{logits.grad_values()};
        logits.zero_grad();
        CHECK(fd::max_rel_error({logits}, [&] { return run().item(); }, analytic) <=
              tol);
    }
}

TEST_CASE("adam first step and zero-gradient no-op") {
    Tensor p = Tensor::scalar(1.0);
    p.set_requires_grad(true);
    ag::Adam opt({p});

    // grad = 0 -> update exactly 0
    p.grad()[0] = 0.0;
    opt.step(2e-4);
    CHECK(p.data()[0] == 1.0);

    // fresh state, grad = 1 -> p decreases by lr / (1 + eps)
    Tensor q = Tensor::scalar(1.0);
    q.set_requires_grad(true);
    ag::Adam opt2({q});
    q.grad()[0] = 1.0;
    opt2.step(2e-4);
    const double expect = 1.0 - 2e-4 * (1.0 / (1.0 + 1e-8));
    CHECK(q.data()[0] == doctest::Approx(expect).epsilon(1e-14));
    CHECK(q.grad()[0] == 0.0);  // gradients zeroed by the step

    // missing gradient -> error
    Tensor r = Tensor::scalar(1.0);
    r.set_requires_grad(true);
    ag::Adam opt3({r});
    CHECK_THROWS(opt3.step(1e-3));
}

TEST_CASE("adam runs are bit-identical") {
    auto run = [] {
        Rng rng(21);
        Tensor p = random_tensor(rng, {8, 8});
        ag::Adam opt({p});
        for (int i = 0; i < 25; ++i) {
            Tensor loss = ag::sum(ag::mul(p, p));
            ag::backward(loss);
            opt.step(1e-2);
        }
        return p.values();
    };
    const auto a = run();
    const auto b = run();
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("learning rate schedule") {
    CHECK(ag::lr_at(0, 1000, 2e-4) == 0.0);
    CHECK(ag::lr_at(100, 1000, 2e-4) == doctest::Approx(2e-4).epsilon(1e-15));
    CHECK(ag::lr_at(1000, 1000, 2e-4) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS(ag::lr_at(0, 0, 2e-4));

    // continuity at the boundary: approaching warmup end from below tends to
    // base_lr, and the decay branch starts at exactly base_lr
    const double below = ag::lr_at(99, 1000, 2e-4);
    CHECK(below == doctest::Approx(2e-4 * 99.0 / 100.0));
    for (int64_t total : {10, 37, 250}) {
        const int64_t w = (total + 9) / 10;
        CHECK(ag::lr_at(w, total, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}
