#include "ldp/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ldp/kernels.hpp"

namespace ldp::ag {

namespace {

int64_t count(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                     " and " + shape_str(b));
}

// Row/column view of the last axis: leading axes fold into `rows`.
struct RowView {
    int64_t rows;
    int64_t cols;
};

RowView rows_of(const Shape& s) {
    if (s.empty()) return {1, 1};
    int64_t cols = s.back();
    int64_t rows = 1;
    for (size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
    return {rows, cols};
}

}  // namespace

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

// ---- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(Shape shape) {
    return from_data(shape, std::vector<double>(count(shape), 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
    return from_data(shape, std::vector<double>(count(shape), value));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values) {
    if (int64_t(values.size()) != count(shape))
        throw ShapeError("from_data: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(shape));
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->values = std::move(values);
    return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

const Shape& Tensor::shape() const { return impl_->shape; }
int64_t Tensor::size() const { return int64_t(impl_->values.size()); }
int Tensor::rows() const { return impl_->shape.size() == 1 ? 1 : impl_->shape[0]; }
int Tensor::cols() const { return impl_->shape.back(); }

double* Tensor::data() { return impl_->values.data(); }
const double* Tensor::data() const { return impl_->values.data(); }
const std::vector<double>& Tensor::values() const { return impl_->values; }

double* Tensor::grad() {
    impl_->ensure_grad();
    return impl_->grad.data();
}

const std::vector<double>& Tensor::grad_values() const {
    impl_->ensure_grad();
    return impl_->grad;
}

bool Tensor::has_grad() const { return impl_ && impl_->grad.size() == impl_->values.size(); }

void Tensor::zero_grad() {
    if (impl_) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::set_requires_grad(bool v) {
    impl_->requires_grad = v;
    if (v) impl_->needs_grad = true;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

double Tensor::item() const {
    if (size() != 1)
        throw ShapeError("item: tensor of shape " + shape_str(impl_->shape) +
                         " is not a scalar");
    return impl_->values[0];
}

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(TensorImpl&)> backward_fn) {
    Tensor out = Tensor::from_data(std::move(shape), std::move(values));
    bool needs = false;
    for (const Tensor& p : parents) {
        if (p.impl() && p.impl()->needs_grad) needs = true;
    }
    if (needs) {
        out.impl()->needs_grad = true;
        out.impl()->parents = std::move(parents);
        out.impl()->backward_fn = std::move(backward_fn);
    }
    return out;
}

namespace {

// Accumulate dy into the gradient of p, reducing over leading rows when p was
// broadcast as a row vector.
void accum_maybe_broadcast(TensorImpl& p, const double* dy, const Shape& out_shape) {
    if (!p.needs_grad) return;
    p.ensure_grad();
    const auto [rows, cols] = rows_of(out_shape);
    if (int64_t(p.values.size()) == rows * cols) {
        kern::ops().axpy(1.0, dy, p.grad.data(), size_t(rows * cols));
    } else {
        for (int64_t r = 0; r < rows; ++r)
            kern::ops().axpy(1.0, dy + r * cols, p.grad.data(), size_t(cols));
    }
}

bool broadcast_compatible(const Shape& a, const Shape& b) {
    const auto va = rows_of(a);
    const auto vb = rows_of(b);
    return count(b) == vb.cols && va.cols == vb.cols;
}

}  // namespace

// ---- elementwise ops -------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    const auto va = rows_of(a.shape());
    std::vector<double> out(a.values());
    if (a.shape() == b.shape()) {
        kern::ops().axpy(1.0, b.data(), out.data(), size_t(a.size()));
    } else if (broadcast_compatible(a.shape(), b.shape())) {
        for (int64_t r = 0; r < va.rows; ++r)
            kern::ops().axpy(1.0, b.data(), out.data() + r * va.cols, size_t(va.cols));
    } else {
        shape_fail("add", a.shape(), b.shape());
    }
    Tensor pa = a, pb = b;
    return make_op(a.shape(), std::move(out), {a, b}, [pa, pb](TensorImpl& self) mutable {
        if (pa.impl()->needs_grad) {
            pa.impl()->ensure_grad();
            kern::ops().axpy(1.0, self.grad.data(), pa.impl()->grad.data(),
                             self.grad.size());
        }
        accum_maybe_broadcast(*pb.impl(), self.grad.data(), self.shape);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const auto va = rows_of(a.shape());
    std::vector<double> out(a.values());
    const bool same = a.shape() == b.shape();
    if (same) {
        kern::ops().mul(out.data(), b.data(), out.data(), size_t(a.size()));
    } else if (broadcast_compatible(a.shape(), b.shape())) {
        for (int64_t r = 0; r < va.rows; ++r)
            kern::ops().mul(out.data() + r * va.cols, b.data(), out.data() + r * va.cols,
                            size_t(va.cols));
    } else {
        shape_fail("mul", a.shape(), b.shape());
    }
    Tensor pa = a, pb = b;
    return make_op(a.shape(), std::move(out), {a, b},
                   [pa, pb, same, va](TensorImpl& self) mutable {
        const double* dy = self.grad.data();
        const size_t n = self.grad.size();
        if (pa.impl()->needs_grad) {
            pa.impl()->ensure_grad();
            double* da = pa.impl()->grad.data();
            if (same) {
                for (size_t i = 0; i < n; ++i) da[i] += dy[i] * pb.impl()->values[i];
            } else {
                const double* bv = pb.impl()->values.data();
                for (int64_t r = 0; r < va.rows; ++r)
                    for (int64_t c = 0; c < va.cols; ++c)
                        da[r * va.cols + c] += dy[r * va.cols + c] * bv[c];
            }
        }
        if (pb.impl()->needs_grad) {
            pb.impl()->ensure_grad();
            double* db = pb.impl()->grad.data();
            const double* av = pa.impl()->values.data();
            if (same) {
                for (size_t i = 0; i < n; ++i) db[i] += dy[i] * av[i];
            } else {
                for (int64_t r = 0; r < va.rows; ++r)
                    for (int64_t c = 0; c < va.cols; ++c)
                        db[c] += dy[r * va.cols + c] * av[r * va.cols + c];
            }
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.values());
    kern::ops().scale(c, out.data(), out.size());
    Tensor pa = a;
    return make_op(a.shape(), std::move(out), {a}, [pa, c](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        kern::ops().axpy(c, self.grad.data(), pa.impl()->grad.data(), self.grad.size());
    });
}

// ---- shape ops -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        shape_fail("matmul", a.shape(), b.shape());
    const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(size_t(m) * n, 0.0);
    kern::matmul_acc(a.data(), b.data(), out.data(), m, k, n);
    Tensor pa = a, pb = b;
    return make_op({m, n}, std::move(out), {a, b},
                   [pa, pb, m, k, n](TensorImpl& self) mutable {
        const double* dy = self.grad.data();
        if (pa.impl()->needs_grad) {
            // dA += dY * B^T
            pa.impl()->ensure_grad();
            std::vector<double> bt(size_t(k) * n);
            const double* bv = pb.impl()->values.data();
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < n; ++j) bt[size_t(j) * k + i] = bv[size_t(i) * n + j];
            kern::matmul_acc(dy, bt.data(), pa.impl()->grad.data(), m, n, k);
        }
        if (pb.impl()->needs_grad) {
            // dB += A^T * dY
            pb.impl()->ensure_grad();
            std::vector<double> at(size_t(m) * k);
            const double* av = pa.impl()->values.data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j) at[size_t(j) * m + i] = av[size_t(i) * k + j];
            kern::matmul_acc(at.data(), dy, pb.impl()->grad.data(), k, m, n);
        }
    });
}

Tensor transpose(const Tensor& a) {
    if (a.shape().size() != 2) shape_fail("transpose", a.shape(), {});
    const int m = a.shape()[0], n = a.shape()[1];
    std::vector<double> out(size_t(m) * n);
    const double* av = a.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[size_t(j) * m + i] = av[size_t(i) * n + j];
    Tensor pa = a;
    return make_op({n, m}, std::move(out), {a}, [pa, m, n](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        double* da = pa.impl()->grad.data();
        const double* dy = self.grad.data();
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) da[size_t(i) * n + j] += dy[size_t(j) * m + i];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (count(shape) != a.size()) shape_fail("reshape", a.shape(), shape);
    Tensor pa = a;
    return make_op(std::move(shape), a.values(), {a}, [pa](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        kern::ops().axpy(1.0, self.grad.data(), pa.impl()->grad.data(), self.grad.size());
    });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Shape& first = parts[0].shape();
    if (first.size() == 1) axis = 0;
    if (first.size() > 2 || (axis != 0 && axis != 1))
        throw ShapeError("concat: rank/axis unsupported for " + shape_str(first));
    for (const Tensor& p : parts) {
        if (p.shape().size() != first.size()) shape_fail("concat", first, p.shape());
        if (axis == 0 && first.size() == 2 && p.shape()[1] != first[1])
            shape_fail("concat", first, p.shape());
        if (axis == 1 && p.shape()[0] != first[0]) shape_fail("concat", first, p.shape());
    }
    std::vector<Tensor> parents = parts;
    if (axis == 0) {
        const int cols = first.size() == 2 ? first[1] : 1;
        std::vector<double> out;
        for (const Tensor& p : parts)
            out.insert(out.end(), p.values().begin(), p.values().end());
        const int rows = int(out.size()) / cols;
        Shape oshape = first.size() == 1 ? Shape{rows} : Shape{rows, cols};
        return make_op(std::move(oshape), std::move(out), parents,
                       [parents](TensorImpl& self) mutable {
            size_t off = 0;
            for (Tensor& p : parents) {
                const size_t n = p.values().size();
                if (p.impl()->needs_grad) {
                    p.impl()->ensure_grad();
                    kern::ops().axpy(1.0, self.grad.data() + off, p.impl()->grad.data(), n);
                }
                off += n;
            }
        });
    }
    // axis == 1
    const int rows = first[0];
    int cols = 0;
    for (const Tensor& p : parts) cols += p.shape()[1];
    std::vector<double> out(size_t(rows) * cols);
    int coff = 0;
    for (const Tensor& p : parts) {
        const int pc = p.shape()[1];
        for (int r = 0; r < rows; ++r)
            std::copy_n(p.data() + size_t(r) * pc, pc, out.data() + size_t(r) * cols + coff);
        coff += pc;
    }
    return make_op({rows, cols}, std::move(out), parents,
                   [parents, rows, cols](TensorImpl& self) mutable {
        int off = 0;
        for (Tensor& p : parents) {
            const int pc = p.shape()[1];
            if (p.impl()->needs_grad) {
                p.impl()->ensure_grad();
                double* dp = p.impl()->grad.data();
                for (int r = 0; r < rows; ++r)
                    kern::ops().axpy(1.0, self.grad.data() + size_t(r) * cols + off,
                                     dp + size_t(r) * pc, size_t(pc));
            }
            off += pc;
        }
    });
}

std::vector<Tensor> split(const Tensor& a, int parts, int axis) {
    const Shape& s = a.shape();
    if (s.size() == 1) axis = 0;
    if (s.size() > 2 || parts <= 0 || (axis != 0 && axis != 1))
        throw ShapeError("split: rank/axis unsupported for " + shape_str(s));
    const int rows = s.size() == 2 ? s[0] : s[0];
    const int cols = s.size() == 2 ? s[1] : 1;
    std::vector<Tensor> out;
    if (axis == 0) {
        if (rows % parts != 0)
            throw ShapeError("split: " + shape_str(s) + " into " + std::to_string(parts));
        const int pr = rows / parts;
        for (int p = 0; p < parts; ++p) {
            std::vector<double> vals(a.values().begin() + size_t(p) * pr * cols,
                                     a.values().begin() + size_t(p + 1) * pr * cols);
            Shape oshape = s.size() == 1 ? Shape{pr} : Shape{pr, cols};
            Tensor pa = a;
            const size_t off = size_t(p) * pr * cols;
            out.push_back(make_op(std::move(oshape), std::move(vals), {a},
                                  [pa, off](TensorImpl& self) mutable {
                if (!pa.impl()->needs_grad) return;
                pa.impl()->ensure_grad();
                kern::ops().axpy(1.0, self.grad.data(), pa.impl()->grad.data() + off,
                                 self.grad.size());
            }));
        }
        return out;
    }
    if (cols % parts != 0)
        throw ShapeError("split: " + shape_str(s) + " into " + std::to_string(parts));
    const int pc = cols / parts;
    for (int p = 0; p < parts; ++p) {
        std::vector<double> vals(size_t(rows) * pc);
        for (int r = 0; r < rows; ++r)
            std::copy_n(a.data() + size_t(r) * cols + size_t(p) * pc, pc,
                        vals.data() + size_t(r) * pc);
        Tensor pa = a;
        const int coff = p * pc;
        out.push_back(make_op({rows, pc}, std::move(vals), {a},
                              [pa, coff, pc, cols, rows](TensorImpl& self) mutable {
            if (!pa.impl()->needs_grad) return;
            pa.impl()->ensure_grad();
            double* da = pa.impl()->grad.data();
            for (int r = 0; r < rows; ++r)
                kern::ops().axpy(1.0, self.grad.data() + size_t(r) * pc,
                                 da + size_t(r) * cols + coff, size_t(pc));
        }));
    }
    return out;
}

Tensor embedding(const Tensor& table, const std::vector<int>& indices) {
    if (table.shape().size() != 2) shape_fail("embedding", table.shape(), {});
    const int rows = table.shape()[0], cols = table.shape()[1];
    std::vector<double> out(indices.size() * size_t(cols));
    for (size_t i = 0; i < indices.size(); ++i) {
        const int idx = indices[i];
        if (idx < 0 || idx >= rows)
            throw ShapeError("embedding: index " + std::to_string(idx) +
                             " out of range for table " + shape_str(table.shape()));
        std::copy_n(table.data() + size_t(idx) * cols, cols, out.data() + i * size_t(cols));
    }
    Tensor pt = table;
    std::vector<int> idx = indices;
    return make_op({int(indices.size()), cols}, std::move(out), {table},
                   [pt, idx, cols](TensorImpl& self) mutable {
        if (!pt.impl()->needs_grad) return;
        pt.impl()->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            kern::ops().axpy(1.0, self.grad.data() + i * size_t(cols),
                             pt.impl()->grad.data() + size_t(idx[i]) * cols, size_t(cols));
    });
}

// ---- nonlinearities --------------------------------------------------------

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    kern::ops().relu(a.data(), out.data(), size_t(a.size()));
    Tensor pa = a;
    return make_op(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        kern::ops().relu_grad(pa.impl()->values.data(), self.grad.data(),
                              pa.impl()->grad.data(), self.grad.size());
    });
}

Tensor gelu(const Tensor& a) {
    static const double inv_sqrt2 = 0.70710678118654752440;
    static const double inv_sqrt2pi = 0.39894228040143267794;
    std::vector<double> out(a.size());
    const double* x = a.data();
    for (int64_t i = 0; i < a.size(); ++i)
        out[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * inv_sqrt2));
    Tensor pa = a;
    return make_op(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        const double* x = pa.impl()->values.data();
        double* da = pa.impl()->grad.data();
        const double* dy = self.grad.data();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const double phi = 0.5 * (1.0 + std::erf(x[i] * inv_sqrt2));
            const double dens = inv_sqrt2pi * std::exp(-0.5 * x[i] * x[i]);
            da[i] += dy[i] * (phi + x[i] * dens);
        }
    });
}

Tensor layer_norm(const Tensor& a, double eps) {
    const auto [rows, cols] = rows_of(a.shape());
    std::vector<double> out(a.size());
    auto inv_std = std::vector<double>(size_t(rows), 0.0);
    const double* x = a.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        const double mean = kern::ops().sum(xr, size_t(cols)) / double(cols);
        double var = 0.0;
        for (int64_t c = 0; c < cols; ++c) {
            const double d = xr[c] - mean;
            var += d * d;
        }
        var /= double(cols);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = (xr[c] - mean) * is;
    }
    Tensor pa = a;
    return make_op(a.shape(), std::move(out), {a},
                   [pa, rows = rows, cols = cols, inv_std](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        double* da = pa.impl()->grad.data();
        const double* dy = self.grad.data();
        const double* y = self.values.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* dyr = dy + r * cols;
            const double* yr = y + r * cols;
            const double mean_dy = kern::ops().sum(dyr, size_t(cols)) / double(cols);
            const double mean_dyy = kern::ops().dot(dyr, yr, size_t(cols)) / double(cols);
            for (int64_t c = 0; c < cols; ++c)
                da[r * cols + c] += inv_std[r] * (dyr[c] - mean_dy - yr[c] * mean_dyy);
        }
    });
}

Tensor softmax(const Tensor& a) {
    const auto [rows, cols] = rows_of(a.shape());
    std::vector<double> out(a.size());
    const double* x = a.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        double m = xr[0];
        for (int64_t c = 1; c < cols; ++c) m = std::max(m, xr[c]);
        double denom = 0.0;
        for (int64_t c = 0; c < cols; ++c) {
            const double e = std::exp(xr[c] - m);
            out[r * cols + c] = e;
            denom += e;
        }
        const double inv = 1.0 / denom;
        for (int64_t c = 0; c < cols; ++c) out[r * cols + c] *= inv;
    }
    Tensor pa = a;
    return make_op(a.shape(), std::move(out), {a},
                   [pa, rows = rows, cols = cols](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        double* da = pa.impl()->grad.data();
        const double* dy = self.grad.data();
        const double* y = self.values.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* dyr = dy + r * cols;
            const double* yr = y + r * cols;
            const double inner = kern::ops().dot(dyr, yr, size_t(cols));
            for (int64_t c = 0; c < cols; ++c)
                da[r * cols + c] += yr[c] * (dyr[c] - inner);
        }
    });
}

Tensor cross_entropy(const Tensor& logits, int target) {
    if (logits.shape().size() != 1)
        throw ShapeError("cross_entropy: logits must be 1-D, got " +
                         shape_str(logits.shape()));
    const int n = logits.shape()[0];
    if (target < 0 || target >= n)
        throw ShapeError("cross_entropy: target " + std::to_string(target) +
                         " out of range for " + shape_str(logits.shape()));
    const double* x = logits.data();
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double denom = 0.0;
    for (int i = 0; i < n; ++i) denom += std::exp(x[i] - m);
    const double loss = m + std::log(denom) - x[target];
    Tensor pl = logits;
    return make_op({1}, {loss}, {logits}, [pl, target, n, m, denom](TensorImpl& self) mutable {
        if (!pl.impl()->needs_grad) return;
        pl.impl()->ensure_grad();
        const double dy = self.grad[0];
        const double* x = pl.impl()->values.data();
        double* da = pl.impl()->grad.data();
        for (int i = 0; i < n; ++i) {
            const double p = std::exp(x[i] - m) / denom;
            da[i] += dy * (p - (i == target ? 1.0 : 0.0));
        }
    });
}

Tensor sum(const Tensor& a) {
    const double total = kern::ops().sum(a.data(), size_t(a.size()));
    Tensor pa = a;
    return make_op({1}, {total}, {a}, [pa](TensorImpl& self) mutable {
        if (!pa.impl()->needs_grad) return;
        pa.impl()->ensure_grad();
        const double dy = self.grad[0];
        double* da = pa.impl()->grad.data();
        for (size_t i = 0; i < pa.impl()->grad.size(); ++i) da[i] += dy;
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y = matmul(x, w);
    return b.defined() ? add(y, b) : y;
}

// ---- backward ---------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ShapeError("backward: loss must be a scalar tensor");
    TensorImpl* root = loss.impl();
    if (!root->needs_grad) {
        root->ensure_grad();
        root->grad[0] = 1.0;
        return;
    }

    // Iterative DFS post-order over parent edges. keep_alive pins every
    // visited impl: releasing a node's parent list must not free a node the
    // walk still has to process.
    std::vector<TensorImpl*> order;
    std::vector<std::shared_ptr<TensorImpl>> keep_alive;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<TensorImpl*, size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root);
    keep_alive.push_back(loss.handle());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            const Tensor& parent = node->parents[next];
            TensorImpl* p = parent.impl();
            ++next;
            if (p && p->needs_grad && !seen.count(p)) {
                seen.insert(p);
                keep_alive.push_back(parent.handle());
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
        // Release the graph and transient gradients as we go.
        node->backward_fn = nullptr;
        node->parents.clear();
        if (!node->requires_grad) {
            node->grad.clear();
            node->grad.shrink_to_fit();
        }
    }
}

int argmax(const Tensor& v) {
    const double* x = v.data();
    int best = 0;
    for (int64_t i = 1; i < v.size(); ++i)
        if (x[i] > x[best]) best = int(i);
    return best;
}

}  // namespace ldp::ag
