#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

// Reverse-mode autodiff over dense 64-bit tensors. Graphs are dynamic: each
// op records its parents and a backward closure; backward() walks the graph
// once and then releases it. Elementwise and reduction inner loops go
// through ldp::kern.

namespace ldp::ag {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TensorImpl;

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from_data(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    int64_t size() const;
    int rows() const;  // 2-D helpers
    int cols() const;

    double* data();
    const double* data() const;
    const std::vector<double>& values() const;

    // Gradient buffer (allocated zero-filled on first access).
    double* grad();
    const std::vector<double>& grad_values() const;
    bool has_grad() const;
    void zero_grad();

    void set_requires_grad(bool v);
    bool requires_grad() const;

    double item() const;  // scalar tensors only

    TensorImpl* impl() const { return impl_.get(); }
    const std::shared_ptr<TensorImpl>& handle() const { return impl_; }

private:
    friend Tensor make_op(Shape, std::vector<double>, std::vector<Tensor>,
                          std::function<void(TensorImpl&)>);
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;
};

struct TensorImpl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;  // leaf parameter
    bool needs_grad = false;     // on a path from a parameter
    std::vector<Tensor> parents;
    std::function<void(TensorImpl&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

// ---- graph construction -------------------------------------------------

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(TensorImpl&)> backward_fn);

// ---- forward op set ------------------------------------------------------

// a + b. Shapes must match, or b may be a vector matching a's last axis
// (broadcast over leading rows).
Tensor add(const Tensor& a, const Tensor& b);
// a * b, elementwise; same broadcast rule as add.
Tensor mul(const Tensor& a, const Tensor& b);
// a * c for a constant c.
Tensor scale(const Tensor& a, double c);
// 2-D matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);
// 2-D transpose.
Tensor transpose(const Tensor& a);
// Same element count, new shape.
Tensor reshape(const Tensor& a, Shape shape);
// Concatenate 2-D tensors along axis 0 or 1 (1-D along axis 0).
Tensor concat(const std::vector<Tensor>& parts, int axis);
// Split a 2-D tensor into equal parts along axis 0 or 1.
std::vector<Tensor> split(const Tensor& a, int parts, int axis);
// Select rows of a 2-D table.
Tensor embedding(const Tensor& table, const std::vector<int>& indices);

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);
// Normalize the last axis to zero mean / unit variance (eps inside sqrt).
Tensor layer_norm(const Tensor& a, double eps = 1e-5);
// Softmax over the last axis, numerically stable.
Tensor softmax(const Tensor& a);
// Negative log-likelihood of `target` under softmax(logits); logits 1-D.
Tensor cross_entropy(const Tensor& logits, int target);
// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& a);

// x @ w + b with b broadcast over rows (b may be undefined for no bias).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- backward ------------------------------------------------------------

// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every reachable
// tensor that requires them. The traversed graph is released afterwards;
// parameter gradients stick until explicitly zeroed.
void backward(const Tensor& loss);

// Index of the maximum element; lowest index wins ties.
int argmax(const Tensor& v);

}  // namespace ldp::ag
