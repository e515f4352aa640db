#include "ldp/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "ldp/kernels.hpp"

namespace ldp::ag {

Adam::Adam(std::vector<Tensor> params) : params_(std::move(params)) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step(double lr) {
    ++step_count_;
    const double inv_bc1 = 1.0 / (1.0 - std::pow(kBeta1, double(step_count_)));
    const double inv_bc2 = 1.0 / (1.0 - std::pow(kBeta2, double(step_count_)));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (!p.has_grad())
            throw std::runtime_error("adam: parameter " + std::to_string(i) +
                                     " has no gradient");
        kern::ops().adam_update(p.data(), p.grad(), m_[i].data(), v_[i].data(),
                                size_t(p.size()), lr, kBeta1, kBeta2, kEps,
                                inv_bc1, inv_bc2);
    }
}

double lr_at(int64_t step, int64_t total_steps, double base_lr) {
    if (total_steps <= 0) throw std::runtime_error("lr_at: total_steps must be positive");
    if (step < 0 || step > total_steps)
        throw std::runtime_error("lr_at: step " + std::to_string(step) +
                                 " outside [0, " + std::to_string(total_steps) + "]");
    const int64_t warmup = (total_steps + 9) / 10;  // ceil(0.1 * total)
    if (step < warmup) return base_lr * double(step) / double(warmup);
    const double progress =
        total_steps == warmup ? 1.0 : double(step - warmup) / double(total_steps - warmup);
    return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

}  // namespace ldp::ag
