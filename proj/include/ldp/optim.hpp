#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldp/autograd.hpp"

namespace ldp::ag {

// Adam with bias correction over a fixed parameter list. step() consumes the
// accumulated gradients and zeroes them.
class Adam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    explicit Adam(std::vector<Tensor> params);

    void step(double lr);
    int64_t steps_taken() const { return step_count_; }

    // Moment buffers, exposed for checkpointing.
    std::vector<double>& first_moment(size_t i) { return m_[i]; }
    std::vector<double>& second_moment(size_t i) { return v_[i]; }
    const std::vector<Tensor>& params() const { return params_; }
    void set_steps_taken(int64_t n) { step_count_ = n; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    int64_t step_count_ = 0;
};

// Linear warmup over the first 10% of steps, then cosine decay to zero.
double lr_at(int64_t step, int64_t total_steps, double base_lr);

}  // namespace ldp::ag
