#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ncn/tensor.hpp"

namespace ncn {

struct AdamWOptions {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First and second moments, one buffer per parameter.
template <typename T>
struct AdamWState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;

    static AdamWState zeros_like(std::span<const BasicTensor<T>> params);
};

// One AdamW update at step t >= 1, reading gradients from params[i].grad():
//   theta <- theta - lr * wd * theta
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
// A non-finite gradient anywhere rejects the whole step (NumericError) and
// leaves parameters and state untouched.
template <typename T>
void adamw_step(std::span<BasicTensor<T>> params, AdamWState<T>& state, const AdamWOptions& opt, std::uint64_t t);

template <typename T>
class AdamW {
public:
    AdamW(std::vector<BasicTensor<T>> params, AdamWOptions opt)
        : params_(std::move(params)), opt_(opt), state_(AdamWState<T>::zeros_like(params_)) {}

    void step() { adamw_step<T>(params_, state_, opt_, ++t_); }
    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }
    std::uint64_t steps() const { return t_; }

private:
    std::vector<BasicTensor<T>> params_;
    AdamWOptions opt_;
    AdamWState<T> state_;
    std::uint64_t t_ = 0;
};

}  // namespace ncn
