#include "ncn/optim.hpp"

#include <cmath>

#include "ncn/error.hpp"

namespace ncn {

template <typename T>
AdamWState<T> AdamWState<T>::zeros_like(std::span<const BasicTensor<T>> params) {
    AdamWState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.numel(), T(0));
        s.v.emplace_back(p.numel(), T(0));
    }
    return s;
}

template <typename T>
void adamw_step(std::span<BasicTensor<T>> params, AdamWState<T>& state, const AdamWOptions& opt, std::uint64_t t) {
    if (t < 1) throw UsageError("adamw_step: step counter must be >= 1");
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw UsageError("adamw_step: optimizer state does not match parameter list");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].requires_grad()) throw UsageError("adamw_step: parameter without gradient buffer");
        if (state.m[i].size() != params[i].numel() || state.v[i].size() != params[i].numel()) {
            throw UsageError("adamw_step: moment buffer shape mismatch");
        }
        for (T g : params[i].grad()) {
            if (!std::isfinite(g)) throw NumericError("adamw_step: non-finite gradient");
        }
    }

    const T lr = static_cast<T>(opt.lr);
    const T decay = static_cast<T>(opt.lr * opt.weight_decay);
    const T b1 = static_cast<T>(opt.beta1), b2 = static_cast<T>(opt.beta2), eps = static_cast<T>(opt.eps);
    const T bc1 = static_cast<T>(1.0 - std::pow(opt.beta1, static_cast<double>(t)));
    const T bc2 = static_cast<T>(1.0 - std::pow(opt.beta2, static_cast<double>(t)));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i].data();
        const auto g = params[i].grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            theta[j] -= decay * theta[j];
            m[j] = b1 * m[j] + (T(1) - b1) * g[j];
            v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
            const T m_hat = m[j] / bc1;
            const T v_hat = v[j] / bc2;
            theta[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template struct AdamWState<float>;
template struct AdamWState<double>;
template void adamw_step(std::span<BasicTensor<float>>, AdamWState<float>&, const AdamWOptions&, std::uint64_t);
template void adamw_step(std::span<BasicTensor<double>>, AdamWState<double>&, const AdamWOptions&, std::uint64_t);

}  // namespace ncn
