#include "ncn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

#include "ncn/error.hpp"

namespace ncn {

std::size_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
    set_requires_grad(requires_grad);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    if (values.size() != shape_numel(shape)) {
        throw UsageError("tensor: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    set_requires_grad(requires_grad);
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (on) {
        impl_->grad.assign(impl_->data.size(), T(0));
    } else {
        impl_->grad.clear();
    }
}

template <typename T>
void BasicTensor<T>::zero_grad() {
    std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
    BasicTensor out;
    out.impl_ = std::make_shared<Impl>(*impl_);
    return out;
}

template <typename T>
void BasicTape<T>::backward(BasicTensor<T>& root) {
    if (root.numel() != 1) throw UsageError("backward: root must be a scalar, got " + shape_str(root.shape()));
    if (!root.requires_grad()) throw UsageError("backward: root does not require grad");
    root.grad()[0] += T(1);
    for (auto it = rules_.rbegin(); it != rules_.rend(); ++it) (*it)();
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
MapMat<T> as_mat(std::span<T> s, std::size_t rows, std::size_t cols) {
    return MapMat<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
template <typename T>
CMapMat<T> as_cmat(std::span<const T> s, std::size_t rows, std::size_t cols) {
    return CMapMat<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
bool needs_grad(const BasicTape<T>& tape, std::initializer_list<const BasicTensor<T>*> inputs) {
    if (!tape.recording()) return false;
    return std::any_of(inputs.begin(), inputs.end(), [](const auto* t) { return t->requires_grad(); });
}

template <typename T>
void check_finite([[maybe_unused]] const BasicTensor<T>& t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
    for (T v : t.data()) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite output");
    }
#endif
}

std::size_t leading(const Shape& s) {
    std::size_t rows = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) rows *= s[i];
    return rows;
}

Shape with_last(Shape s, std::size_t last) {
    s.back() = last;
    return s;
}

template <typename T>
void require_rank_at_least(const BasicTensor<T>& t, std::size_t r, const char* op) {
    if (!t.defined() || t.rank() < r) {
        throw UsageError(std::string(op) + ": expected rank >= " + std::to_string(r) +
                         (t.defined() ? ", got " + shape_str(t.shape()) : ", got undefined tensor"));
    }
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank_at_least(a, 1, "matmul");
    if (!b.defined() || b.rank() != 2 || b.dim(0) != a.shape().back()) {
        throw UsageError("matmul: cannot multiply " + shape_str(a.shape()) + " by " +
                         (b.defined() ? shape_str(b.shape()) : std::string("undefined")));
    }
    const std::size_t rows = leading(a.shape()), q = b.dim(0), r = b.dim(1);
    const bool grad = needs_grad(tape, {&a, &b});
    BasicTensor<T> out(with_last(a.shape(), r), T(0), grad);
    as_mat(out.data(), rows, r).noalias() = as_cmat(a.data(), rows, q) * as_cmat(b.data(), q, r);
    check_finite(out, "matmul");
    if (grad) {
        tape.record([a = a, b = b, out, rows, q, r]() mutable {
            auto dout = as_cmat(std::span<const T>(out.grad()), rows, r);
            if (a.requires_grad()) as_mat(a.grad(), rows, q).noalias() += dout * as_mat(b.data(), q, r).transpose();
            if (b.requires_grad()) {
                as_mat(b.grad(), q, r).noalias() += as_cmat(std::span<const T>(a.data()), rows, q).transpose() * dout;
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> add_bias(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& bias) {
    require_rank_at_least(a, 1, "add_bias");
    if (!bias.defined() || bias.rank() != 1 || bias.dim(0) != a.shape().back()) {
        throw UsageError("add_bias: bias shape does not match last dim of " + shape_str(a.shape()));
    }
    const std::size_t rows = leading(a.shape()), r = bias.dim(0);
    const bool grad = needs_grad(tape, {&a, &bias});
    BasicTensor<T> out(a.shape(), T(0), grad);
    auto o = out.data();
    const auto x = a.data();
    const auto bv = bias.data();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < r; ++j) o[i * r + j] = x[i * r + j] + bv[j];
    }
    check_finite(out, "add_bias");
    if (grad) {
        tape.record([a = a, bias = bias, out, rows, r]() mutable {
            const auto g = out.grad();
            if (a.requires_grad()) {
                auto ga = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (bias.requires_grad()) {
                auto gb = bias.grad();
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < r; ++j) gb[j] += g[i * r + j];
                }
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> relu(BasicTape<T>& tape, const BasicTensor<T>& a) {
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(a.shape(), T(0), grad);
    auto o = out.data();
    const auto x = a.data();
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] > T(0) ? x[i] : T(0);
    if (grad) {
        tape.record([a = a, out]() mutable {
            const auto g = out.grad();
            const auto x = a.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (x[i] > T(0)) ga[i] += g[i];
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> concat_last_dim(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank_at_least(a, 1, "concat_last_dim");
    require_rank_at_least(b, 1, "concat_last_dim");
    Shape la(a.shape().begin(), a.shape().end() - 1), lb(b.shape().begin(), b.shape().end() - 1);
    if (la != lb) {
        throw UsageError("concat_last_dim: leading dims differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    const std::size_t rows = leading(a.shape()), p = a.shape().back(), q = b.shape().back();
    const bool grad = needs_grad(tape, {&a, &b});
    BasicTensor<T> out(with_last(a.shape(), p + q), T(0), grad);
    auto o = out.data();
    for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(a.data().begin() + i * p, p, o.begin() + i * (p + q));
        std::copy_n(b.data().begin() + i * q, q, o.begin() + i * (p + q) + p);
    }
    if (grad) {
        tape.record([a = a, b = b, out, rows, p, q]() mutable {
            const auto g = out.grad();
            for (std::size_t i = 0; i < rows; ++i) {
                if (a.requires_grad()) {
                    auto ga = a.grad();
                    for (std::size_t j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
                }
                if (b.requires_grad()) {
                    auto gb = b.grad();
                    for (std::size_t j = 0; j < q; ++j) gb[i * q + j] += g[i * (p + q) + p + j];
                }
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> elementwise_mul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (!a.defined() || !b.defined() || a.shape() != b.shape()) {
        throw UsageError("elementwise_mul: shape mismatch " + (a.defined() ? shape_str(a.shape()) : "?") + " vs " +
                         (b.defined() ? shape_str(b.shape()) : "?"));
    }
    const bool grad = needs_grad(tape, {&a, &b});
    BasicTensor<T> out(a.shape(), T(0), grad);
    auto o = out.data();
    const auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
    check_finite(out, "elementwise_mul");
    if (grad) {
        tape.record([a = a, b = b, out]() mutable {
            const auto g = out.grad();
            if (a.requires_grad()) {
                auto ga = a.grad();
                const auto y = b.data();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
            }
            if (b.requires_grad()) {
                auto gb = b.grad();
                const auto x = a.data();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> softmax_last_dim(BasicTape<T>& tape, const BasicTensor<T>& a) {
    require_rank_at_least(a, 1, "softmax_last_dim");
    const std::size_t width = a.shape().back();
    if (width == 0) throw UsageError("softmax_last_dim: empty last dimension");
    const std::size_t rows = leading(a.shape());
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(a.shape(), T(0), grad);
    const auto x = a.data();
    auto o = out.data();
    for (std::size_t i = 0; i < rows; ++i) {
        const T* xr = x.data() + i * width;
        T* orow = o.data() + i * width;
        const T mx = *std::max_element(xr, xr + width);
        T sum = 0;
        for (std::size_t j = 0; j < width; ++j) sum += (orow[j] = std::exp(xr[j] - mx));
        for (std::size_t j = 0; j < width; ++j) orow[j] /= sum;
    }
    check_finite(out, "softmax_last_dim");
    if (grad) {
        tape.record([a = a, out, rows, width]() mutable {
            const auto g = out.grad();
            const auto y = out.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < rows; ++i) {
                T dot = 0;
                for (std::size_t j = 0; j < width; ++j) dot += g[i * width + j] * y[i * width + j];
                for (std::size_t j = 0; j < width; ++j) ga[i * width + j] += y[i * width + j] * (g[i * width + j] - dot);
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> log_softmax(BasicTape<T>& tape, const BasicTensor<T>& a) {
    require_rank_at_least(a, 1, "log_softmax");
    const std::size_t width = a.shape().back();
    if (width == 0) throw UsageError("log_softmax: empty last dimension");
    const std::size_t rows = leading(a.shape());
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(a.shape(), T(0), grad);
    const auto x = a.data();
    auto o = out.data();
    for (std::size_t i = 0; i < rows; ++i) {
        const T* xr = x.data() + i * width;
        const T mx = *std::max_element(xr, xr + width);
        T sum = 0;
        for (std::size_t j = 0; j < width; ++j) sum += std::exp(xr[j] - mx);
        const T lse = mx + std::log(sum);
        for (std::size_t j = 0; j < width; ++j) o[i * width + j] = xr[j] - lse;
    }
    check_finite(out, "log_softmax");
    if (grad) {
        tape.record([a = a, out, rows, width]() mutable {
            const auto g = out.grad();
            const auto y = out.data();
            auto ga = a.grad();
            for (std::size_t i = 0; i < rows; ++i) {
                T gsum = 0;
                for (std::size_t j = 0; j < width; ++j) gsum += g[i * width + j];
                for (std::size_t j = 0; j < width; ++j) {
                    ga[i * width + j] += g[i * width + j] - std::exp(y[i * width + j]) * gsum;
                }
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> nll_loss(BasicTape<T>& tape, const BasicTensor<T>& log_probs, std::span<const Label> targets) {
    if (!log_probs.defined() || log_probs.rank() != 2) throw UsageError("nll_loss: expected [B, c] log-probabilities");
    const std::size_t rows = log_probs.dim(0), c = log_probs.dim(1);
    if (rows == 0) throw UsageError("nll_loss: empty batch");
    if (targets.size() != rows) throw UsageError("nll_loss: target count does not match batch");
    for (Label t : targets) {
        if (t < 0 || static_cast<std::size_t>(t) >= c) throw UsageError("nll_loss: target out of range");
    }
    const bool grad = needs_grad(tape, {&log_probs});
    BasicTensor<T> out(Shape{1}, T(0), grad);
    const auto lp = log_probs.data();
    T sum = 0;
    for (std::size_t i = 0; i < rows; ++i) sum -= lp[i * c + static_cast<std::size_t>(targets[i])];
    out.data()[0] = sum / static_cast<T>(rows);
    check_finite(out, "nll_loss");
    if (grad) {
        std::vector<Label> tgt(targets.begin(), targets.end());
        tape.record([log_probs = log_probs, out, tgt = std::move(tgt), rows, c]() mutable {
            const T g = out.grad()[0] / static_cast<T>(rows);
            auto gl = log_probs.grad();
            for (std::size_t i = 0; i < rows; ++i) gl[i * c + static_cast<std::size_t>(tgt[i])] -= g;
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> conv2d_hx1(BasicTape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                          const BasicTensor<T>& bias) {
    if (!input.defined() || input.rank() != 4 || input.dim(3) != 1) {
        throw UsageError("conv2d_hx1: input must be [B, C, H, 1]");
    }
    if (!kernel.defined() || kernel.rank() != 4 || kernel.dim(3) != 1 || kernel.dim(1) != input.dim(1)) {
        throw UsageError("conv2d_hx1: kernel must be [C_out, C_in, h, 1] with C_in = " + std::to_string(input.dim(1)));
    }
    if (!bias.defined() || bias.rank() != 1 || bias.dim(0) != kernel.dim(0)) {
        throw UsageError("conv2d_hx1: bias must be [C_out]");
    }
    const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2);
    const std::size_t O = kernel.dim(0), h = kernel.dim(2);
    if (h == 0 || h > H) {
        throw UsageError("conv2d_hx1: kernel height " + std::to_string(h) + " exceeds input height " + std::to_string(H));
    }
    const std::size_t Ho = H - h + 1, patch = C * h, positions = B * Ho;

    // im2col: row (b, i) holds input[b, c, i + t] at column c * h + t, which is
    // the kernel's own [C_in, h] memory order.
    std::vector<T> cols(positions * patch);
    const auto x = input.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < Ho; ++i) {
            T* dst = cols.data() + (b * Ho + i) * patch;
            for (std::size_t c = 0; c < C; ++c) {
                const T* src = x.data() + (b * C + c) * H + i;
                std::copy_n(src, h, dst + c * h);
            }
        }
    }
    RowMat<T> y = as_cmat(std::span<const T>(cols), positions, patch) *
                  as_cmat(kernel.data(), O, patch).transpose();

    const bool grad = needs_grad(tape, {&input, &kernel, &bias});
    BasicTensor<T> out(Shape{B, O, Ho, 1}, T(0), grad);
    auto o = out.data();
    const auto bv = bias.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t oc = 0; oc < O; ++oc) {
                o[(b * O + oc) * Ho + i] = y(static_cast<Eigen::Index>(b * Ho + i), static_cast<Eigen::Index>(oc)) + bv[oc];
            }
        }
    }
    check_finite(out, "conv2d_hx1");
    if (grad) {
        tape.record([input = input, kernel = kernel, bias = bias, out, cols = std::move(cols), B, C, H, O, h, Ho, patch, positions]() mutable {
            const auto g = out.grad();
            RowMat<T> dy(static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(O));
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t oc = 0; oc < O; ++oc) {
                    for (std::size_t i = 0; i < Ho; ++i) {
                        dy(static_cast<Eigen::Index>(b * Ho + i), static_cast<Eigen::Index>(oc)) = g[(b * O + oc) * Ho + i];
                    }
                }
            }
            if (bias.requires_grad()) {
                auto gb = bias.grad();
                for (std::size_t oc = 0; oc < O; ++oc) gb[oc] += dy.col(static_cast<Eigen::Index>(oc)).sum();
            }
            if (kernel.requires_grad()) {
                as_mat(kernel.grad(), O, patch).noalias() += dy.transpose() * as_cmat(std::span<const T>(cols), positions, patch);
            }
            if (input.requires_grad()) {
                RowMat<T> dcols = dy * as_mat(kernel.data(), O, patch);
                auto gx = input.grad();
                for (std::size_t b = 0; b < B; ++b) {
                    for (std::size_t i = 0; i < Ho; ++i) {
                        const T* src = dcols.data() + (b * Ho + i) * patch;
                        for (std::size_t c = 0; c < C; ++c) {
                            T* dst = gx.data() + (b * C + c) * H + i;
                            for (std::size_t t = 0; t < h; ++t) dst[t] += src[c * h + t];
                        }
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> reshape(BasicTape<T>& tape, const BasicTensor<T>& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw UsageError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(std::move(shape), std::vector<T>(a.data().begin(), a.data().end()), grad);
    if (grad) {
        tape.record([a = a, out]() mutable {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> swap_last_two(BasicTape<T>& tape, const BasicTensor<T>& a) {
    if (!a.defined() || a.rank() != 3) throw UsageError("swap_last_two: expected a rank-3 tensor");
    const std::size_t B = a.dim(0), X = a.dim(1), Y = a.dim(2);
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(Shape{B, Y, X}, T(0), grad);
    const auto x = a.data();
    auto o = out.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < X; ++i) {
            for (std::size_t j = 0; j < Y; ++j) o[(b * Y + j) * X + i] = x[(b * X + i) * Y + j];
        }
    }
    if (grad) {
        tape.record([a = a, out, B, X, Y]() mutable {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t i = 0; i < X; ++i) {
                    for (std::size_t j = 0; j < Y; ++j) ga[(b * X + i) * Y + j] += g[(b * Y + j) * X + i];
                }
            }
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> column(BasicTape<T>& tape, const BasicTensor<T>& a, std::size_t j) {
    if (!a.defined() || a.rank() != 2 || j >= a.dim(1)) throw UsageError("column: index out of range");
    const std::size_t B = a.dim(0), m = a.dim(1);
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(Shape{B, 1}, T(0), grad);
    for (std::size_t i = 0; i < B; ++i) out.data()[i] = a.data()[i * m + j];
    if (grad) {
        tape.record([a = a, out, B, m, j]() mutable {
            auto ga = a.grad();
            for (std::size_t i = 0; i < B; ++i) ga[i * m + j] += out.grad()[i];
        });
    }
    return out;
}

template <typename T>
BasicTensor<T> expand_last(BasicTape<T>& tape, const BasicTensor<T>& a, std::size_t width) {
    if (!a.defined() || a.rank() != 2 || a.dim(1) != 1) throw UsageError("expand_last: expected [B, 1]");
    const std::size_t B = a.dim(0);
    const bool grad = needs_grad(tape, {&a});
    BasicTensor<T> out(Shape{B, width}, T(0), grad);
    auto o = out.data();
    for (std::size_t i = 0; i < B; ++i) std::fill_n(o.begin() + i * width, width, a.data()[i]);
    if (grad) {
        tape.record([a = a, out, B, width]() mutable {
            const auto g = out.grad();
            auto ga = a.grad();
            for (std::size_t i = 0; i < B; ++i) {
                T s = 0;
                for (std::size_t j = 0; j < width; ++j) s += g[i * width + j];
                ga[i] += s;
            }
        });
    }
    return out;
}

#define NCN_INSTANTIATE(T)                                                                                          \
    template class BasicTensor<T>;                                                                                  \
    template class BasicTape<T>;                                                                                    \
    template BasicTensor<T> matmul(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);                    \
    template BasicTensor<T> add_bias(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);                  \
    template BasicTensor<T> relu(BasicTape<T>&, const BasicTensor<T>&);                                             \
    template BasicTensor<T> concat_last_dim(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);           \
    template BasicTensor<T> elementwise_mul(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&);           \
    template BasicTensor<T> softmax_last_dim(BasicTape<T>&, const BasicTensor<T>&);                                 \
    template BasicTensor<T> log_softmax(BasicTape<T>&, const BasicTensor<T>&);                                      \
    template BasicTensor<T> nll_loss(BasicTape<T>&, const BasicTensor<T>&, std::span<const Label>);                 \
    template BasicTensor<T> conv2d_hx1(BasicTape<T>&, const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                       const BasicTensor<T>&);                                                      \
    template BasicTensor<T> reshape(BasicTape<T>&, const BasicTensor<T>&, Shape);                                   \
    template BasicTensor<T> swap_last_two(BasicTape<T>&, const BasicTensor<T>&);                                    \
    template BasicTensor<T> column(BasicTape<T>&, const BasicTensor<T>&, std::size_t);                              \
    template BasicTensor<T> expand_last(BasicTape<T>&, const BasicTensor<T>&, std::size_t);

NCN_INSTANTIATE(float)
NCN_INSTANTIATE(double)

#undef NCN_INSTANTIATE

}  // namespace ncn
