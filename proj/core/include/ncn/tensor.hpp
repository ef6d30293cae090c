#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ncn/graph.hpp"

namespace ncn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major tensor handle. Copies share storage (and gradient), which
// is what lets the tape route gradients back to parameters; use clone() for
// an independent copy.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T(0), bool requires_grad = false);
    BasicTensor(Shape shape, std::vector<T> values, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }

    std::span<T> data() { return impl_->data; }
    std::span<const T> data() const { return impl_->data; }
    T item() const { return impl_->data.at(0); }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on);
    // Empty unless requires_grad.
    std::span<T> grad() { return impl_->grad; }
    std::span<const T> grad() const { return impl_->grad; }
    void zero_grad();

    BasicTensor clone() const;
    bool same_storage(const BasicTensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        std::vector<T> data;
        std::vector<T> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

// Ordered record of backward rules. backward() seeds the root gradient with 1
// and runs the rules in exact reverse order of recording; gradients from
// several consumers of one tensor add up.
template <typename T>
class BasicTape {
public:
    explicit BasicTape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    void record(std::function<void()> rule) {
        if (recording_) rules_.push_back(std::move(rule));
    }
    std::size_t size() const { return rules_.size(); }
    void clear() { rules_.clear(); }

    // root must hold exactly one element.
    void backward(BasicTensor<T>& root);

private:
    bool recording_;
    std::vector<std::function<void()>> rules_;
};

using Tensor = BasicTensor<float>;
using Tape = BasicTape<float>;
using Tensor64 = BasicTensor<double>;
using Tape64 = BasicTape<double>;

// a: [..., q] times b: [q, r] -> [..., r]
template <typename T>
BasicTensor<T> matmul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);

// a: [..., r] plus bias: [r]
template <typename T>
BasicTensor<T> add_bias(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> relu(BasicTape<T>& tape, const BasicTensor<T>& a);

// Same leading dims; last dims concatenated.
template <typename T>
BasicTensor<T> concat_last_dim(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);

// Same shapes.
template <typename T>
BasicTensor<T> elementwise_mul(BasicTape<T>& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> softmax_last_dim(BasicTape<T>& tape, const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> log_softmax(BasicTape<T>& tape, const BasicTensor<T>& a);

// Mean negative log-likelihood of `targets` under log-probabilities [B, c].
template <typename T>
BasicTensor<T> nll_loss(BasicTape<T>& tape, const BasicTensor<T>& log_probs, std::span<const Label> targets);

// Valid, stride-1 convolution with an (h, 1) kernel.
// input [B, C_in, H, 1], kernel [C_out, C_in, h, 1], bias [C_out]
// -> [B, C_out, H - h + 1, 1]
template <typename T>
BasicTensor<T> conv2d_hx1(BasicTape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                          const BasicTensor<T>& bias);

// Same element order, new shape of equal size.
template <typename T>
BasicTensor<T> reshape(BasicTape<T>& tape, const BasicTensor<T>& a, Shape shape);

// [B, X, Y] -> [B, Y, X]
template <typename T>
BasicTensor<T> swap_last_two(BasicTape<T>& tape, const BasicTensor<T>& a);

// Column j of a [B, m] as [B, 1].
template <typename T>
BasicTensor<T> column(BasicTape<T>& tape, const BasicTensor<T>& a, std::size_t j);

// [B, 1] repeated to [B, width].
template <typename T>
BasicTensor<T> expand_last(BasicTape<T>& tape, const BasicTensor<T>& a, std::size_t width);

}  // namespace ncn
