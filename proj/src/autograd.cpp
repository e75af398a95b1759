/*******************************************************************************
* Copyright 2026 The fewframe Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#include "fewframe/autograd.hpp"

#include <string>
#include <utility>

namespace fewframe::ad {

template <typename S>
Var<S> Tape<S>::constant(Tensor<S> value) {
    nodes_.push_back(Node{std::move(value), false, {}});
    grads_.emplace_back();
    return Var<S>(this, nodes_.size() - 1);
}

template <typename S>
Var<S> Tape<S>::variable(Tensor<S> value) {
    nodes_.push_back(Node{std::move(value), true, {}});
    grads_.emplace_back();
    return Var<S>(this, nodes_.size() - 1);
}

template <typename S>
Var<S> Tape<S>::record(Tensor<S> value, std::initializer_list<Var<S>> inputs, BackwardFn backward) {
    bool needs_grad = false;
    for (const Var<S>& in : inputs) {
        if (in.tape() != this) {
            throw ArgumentError("autograd: operand recorded on a different tape");
        }
        needs_grad = needs_grad || nodes_[in.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), needs_grad, needs_grad ? std::move(backward) : BackwardFn{}});
    grads_.emplace_back();
    return Var<S>(this, nodes_.size() - 1);
}

template <typename S>
void Tape<S>::accumulate(std::size_t id, const Tensor<S>& g) {
    if (!nodes_[id].requires_grad) return;
    auto& slot = grads_[id];
    if (!slot) {
        slot = g;
        return;
    }
    auto dst = slot->data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename S>
void Tape<S>::accumulate(std::size_t id, Tensor<S>&& g) {
    if (!nodes_[id].requires_grad) return;
    auto& slot = grads_[id];
    if (!slot) {
        slot = std::move(g);
        return;
    }
    accumulate(id, static_cast<const Tensor<S>&>(g));
}

template <typename S>
void Tape<S>::backward(Var<S> loss) {
    if (loss.tape() != this) {
        throw ArgumentError("backward: loss recorded on a different tape");
    }
    if (value(loss.id()).size() != 1) {
        throw ArgumentError("backward: loss must be a scalar, got shape " +
                            shape_string(value(loss.id()).shape()));
    }
    for (auto& g : grads_) g.reset();
    backward_order_.clear();
    accumulate(loss.id(), Tensor<S>::full(value(loss.id()).shape(), S{1}));
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        if (!nodes_[id].backward || !grads_[id]) continue;
        backward_order_.push_back(id);
        // Copy: the closure may accumulate into other slots, never into its own.
        const Tensor<S> upstream = *grads_[id];
        nodes_[id].backward(*this, upstream);
    }
}

template <typename S>
Tensor<S> Tape<S>::grad(Var<S> v) const {
    const auto& slot = grads_.at(v.id());
    if (slot) return *slot;
    return Tensor<S>(value(v.id()).shape());
}

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
    Tape<S>& tape = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(ops::matmul(a.value(), b.value()), {a, b},
                       [ia, ib](Tape<S>& t, const Tensor<S>& g) {
                           static constexpr std::size_t kSwap[] = {1, 0};
                           if (t.requires_grad(ia)) {
                               t.accumulate(ia, ops::matmul(g, ops::permute(t.value(ib), std::span(kSwap))));
                           }
                           if (t.requires_grad(ib)) {
                               t.accumulate(ib, ops::matmul(ops::permute(t.value(ia), std::span(kSwap)), g));
                           }
                       });
}

template <typename S>
Var<S> permute(Var<S> x, std::span<const std::size_t> axes) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    std::vector<std::size_t> inverse = ops::inverse_permutation(axes);
    return tape.record(ops::permute(x.value(), axes), {x},
                       [ix, inverse = std::move(inverse)](Tape<S>& t, const Tensor<S>& g) {
                           t.accumulate(ix, ops::permute(g, std::span<const std::size_t>(inverse)));
                       });
}

template <typename S>
Var<S> reshape(Var<S> x, Shape shape) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    Shape original = x.shape();
    return tape.record(x.value().reshaped(std::move(shape)), {x},
                       [ix, original = std::move(original)](Tape<S>& t, const Tensor<S>& g) {
                           t.accumulate(ix, g.reshaped(original));
                       });
}

template <typename S>
Var<S> softmax_cols(Var<S> logits) {
    Tape<S>& tape = *logits.tape();
    const std::size_t ix = logits.id();
    const std::size_t io = tape.size();  // id the output node will receive
    return tape.record(ops::softmax_cols(logits.value()), {logits}, [ix, io](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ix, ops::softmax_cols_backward(t.value(io), g));
    });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
    Tape<S>& tape = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(ops::add(a.value(), b.value()), {a, b}, [ia, ib](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
    Tape<S>& tape = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(ops::sub(a.value(), b.value()), {a, b}, [ia, ib](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, ops::scale(g, S{-1}));
    });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
    Tape<S>& tape = *a.tape();
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(ops::mul(a.value(), b.value()), {a, b}, [ia, ib](Tape<S>& t, const Tensor<S>& g) {
        if (t.requires_grad(ia)) t.accumulate(ia, ops::mul(g, t.value(ib)));
        if (t.requires_grad(ib)) t.accumulate(ib, ops::mul(g, t.value(ia)));
    });
}

template <typename S>
Var<S> scale(Var<S> x, S factor) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    return tape.record(ops::scale(x.value(), factor), {x}, [ix, factor](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ix, ops::scale(g, factor));
    });
}

template <typename S>
Var<S> relu(Var<S> x) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    return tape.record(ops::relu(x.value()), {x}, [ix](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ix, ops::relu_backward(t.value(ix), g));
    });
}

template <typename S>
Var<S> mean_over_axis(Var<S> x, std::size_t axis) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    Shape in_shape = x.shape();
    return tape.record(ops::mean_over_axis(x.value(), axis), {x},
                       [ix, axis, in_shape = std::move(in_shape)](Tape<S>& t, const Tensor<S>& g) {
                           t.accumulate(ix, ops::mean_over_axis_backward(g, in_shape, axis));
                       });
}

template <typename S>
Var<S> max_over_axis(Var<S> x, std::size_t axis) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    return tape.record(ops::max_over_axis(x.value(), axis), {x}, [ix, axis](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ix, ops::max_over_axis_backward(t.value(ix), g, axis));
    });
}

template <typename S>
Var<S> sum(Var<S> x) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    return tape.record(ops::sum(x.value()), {x}, [ix](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(ix, Tensor<S>::full(t.value(ix).shape(), g[0]));
    });
}

template <typename S>
Var<S> add_bias(Var<S> x, Var<S> bias) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id(), ib = bias.id();
    return tape.record(ops::add_bias(x.value(), bias.value()), {x, bias},
                       [ix, ib](Tape<S>& t, const Tensor<S>& g) {
                           t.accumulate(ix, g);
                           if (t.requires_grad(ib)) t.accumulate(ib, ops::bias_backward(g));
                       });
}

template <typename S>
Var<S> conv3d(Var<S> x, Var<S> kernel, ops::Triple stride, ops::Padding padding) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id(), ik = kernel.id();
    return tape.record(ops::conv3d(x.value(), kernel.value(), stride, padding), {x, kernel},
                       [ix, ik, stride, padding](Tape<S>& t, const Tensor<S>& g) {
                           const Tensor<S>& xv = t.value(ix);
                           const Tensor<S>& kv = t.value(ik);
                           if (t.requires_grad(ix)) {
                               t.accumulate(ix, ops::conv3d_backward_input(g, kv, xv.shape(), stride, padding));
                           }
                           if (t.requires_grad(ik)) {
                               t.accumulate(ik, ops::conv3d_backward_kernel(xv, g, kv.shape(), stride, padding));
                           }
                       });
}

template <typename S>
Var<S> depthwise_conv3d(Var<S> x, Var<S> kernel, ops::Triple stride, ops::Padding padding) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id(), ik = kernel.id();
    return tape.record(ops::depthwise_conv3d(x.value(), kernel.value(), stride, padding), {x, kernel},
                       [ix, ik, stride, padding](Tape<S>& t, const Tensor<S>& g) {
                           const Tensor<S>& xv = t.value(ix);
                           const Tensor<S>& kv = t.value(ik);
                           if (t.requires_grad(ix)) {
                               t.accumulate(ix, ops::depthwise_conv3d_backward_input(g, kv, xv.shape(), stride,
                                                                                     padding));
                           }
                           if (t.requires_grad(ik)) {
                               t.accumulate(ik, ops::depthwise_conv3d_backward_kernel(xv, g, kv.shape(), stride,
                                                                                      padding));
                           }
                       });
}

template <typename S>
Var<S> avg_pool3d(Var<S> x, ops::Triple window) {
    Tape<S>& tape = *x.tape();
    const std::size_t ix = x.id();
    Shape in_shape = x.shape();
    return tape.record(ops::avg_pool3d(x.value(), window), {x},
                       [ix, window, in_shape = std::move(in_shape)](Tape<S>& t, const Tensor<S>& g) {
                           t.accumulate(ix, ops::avg_pool3d_backward(g, in_shape, window));
                       });
}

template <typename S>
Var<S> diag(Var<S> v) {
    Tape<S>& tape = *v.tape();
    const std::size_t iv = v.id();
    return tape.record(ops::diag(v.value()), {v}, [iv](Tape<S>& t, const Tensor<S>& g) {
        t.accumulate(iv, ops::diagonal(g));
    });
}

#define FEWFRAME_INSTANTIATE_AD(S)                                                          \
    template class Tape<S>;                                                                 \
    template Var<S> matmul(Var<S>, Var<S>);                                                 \
    template Var<S> permute(Var<S>, std::span<const std::size_t>);                          \
    template Var<S> reshape(Var<S>, Shape);                                                 \
    template Var<S> softmax_cols(Var<S>);                                                   \
    template Var<S> add(Var<S>, Var<S>);                                                    \
    template Var<S> sub(Var<S>, Var<S>);                                                    \
    template Var<S> mul(Var<S>, Var<S>);                                                    \
    template Var<S> scale(Var<S>, S);                                                       \
    template Var<S> relu(Var<S>);                                                           \
    template Var<S> mean_over_axis(Var<S>, std::size_t);                                    \
    template Var<S> max_over_axis(Var<S>, std::size_t);                                     \
    template Var<S> sum(Var<S>);                                                            \
    template Var<S> add_bias(Var<S>, Var<S>);                                               \
    template Var<S> conv3d(Var<S>, Var<S>, ops::Triple, ops::Padding);                      \
    template Var<S> depthwise_conv3d(Var<S>, Var<S>, ops::Triple, ops::Padding);            \
    template Var<S> avg_pool3d(Var<S>, ops::Triple);                                        \
    template Var<S> diag(Var<S>);

FEWFRAME_INSTANTIATE_AD(float)
FEWFRAME_INSTANTIATE_AD(double)

#undef FEWFRAME_INSTANTIATE_AD

}  // namespace fewframe::ad
