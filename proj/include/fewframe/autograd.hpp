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

// Reverse-mode automatic differentiation over the kernels in ops.hpp.
//
// A Tape records every op executed on Vars created from it. Each recorded node
// keeps its forward value; nodes that depend on a trainable variable also keep
// a backward closure. `Tape::backward` walks nodes in exact reverse recording
// order. A tape is confined to one thread.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include "fewframe/ops.hpp"
#include "fewframe/tensor.hpp"

namespace fewframe::ad {

template <typename S>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename S>
class Var {
  public:
    Var() = default;
    Var(Tape<S>* tape, std::size_t id) : tape_(tape), id_(id) {}

    const Tensor<S>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }
    std::size_t id() const noexcept { return id_; }
    Tape<S>* tape() const noexcept { return tape_; }

  private:
    Tape<S>* tape_ = nullptr;
    std::size_t id_ = 0;
};

template <typename S>
class Tape {
  public:
    using BackwardFn = std::function<void(Tape&, const Tensor<S>& grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that never receives a gradient.
    Var<S> constant(Tensor<S> value);
    /// Leaf whose gradient is collected by backward().
    Var<S> variable(Tensor<S> value);

    /// Records an op result. The node requires grad iff any input does; the
    /// closure is discarded otherwise.
    Var<S> record(Tensor<S> value, std::initializer_list<Var<S>> inputs, BackwardFn backward);

    const Tensor<S>& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

    /// Adds g into the gradient of node `id`; no-op for nodes without grad.
    void accumulate(std::size_t id, const Tensor<S>& g);
    void accumulate(std::size_t id, Tensor<S>&& g);

    /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one element.
    void backward(Var<S> loss);

    /// Gradient of a node after backward(); zeros of the value's shape if the
    /// node was not reached.
    Tensor<S> grad(Var<S> v) const;

    /// Node ids whose backward closure ran during the last backward(), in order.
    const std::vector<std::size_t>& backward_order() const noexcept { return backward_order_; }

    std::size_t size() const noexcept { return nodes_.size(); }

  private:
    struct Node {
        Tensor<S> value;
        bool requires_grad = false;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::vector<std::optional<Tensor<S>>> grads_;
    std::vector<std::size_t> backward_order_;
};

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b);
template <typename S>
Var<S> permute(Var<S> x, std::span<const std::size_t> axes);
template <typename S>
Var<S> reshape(Var<S> x, Shape shape);
template <typename S>
Var<S> softmax_cols(Var<S> logits);
template <typename S>
Var<S> add(Var<S> a, Var<S> b);
template <typename S>
Var<S> sub(Var<S> a, Var<S> b);
template <typename S>
Var<S> mul(Var<S> a, Var<S> b);
template <typename S>
Var<S> scale(Var<S> x, S factor);
template <typename S>
Var<S> relu(Var<S> x);
template <typename S>
Var<S> mean_over_axis(Var<S> x, std::size_t axis);
template <typename S>
Var<S> max_over_axis(Var<S> x, std::size_t axis);
template <typename S>
Var<S> sum(Var<S> x);
template <typename S>
Var<S> add_bias(Var<S> x, Var<S> bias);
template <typename S>
Var<S> conv3d(Var<S> x, Var<S> kernel, ops::Triple stride, ops::Padding padding);
template <typename S>
Var<S> depthwise_conv3d(Var<S> x, Var<S> kernel, ops::Triple stride, ops::Padding padding);
template <typename S>
Var<S> avg_pool3d(Var<S> x, ops::Triple window);
template <typename S>
Var<S> diag(Var<S> v);

}  // namespace fewframe::ad
