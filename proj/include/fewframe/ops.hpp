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

// Pure tensor kernels. Every function here is a total function of its inputs:
// no hidden state, no allocation beyond the returned tensor. The autograd layer
// (autograd.hpp) composes these forward kernels with their backward partners.

#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "fewframe/tensor.hpp"

namespace fewframe::ops {

/// Extents or strides along (T, H, W).
struct Triple {
    std::size_t t = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/// Valid: no padding. Same: output extent ceil(in / stride), zero padding split
/// symmetrically with the extra cell on the trailing side.
enum class Padding { Valid, Same };

struct ConvGeometry {
    Triple in;
    Triple kernel;
    Triple stride;
    Triple pad_before;
    Triple out;
};

/// Throws DimensionError if a kernel extent exceeds the padded input extent.
ConvGeometry conv_geometry(Triple in, Triple kernel, Triple stride, Padding padding);

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

template <typename S>
Tensor<S> permute(const Tensor<S>& x, std::span<const std::size_t> axes);

/// Throws ArgumentError unless `axes` is a permutation of 0..axes.size()-1.
std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> axes);

/// Column-wise softmax of a matrix, max-shifted per column.
template <typename S>
Tensor<S> softmax_cols(const Tensor<S>& logits);

/// Given softmax output p and dL/dp, returns dL/dlogits.
template <typename S>
Tensor<S> softmax_cols_backward(const Tensor<S>& p, const Tensor<S>& grad_p);

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <typename S>
Tensor<S> scale(const Tensor<S>& x, S factor);
template <typename S>
Tensor<S> relu(const Tensor<S>& x);
/// Subgradient 0 at x == 0.
template <typename S>
Tensor<S> relu_backward(const Tensor<S>& x, const Tensor<S>& grad);

/// Mean over one axis; the axis is removed from the shape (a rank-1 input
/// reduces to a rank-0 scalar).
template <typename S>
Tensor<S> mean_over_axis(const Tensor<S>& x, std::size_t axis);
template <typename S>
Tensor<S> mean_over_axis_backward(const Tensor<S>& grad, const Shape& input_shape, std::size_t axis);

/// Maximum over one axis; the axis is removed from the shape.
template <typename S>
Tensor<S> max_over_axis(const Tensor<S>& x, std::size_t axis);
/// Routes each gradient entry to the first position attaining the maximum.
template <typename S>
Tensor<S> max_over_axis_backward(const Tensor<S>& x, const Tensor<S>& grad, std::size_t axis);

template <typename S>
Tensor<S> sum(const Tensor<S>& x);

/// Adds a length-C bias along the last axis.
template <typename S>
Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& bias);
/// Sums `grad` over every axis but the last.
template <typename S>
Tensor<S> bias_backward(const Tensor<S>& grad);

/// Cross-correlation of a T x H x W x Cin clip with a Kt x Kh x Kw x Cin x Cout kernel.
template <typename S>
Tensor<S> conv3d(const Tensor<S>& x, const Tensor<S>& kernel, Triple stride, Padding padding);
template <typename S>
Tensor<S> conv3d_backward_input(const Tensor<S>& grad, const Tensor<S>& kernel, const Shape& input_shape,
                                Triple stride, Padding padding);
template <typename S>
Tensor<S> conv3d_backward_kernel(const Tensor<S>& x, const Tensor<S>& grad, const Shape& kernel_shape,
                                 Triple stride, Padding padding);

/// Per-channel cross-correlation with a Kt x Kh x Kw x C kernel.
template <typename S>
Tensor<S> depthwise_conv3d(const Tensor<S>& x, const Tensor<S>& kernel, Triple stride, Padding padding);
template <typename S>
Tensor<S> depthwise_conv3d_backward_input(const Tensor<S>& grad, const Tensor<S>& kernel,
                                          const Shape& input_shape, Triple stride, Padding padding);
template <typename S>
Tensor<S> depthwise_conv3d_backward_kernel(const Tensor<S>& x, const Tensor<S>& grad,
                                           const Shape& kernel_shape, Triple stride, Padding padding);

/// Non-overlapping average pooling; every input extent must be divisible by the window.
template <typename S>
Tensor<S> avg_pool3d(const Tensor<S>& x, Triple window);
template <typename S>
Tensor<S> avg_pool3d_backward(const Tensor<S>& grad, const Shape& input_shape, Triple window);

/// Length-n vector to n x n diagonal matrix.
template <typename S>
Tensor<S> diag(const Tensor<S>& v);
template <typename S>
Tensor<S> diagonal(const Tensor<S>& m);

}  // namespace fewframe::ops
