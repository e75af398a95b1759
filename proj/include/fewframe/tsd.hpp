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

// Temporal sequence distillation block.
//
// A clip X of T frames is distilled into T_s frames by Y = X P, where P is a
// T x T_s matrix predicted from coarse features f (T x H x W x C):
//
//   O = Trans(f * w_alpha) * w_beta      (H x W x C x T_s)
//   G = f * w_gamma                      (T x H x W x C)
//   P = softmax_cols(G_mat . O_mat)      (T x T_s)
//
// G_mat is G reshaped to T x HWC, O_mat is O reshaped to HWC x T_s. Every frame
// is flattened (H, W, C) row-major; that is the only flattening used here.

#pragma once

#include <cstdint>
#include <random>

#include "fewframe/autograd.hpp"
#include "fewframe/tensor.hpp"

namespace fewframe::tsd {

/// T x T_s matrix; entry (i, j) weights input frame i in distilled frame j.
template <typename S>
class TransformMatrix {
  public:
    explicit TransformMatrix(Tensor<S> values) : values_(std::move(values)) {
        if (values_.rank() != 2) {
            throw DimensionError("transform matrix must be rank 2, got " + shape_string(values_.shape()));
        }
    }

    std::size_t frames() const noexcept { return values_.dim(0); }
    std::size_t distilled() const noexcept { return values_.dim(1); }
    S operator()(std::size_t i, std::size_t j) const { return values_[i * distilled() + j]; }
    const Tensor<S>& values() const noexcept { return values_; }

  private:
    Tensor<S> values_;
};

/// Kernel geometry of the block. Channels are preserved by both 3D convs.
struct BlockConfig {
    std::size_t frames = 16;      // T
    std::size_t distilled = 4;    // T_s
    std::size_t channels = 16;    // C of the incoming feature map
    ops::Triple alpha_kernel{3, 3, 3};
    ops::Triple gamma_kernel{3, 3, 3};
};

template <typename S>
struct TsdWeights {
    Tensor<S> w_alpha;  // Ka x C x C
    Tensor<S> b_alpha;  // C
    Tensor<S> w_beta;   // 1 x 1 x 1 x T x T_s, applied with T as the channel axis
    Tensor<S> b_beta;   // T_s
    Tensor<S> w_gamma;  // Kg x C x C
    Tensor<S> b_gamma;  // C
};

template <typename S>
struct TsdVars {
    ad::Var<S> w_alpha, b_alpha, w_beta, b_beta, w_gamma, b_gamma;
};

/// Gaussian(0, stddev) kernels, zero biases. Throws ArgumentError if T_s > T.
template <typename S>
TsdWeights<S> init_weights(const BlockConfig& config, std::mt19937_64& rng, double stddev = 0.01);

/// Shapes of the weights for `config`, in TsdWeights field order.
std::vector<Shape> weight_shapes(const BlockConfig& config);

template <typename S>
TsdVars<S> bind(ad::Tape<S>& tape, const TsdWeights<S>& weights, bool trainable);

/// Differentiable transform; f is T x H x W x C.
template <typename S>
ad::Var<S> compute_transform(ad::Var<S> f, const TsdVars<S>& weights);

/// Differentiable Y = X P for a T x H x W x C clip and a T x T_s matrix.
template <typename S>
ad::Var<S> distill(ad::Var<S> x, ad::Var<S> p);

template <typename S>
TransformMatrix<S> compute_transform(const Tensor<S>& f, const TsdWeights<S>& weights);

template <typename S>
Tensor<S> distill(const Tensor<S>& x, const TransformMatrix<S>& p);

}  // namespace fewframe::tsd
