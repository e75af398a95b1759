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

// Toy networks: a lightweight coarse feature extractor (client side) and a
// small temporal-convolution recognizer (cloud side).
//
// Extractor: per-channel input bias, avg-pool to extractor_hw, then two depthwise-separable stages
//   [1x3x3 depthwise, 1x1x1 pointwise, relu]; the second depthwise is strided
//   2 spatially. Default 16x32x32x3 -> 16x8x8x16.
// Recognizer: two [3x3x3 conv stride (1,2,2), relu] stages, global max pool
//   over (T_s, H, W), linear classifier, softmax.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fewframe/autograd.hpp"
#include "fewframe/op_descriptor.hpp"
#include "fewframe/tsd.hpp"

namespace fewframe::nets {

/// Initial extractor input bias; centers [0, 1] pixels.
inline constexpr double kInputBiasInit = -0.5;

struct NetConfig {
    std::size_t frames = 16;      // T, clip length fed to the extractor
    std::size_t distilled = 4;    // T_s, frames fed to the recognizer
    std::size_t input_hw = 32;    // frame side
    std::size_t channels = 3;     // frame channels
    std::size_t extractor_hw = 16;
    std::array<std::size_t, 2> extractor_channels{8, 16};
    std::array<std::size_t, 2> main_channels{16, 32};
    std::size_t classes = 8;      // K

    /// Throws ArgumentError on non-positive extents, extractor_hw > input_hw,
    /// input_hw not a multiple of extractor_hw, or T_s > T.
    void validate() const;

    Shape clip_shape() const { return {frames, input_hw, input_hw, channels}; }
    /// Extractor output for a T-frame clip.
    Shape feature_shape() const;
    tsd::BlockConfig block() const;
};

enum class ParamGroup { Extractor, Tsd, Main, Attention };

std::string_view group_name(ParamGroup g);
/// Group implied by the name prefix ("extractor.", "tsd.", "main.", "attn.").
ParamGroup group_of(std::string_view name);

/// {extractor, tsd} run on the client; {main} on the cloud.
inline bool is_client_group(ParamGroup g) { return g == ParamGroup::Extractor || g == ParamGroup::Tsd; }

template <typename S>
struct Param {
    std::string name;
    ParamGroup group;
    Tensor<S> value;

    friend bool operator==(const Param&, const Param&) = default;
};

/// Ordered, uniquely named parameter set.
template <typename S>
class ModelParams {
  public:
    void add(std::string name, Tensor<S> value);

    bool contains(std::string_view name) const;
    const Tensor<S>& at(std::string_view name) const;
    Tensor<S>& at(std::string_view name);

    std::span<const Param<S>> params() const noexcept { return params_; }
    std::span<Param<S>> params() noexcept { return params_; }

    /// Scalar parameter count in one group.
    std::size_t count(ParamGroup g) const;
    std::size_t count() const;

    tsd::TsdWeights<S> tsd_weights() const;
    /// softmax(attn.logits): per-position importance, l1-normalized.
    std::vector<S> attention_weights() const;

    template <typename D>
    ModelParams<D> cast() const {
        ModelParams<D> out;
        for (const auto& p : params_) out.add(p.name, p.value.template cast<D>());
        return out;
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

  private:
    std::vector<Param<S>> params_;
};

/// He-normal convs, zero biases (input bias kInputBiasInit), N(0, 0.01) TSD kernels, zero attention logits.
template <typename S>
ModelParams<S> init_params(const NetConfig& config, std::uint64_t seed);

/// Parameters placed on a tape; groups for which `trainable` returns false
/// become constants.
template <typename S>
class BoundParams {
  public:
    BoundParams(ad::Tape<S>& tape, const ModelParams<S>& params,
                const std::function<bool(ParamGroup)>& trainable);

    ad::Var<S> operator[](std::string_view name) const;
    /// Vars in ModelParams order.
    std::span<const ad::Var<S>> vars() const noexcept { return vars_; }
    tsd::TsdVars<S> tsd() const;
    ad::Tape<S>& tape() const noexcept { return *tape_; }

  private:
    ad::Tape<S>* tape_;
    const ModelParams<S>* params_;
    std::vector<ad::Var<S>> vars_;
};

template <typename S>
ad::Var<S> coarse_features(ad::Var<S> x, const BoundParams<S>& params, const NetConfig& config);

/// K x 1 class probabilities for a T_s x H x W x C clip (any T_s >= 1).
template <typename S>
ad::Var<S> recognize(ad::Var<S> y, const BoundParams<S>& params, const NetConfig& config);

/// Length-T attention weights as a differentiable vector.
template <typename S>
ad::Var<S> attention_weights(const BoundParams<S>& params);

template <typename S>
Tensor<S> coarse_features(const Tensor<S>& x, const ModelParams<S>& params, const NetConfig& config);

/// Length-K probability vector.
template <typename S>
Tensor<S> recognize(const Tensor<S>& y, const ModelParams<S>& params, const NetConfig& config);

/// Op lists used for FLOP accounting.
std::vector<saasbench::OpDescriptor> extractor_ops(const NetConfig& config);
std::vector<saasbench::OpDescriptor> tsd_block_ops(const NetConfig& config);
/// Y = X P for one clip.
std::vector<saasbench::OpDescriptor> distill_ops(const NetConfig& config);
std::vector<saasbench::OpDescriptor> recognizer_ops(const NetConfig& config, std::size_t input_frames);

}  // namespace fewframe::nets
