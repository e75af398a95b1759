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

#include "fewframe/tsd.hpp"

#include <array>
#include <string>

namespace fewframe::tsd {
namespace {

constexpr std::array<std::size_t, 4> kFramesLast{1, 2, 3, 0};  // T,H,W,C -> H,W,C,T
constexpr std::array<std::size_t, 2> kTranspose{1, 0};

template <typename S>
Tensor<S> gaussian(const Shape& shape, std::mt19937_64& rng, double stddev) {
    Tensor<S> t(shape);
    std::normal_distribution<double> dist(0.0, stddev);
    for (S& v : t.data()) v = static_cast<S>(dist(rng));
    return t;
}

void check_block_inputs(const Shape& f, const Shape& w_alpha, const Shape& w_beta, const Shape& w_gamma) {
    if (f.size() != 4) {
        throw DimensionError("compute_transform: features must be T x H x W x C, got " + shape_string(f));
    }
    if (w_beta.size() != 5 || w_beta[3] != f[0]) {
        throw DimensionError("compute_transform: w_beta " + shape_string(w_beta) +
                             " does not map the " + std::to_string(f[0]) + "-frame axis");
    }
    if (w_beta[4] > f[0]) {
        throw ArgumentError("compute_transform: distilled length " + std::to_string(w_beta[4]) +
                            " exceeds clip length " + std::to_string(f[0]));
    }
    if (w_alpha.size() != 5 || w_gamma.size() != 5 || w_alpha[4] != w_gamma[4]) {
        throw DimensionError("compute_transform: w_alpha " + shape_string(w_alpha) + " and w_gamma " +
                             shape_string(w_gamma) + " must produce equal channel counts");
    }
}

}  // namespace

std::vector<Shape> weight_shapes(const BlockConfig& c) {
    return {
        {c.alpha_kernel.t, c.alpha_kernel.h, c.alpha_kernel.w, c.channels, c.channels},
        {c.channels},
        {1, 1, 1, c.frames, c.distilled},
        {c.distilled},
        {c.gamma_kernel.t, c.gamma_kernel.h, c.gamma_kernel.w, c.channels, c.channels},
        {c.channels},
    };
}

template <typename S>
TsdWeights<S> init_weights(const BlockConfig& config, std::mt19937_64& rng, double stddev) {
    if (config.distilled == 0 || config.distilled > config.frames) {
        throw ArgumentError("TSD block: distilled length " + std::to_string(config.distilled) +
                            " must lie in [1, " + std::to_string(config.frames) + "]");
    }
    const auto shapes = weight_shapes(config);
    TsdWeights<S> w;
    w.w_alpha = gaussian<S>(shapes[0], rng, stddev);
    w.b_alpha = Tensor<S>(shapes[1]);
    w.w_beta = gaussian<S>(shapes[2], rng, stddev);
    w.b_beta = Tensor<S>(shapes[3]);
    w.w_gamma = gaussian<S>(shapes[4], rng, stddev);
    w.b_gamma = Tensor<S>(shapes[5]);
    return w;
}

template <typename S>
TsdVars<S> bind(ad::Tape<S>& tape, const TsdWeights<S>& w, bool trainable) {
    auto leaf = [&](const Tensor<S>& t) { return trainable ? tape.variable(t) : tape.constant(t); };
    return {leaf(w.w_alpha), leaf(w.b_alpha), leaf(w.w_beta), leaf(w.b_beta), leaf(w.w_gamma), leaf(w.b_gamma)};
}

template <typename S>
ad::Var<S> compute_transform(ad::Var<S> f, const TsdVars<S>& w) {
    check_block_inputs(f.shape(), w.w_alpha.shape(), w.w_beta.shape(), w.w_gamma.shape());
    if (!f.value().all_finite()) {
        throw NumericError("compute_transform: non-finite feature map");
    }
    const std::size_t frames = f.shape()[0];
    const std::size_t distilled = w.w_beta.shape()[4];
    constexpr ops::Triple unit{1, 1, 1};

    // Temporal path: f * w_alpha, frames moved to the channel axis, then w_beta mixes T -> T_s.
    ad::Var<S> a = ad::add_bias(ad::conv3d(f, w.w_alpha, unit, ops::Padding::Same), w.b_alpha);
    ad::Var<S> a_t = ad::permute(a, std::span<const std::size_t>(kFramesLast));
    ad::Var<S> o = ad::add_bias(ad::conv3d(a_t, w.w_beta, unit, ops::Padding::Valid), w.b_beta);

    // Feature path.
    ad::Var<S> g = ad::add_bias(ad::conv3d(f, w.w_gamma, unit, ops::Padding::Same), w.b_gamma);

    const std::size_t flat = shape_size(g.shape()) / frames;
    ad::Var<S> o_mat = ad::reshape(o, {flat, distilled});
    ad::Var<S> g_mat = ad::reshape(g, {frames, flat});
    return ad::softmax_cols(ad::matmul(g_mat, o_mat));
}

template <typename S>
ad::Var<S> distill(ad::Var<S> x, ad::Var<S> p) {
    const Shape xs = x.shape();
    if (xs.size() != 4 || p.shape().size() != 2 || p.shape()[0] != xs[0]) {
        throw DimensionError("distill: clip " + shape_string(xs) + " and transform " +
                             shape_string(p.shape()) + " disagree on frame count");
    }
    const std::size_t frames = xs[0];
    const std::size_t flat = shape_size(xs) / frames;
    const std::size_t distilled = p.shape()[1];
    // Frames are rows here, so Y^T = P^T X^T.
    ad::Var<S> x_rows = ad::reshape(x, {frames, flat});
    ad::Var<S> y_rows = ad::matmul(ad::permute(p, std::span<const std::size_t>(kTranspose)), x_rows);
    return ad::reshape(y_rows, {distilled, xs[1], xs[2], xs[3]});
}

template <typename S>
TransformMatrix<S> compute_transform(const Tensor<S>& f, const TsdWeights<S>& weights) {
    ad::Tape<S> tape;
    auto vars = bind(tape, weights, false);
    return TransformMatrix<S>(compute_transform(tape.constant(f), vars).value());
}

template <typename S>
Tensor<S> distill(const Tensor<S>& x, const TransformMatrix<S>& p) {
    ad::Tape<S> tape;
    return distill(tape.constant(x), tape.constant(p.values())).value();
}

#define FEWFRAME_INSTANTIATE_TSD(S)                                                          \
    template TsdWeights<S> init_weights<S>(const BlockConfig&, std::mt19937_64&, double);    \
    template TsdVars<S> bind(ad::Tape<S>&, const TsdWeights<S>&, bool);                      \
    template ad::Var<S> compute_transform(ad::Var<S>, const TsdVars<S>&);                    \
    template ad::Var<S> distill(ad::Var<S>, ad::Var<S>);                                     \
    template TransformMatrix<S> compute_transform(const Tensor<S>&, const TsdWeights<S>&);   \
    template Tensor<S> distill(const Tensor<S>&, const TransformMatrix<S>&);

FEWFRAME_INSTANTIATE_TSD(float)
FEWFRAME_INSTANTIATE_TSD(double)

#undef FEWFRAME_INSTANTIATE_TSD

}  // namespace fewframe::tsd
