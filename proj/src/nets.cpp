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

#include "fewframe/nets.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace fewframe::nets {
namespace {

constexpr ops::Triple kUnit{1, 1, 1};
constexpr ops::Triple kHalveSpatial{1, 2, 2};

std::size_t halve(std::size_t n) { return (n + 1) / 2; }

template <typename S>
Tensor<S> gaussian(const Shape& shape, std::mt19937_64& rng, double stddev) {
    Tensor<S> t(shape);
    std::normal_distribution<double> dist(0.0, stddev);
    for (S& v : t.data()) v = static_cast<S>(dist(rng));
    return t;
}

double he_stddev(std::size_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

}  // namespace

void NetConfig::validate() const {
    const bool positive = frames && distilled && input_hw && channels && extractor_hw && classes &&
                          extractor_channels[0] && extractor_channels[1] && main_channels[0] &&
                          main_channels[1];
    if (!positive) throw ArgumentError("net config: all extents must be positive");
    if (extractor_hw > input_hw || input_hw % extractor_hw != 0) {
        throw ArgumentError("net config: extractor_hw " + std::to_string(extractor_hw) +
                            " must divide input_hw " + std::to_string(input_hw));
    }
    if (distilled > frames) {
        throw ArgumentError("net config: T_s " + std::to_string(distilled) + " exceeds T " +
                            std::to_string(frames));
    }
    if (classes < 2) throw ArgumentError("net config: need at least 2 classes");
}

Shape NetConfig::feature_shape() const {
    const std::size_t side = halve(extractor_hw);
    return {frames, side, side, extractor_channels[1]};
}

tsd::BlockConfig NetConfig::block() const {
    tsd::BlockConfig b;
    b.frames = frames;
    b.distilled = distilled;
    b.channels = extractor_channels[1];
    return b;
}

std::string_view group_name(ParamGroup g) {
    switch (g) {
        case ParamGroup::Extractor: return "extractor";
        case ParamGroup::Tsd: return "tsd";
        case ParamGroup::Main: return "main";
        case ParamGroup::Attention: return "attn";
    }
    return "unknown";
}

ParamGroup group_of(std::string_view name) {
    for (ParamGroup g : {ParamGroup::Extractor, ParamGroup::Tsd, ParamGroup::Main, ParamGroup::Attention}) {
        const std::string_view prefix = group_name(g);
        if (name.size() > prefix.size() && name.substr(0, prefix.size()) == prefix && name[prefix.size()] == '.') {
            return g;
        }
    }
    throw ArgumentError("parameter name '" + std::string(name) + "' has no known group prefix");
}

template <typename S>
void ModelParams<S>::add(std::string name, Tensor<S> value) {
    if (contains(name)) throw ArgumentError("duplicate parameter name '" + name + "'");
    const ParamGroup g = group_of(name);
    params_.push_back(Param<S>{std::move(name), g, std::move(value)});
}

template <typename S>
bool ModelParams<S>::contains(std::string_view name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const Param<S>& p) { return p.name == name; });
}

template <typename S>
const Tensor<S>& ModelParams<S>::at(std::string_view name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.value;
    }
    throw ArgumentError("no parameter named '" + std::string(name) + "'");
}

template <typename S>
Tensor<S>& ModelParams<S>::at(std::string_view name) {
    return const_cast<Tensor<S>&>(std::as_const(*this).at(name));
}

template <typename S>
std::size_t ModelParams<S>::count(ParamGroup g) const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        if (p.group == g) n += p.value.size();
    }
    return n;
}

template <typename S>
std::size_t ModelParams<S>::count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

template <typename S>
tsd::TsdWeights<S> ModelParams<S>::tsd_weights() const {
    return {at("tsd.w_alpha"), at("tsd.b_alpha"), at("tsd.w_beta"),
            at("tsd.b_beta"),  at("tsd.w_gamma"), at("tsd.b_gamma")};
}

template <typename S>
std::vector<S> ModelParams<S>::attention_weights() const {
    const Tensor<S>& logits = at("attn.logits");
    const Tensor<S> p = ops::softmax_cols(logits.reshaped({logits.size(), 1}));
    return p.vector();
}

template <typename S>
ModelParams<S> init_params(const NetConfig& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(seed);
    ModelParams<S> p;
    const std::size_t cin = c.channels;
    const auto [e1, e2] = c.extractor_channels;
    const auto [m1, m2] = c.main_channels;

    p.add("extractor.input_bias", Tensor<S>::full({cin}, static_cast<S>(kInputBiasInit)));
    p.add("extractor.dw1", gaussian<S>({1, 3, 3, cin}, rng, he_stddev(9)));
    p.add("extractor.dw1_bias", Tensor<S>({cin}));
    p.add("extractor.pw1", gaussian<S>({1, 1, 1, cin, e1}, rng, he_stddev(cin)));
    p.add("extractor.pw1_bias", Tensor<S>({e1}));
    p.add("extractor.dw2", gaussian<S>({1, 3, 3, e1}, rng, he_stddev(9)));
    p.add("extractor.dw2_bias", Tensor<S>({e1}));
    p.add("extractor.pw2", gaussian<S>({1, 1, 1, e1, e2}, rng, he_stddev(e1)));
    p.add("extractor.pw2_bias", Tensor<S>({e2}));

    tsd::TsdWeights<S> w = tsd::init_weights<S>(c.block(), rng, 0.01);
    p.add("tsd.w_alpha", std::move(w.w_alpha));
    p.add("tsd.b_alpha", std::move(w.b_alpha));
    p.add("tsd.w_beta", std::move(w.w_beta));
    p.add("tsd.b_beta", std::move(w.b_beta));
    p.add("tsd.w_gamma", std::move(w.w_gamma));
    p.add("tsd.b_gamma", std::move(w.b_gamma));

    p.add("main.conv1", gaussian<S>({3, 3, 3, cin, m1}, rng, he_stddev(27 * cin)));
    p.add("main.conv1_bias", Tensor<S>({m1}));
    p.add("main.conv2", gaussian<S>({3, 3, 3, m1, m2}, rng, he_stddev(27 * m1)));
    p.add("main.conv2_bias", Tensor<S>({m2}));
    p.add("main.fc", gaussian<S>({m2, c.classes}, rng, std::sqrt(1.0 / static_cast<double>(m2))));
    p.add("main.fc_bias", Tensor<S>({c.classes}));

    p.add("attn.logits", Tensor<S>({c.frames}));
    return p;
}

template <typename S>
BoundParams<S>::BoundParams(ad::Tape<S>& tape, const ModelParams<S>& params,
                            const std::function<bool(ParamGroup)>& trainable)
    : tape_(&tape), params_(&params) {
    vars_.reserve(params.params().size());
    for (const auto& p : params.params()) {
        vars_.push_back(trainable(p.group) ? tape.variable(p.value) : tape.constant(p.value));
    }
}

template <typename S>
ad::Var<S> BoundParams<S>::operator[](std::string_view name) const {
    const auto all = params_->params();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].name == name) return vars_[i];
    }
    throw ArgumentError("no parameter named '" + std::string(name) + "'");
}

template <typename S>
tsd::TsdVars<S> BoundParams<S>::tsd() const {
    const auto& self = *this;
    return {self["tsd.w_alpha"], self["tsd.b_alpha"], self["tsd.w_beta"],
            self["tsd.b_beta"],  self["tsd.w_gamma"], self["tsd.b_gamma"]};
}

template <typename S>
ad::Var<S> coarse_features(ad::Var<S> x, const BoundParams<S>& p, const NetConfig& c) {
    if (x.shape() != c.clip_shape()) {
        throw DimensionError("coarse_features: input " + shape_string(x.shape()) + " does not match config " +
                             shape_string(c.clip_shape()));
    }
    const std::size_t pool = c.input_hw / c.extractor_hw;
    ad::Var<S> h = ad::avg_pool3d(ad::add_bias(x, p["extractor.input_bias"]), ops::Triple{1, pool, pool});
    h = ad::add_bias(ad::depthwise_conv3d(h, p["extractor.dw1"], kUnit, ops::Padding::Same), p["extractor.dw1_bias"]);
    h = ad::relu(ad::add_bias(ad::conv3d(h, p["extractor.pw1"], kUnit, ops::Padding::Valid), p["extractor.pw1_bias"]));
    h = ad::add_bias(ad::depthwise_conv3d(h, p["extractor.dw2"], kHalveSpatial, ops::Padding::Same),
                     p["extractor.dw2_bias"]);
    h = ad::relu(ad::add_bias(ad::conv3d(h, p["extractor.pw2"], kUnit, ops::Padding::Valid), p["extractor.pw2_bias"]));
    return h;
}

template <typename S>
ad::Var<S> recognize(ad::Var<S> y, const BoundParams<S>& p, const NetConfig& c) {
    const Shape ys = y.shape();
    if (ys.size() != 4 || ys[1] != c.input_hw || ys[2] != c.input_hw || ys[3] != c.channels) {
        throw DimensionError("recognize: input " + shape_string(ys) + " does not match frame geometry " +
                             std::to_string(c.input_hw) + "x" + std::to_string(c.input_hw) + "x" +
                             std::to_string(c.channels));
    }
    ad::Var<S> h = ad::relu(ad::add_bias(ad::conv3d(y, p["main.conv1"], kHalveSpatial, ops::Padding::Same),
                                         p["main.conv1_bias"]));
    h = ad::relu(ad::add_bias(ad::conv3d(h, p["main.conv2"], kHalveSpatial, ops::Padding::Same),
                              p["main.conv2_bias"]));
    const Shape hs = h.shape();
    ad::Var<S> pooled = ad::max_over_axis(ad::reshape(h, {hs[0] * hs[1] * hs[2], hs[3]}), 0);
    ad::Var<S> logits = ad::add_bias(ad::matmul(ad::reshape(pooled, {1, hs[3]}), p["main.fc"]), p["main.fc_bias"]);
    return ad::softmax_cols(ad::reshape(logits, {c.classes, 1}));
}

template <typename S>
ad::Var<S> attention_weights(const BoundParams<S>& p) {
    ad::Var<S> logits = p["attn.logits"];
    const std::size_t frames = logits.shape()[0];
    return ad::reshape(ad::softmax_cols(ad::reshape(logits, {frames, 1})), {frames});
}

namespace {
bool none(ParamGroup) { return false; }
}  // namespace

template <typename S>
Tensor<S> coarse_features(const Tensor<S>& x, const ModelParams<S>& params, const NetConfig& config) {
    ad::Tape<S> tape;
    BoundParams<S> bound(tape, params, none);
    return coarse_features(tape.constant(x), bound, config).value();
}

template <typename S>
Tensor<S> recognize(const Tensor<S>& y, const ModelParams<S>& params, const NetConfig& config) {
    ad::Tape<S> tape;
    BoundParams<S> bound(tape, params, none);
    return recognize(tape.constant(y), bound, config).value().reshaped({config.classes});
}

namespace {

using saasbench::OpDescriptor;
using saasbench::OpKind;

OpDescriptor conv(std::string name, std::uint64_t k, std::uint64_t kh, std::uint64_t cin, std::uint64_t cout,
                  std::uint64_t t, std::uint64_t h, std::uint64_t w) {
    OpDescriptor d{std::move(name), OpKind::Conv3d};
    d.kt = k, d.kh = kh, d.kw = kh, d.cin = cin, d.cout = cout, d.out_t = t, d.out_h = h, d.out_w = w;
    return d;
}

OpDescriptor depthwise(std::string name, std::uint64_t c, std::uint64_t t, std::uint64_t h, std::uint64_t w) {
    OpDescriptor d{std::move(name), OpKind::DepthwiseConv3d};
    d.kt = 1, d.kh = 3, d.kw = 3, d.cin = c, d.out_t = t, d.out_h = h, d.out_w = w;
    return d;
}

OpDescriptor elementwise(std::string name, std::uint64_t n) {
    OpDescriptor d{std::move(name), OpKind::Elementwise};
    d.elements = n;
    return d;
}

OpDescriptor matmul(std::string name, std::uint64_t m, std::uint64_t k, std::uint64_t n) {
    OpDescriptor d{std::move(name), OpKind::Matmul};
    d.m = m, d.k = k, d.n = n;
    return d;
}

OpDescriptor softmax(std::string name, std::uint64_t rows, std::uint64_t cols) {
    OpDescriptor d{std::move(name), OpKind::SoftmaxCols};
    d.m = rows, d.n = cols;
    return d;
}

}  // namespace

std::vector<OpDescriptor> extractor_ops(const NetConfig& c) {
    const std::uint64_t t = c.frames, eh = c.extractor_hw, eh2 = halve(c.extractor_hw);
    const auto [e1, e2] = c.extractor_channels;
    return {
        elementwise("extractor.input_bias", t * c.input_hw * c.input_hw * c.channels),
        elementwise("extractor.pool", t * c.input_hw * c.input_hw * c.channels),
        depthwise("extractor.dw1", c.channels, t, eh, eh),
        elementwise("extractor.dw1_bias", t * eh * eh * c.channels),
        conv("extractor.pw1", 1, 1, c.channels, e1, t, eh, eh),
        elementwise("extractor.pw1_bias", t * eh * eh * e1),
        elementwise("extractor.relu1", t * eh * eh * e1),
        depthwise("extractor.dw2", e1, t, eh2, eh2),
        elementwise("extractor.dw2_bias", t * eh2 * eh2 * e1),
        conv("extractor.pw2", 1, 1, e1, e2, t, eh2, eh2),
        elementwise("extractor.pw2_bias", t * eh2 * eh2 * e2),
        elementwise("extractor.relu2", t * eh2 * eh2 * e2),
    };
}

std::vector<OpDescriptor> tsd_block_ops(const NetConfig& c) {
    const Shape f = c.feature_shape();
    const std::uint64_t t = f[0], h = f[1], w = f[2], ch = f[3], ts = c.distilled;
    const tsd::BlockConfig b = c.block();
    OpDescriptor alpha = conv("tsd.w_alpha", b.alpha_kernel.t, b.alpha_kernel.h, ch, ch, t, h, w);
    alpha.kw = b.alpha_kernel.w;
    OpDescriptor gamma = conv("tsd.w_gamma", b.gamma_kernel.t, b.gamma_kernel.h, ch, ch, t, h, w);
    gamma.kw = b.gamma_kernel.w;
    return {
        alpha,
        elementwise("tsd.b_alpha", t * h * w * ch),
        conv("tsd.w_beta", 1, 1, t, ts, h, w, ch),
        elementwise("tsd.b_beta", h * w * ch * ts),
        gamma,
        elementwise("tsd.b_gamma", t * h * w * ch),
        matmul("tsd.logits", t, h * w * ch, ts),
        softmax("tsd.softmax", t, ts),
    };
}

std::vector<OpDescriptor> distill_ops(const NetConfig& c) {
    return {matmul("distill", c.distilled, c.frames, c.input_hw * c.input_hw * c.channels)};
}

std::vector<OpDescriptor> recognizer_ops(const NetConfig& c, std::size_t input_frames) {
    const std::uint64_t t = input_frames, h1 = halve(c.input_hw), h2 = halve(h1);
    const auto [m1, m2] = c.main_channels;
    return {
        conv("main.conv1", 3, 3, c.channels, m1, t, h1, h1),
        elementwise("main.conv1_bias", t * h1 * h1 * m1),
        elementwise("main.relu1", t * h1 * h1 * m1),
        conv("main.conv2", 3, 3, m1, m2, t, h2, h2),
        elementwise("main.conv2_bias", t * h2 * h2 * m2),
        elementwise("main.relu2", t * h2 * h2 * m2),
        elementwise("main.pool", t * h2 * h2 * m2),
        matmul("main.fc", 1, m2, c.classes),
        elementwise("main.fc_bias", c.classes),
        softmax("main.softmax", c.classes, 1),
    };
}

#define FEWFRAME_INSTANTIATE_NETS(S)                                                                   \
    template class ModelParams<S>;                                                                     \
    template class BoundParams<S>;                                                                     \
    template ModelParams<S> init_params<S>(const NetConfig&, std::uint64_t);                           \
    template ad::Var<S> coarse_features(ad::Var<S>, const BoundParams<S>&, const NetConfig&);          \
    template ad::Var<S> recognize(ad::Var<S>, const BoundParams<S>&, const NetConfig&);                \
    template ad::Var<S> attention_weights(const BoundParams<S>&);                                      \
    template Tensor<S> coarse_features(const Tensor<S>&, const ModelParams<S>&, const NetConfig&);     \
    template Tensor<S> recognize(const Tensor<S>&, const ModelParams<S>&, const NetConfig&);

FEWFRAME_INSTANTIATE_NETS(float)
FEWFRAME_INSTANTIATE_NETS(double)

#undef FEWFRAME_INSTANTIATE_NETS

}  // namespace fewframe::nets
