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

#include <gtest/gtest.h>

#include "fewframe/nets.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace fewframe {
namespace {

using oracle::Dense;
using nets::NetConfig;

// Layer-by-layer composition of the reference ops.
Dense extractor_oracle(const Dense& x, const nets::ModelParams<double>& p, const NetConfig& c) {
    const std::size_t pool = c.input_hw / c.extractor_hw;
    Dense h = oracle::avg_pool3d(oracle::add_bias(x, p.at("extractor.input_bias")), {1, pool, pool});
    h = oracle::add_bias(oracle::depthwise_conv3d(h, p.at("extractor.dw1"), {1, 1, 1}, true), p.at("extractor.dw1_bias"));
    h = oracle::relu(oracle::add_bias(oracle::conv3d(h, p.at("extractor.pw1"), {1, 1, 1}, false), p.at("extractor.pw1_bias")));
    h = oracle::add_bias(oracle::depthwise_conv3d(h, p.at("extractor.dw2"), {1, 2, 2}, true), p.at("extractor.dw2_bias"));
    return oracle::relu(oracle::add_bias(oracle::conv3d(h, p.at("extractor.pw2"), {1, 1, 1}, false), p.at("extractor.pw2_bias")));
}

Dense recognizer_oracle(const Dense& y, const nets::ModelParams<double>& p, const NetConfig& c) {
    Dense h = oracle::relu(oracle::add_bias(oracle::conv3d(y, p.at("main.conv1"), {1, 2, 2}, true), p.at("main.conv1_bias")));
    h = oracle::relu(oracle::add_bias(oracle::conv3d(h, p.at("main.conv2"), {1, 2, 2}, true), p.at("main.conv2_bias")));
    const std::size_t ch = h.dim(3), cells = h.size() / ch;
    Dense logits({c.classes, 1});
    for (std::size_t k = 0; k < c.classes; ++k) {
        double z = p.at("main.fc_bias")[k];
        for (std::size_t m = 0; m < ch; ++m) {
            double best = h[m];
            for (std::size_t i = 1; i < cells; ++i) best = std::max(best, h[i * ch + m]);
            z += best * p.at("main.fc").at({m, k});
        }
        logits[k] = z;
    }
    return oracle::softmax_cols(logits);
}

TEST(NetConfig, DefaultShapes) {
    NetConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.clip_shape(), (Shape{16, 32, 32, 3}));
    EXPECT_EQ(c.feature_shape(), (Shape{16, 8, 8, 16}));
    EXPECT_EQ(c.block().channels, 16u);
    EXPECT_EQ(c.block().distilled, 4u);
}

TEST(NetConfig, Validation) {
    NetConfig c;
    c.extractor_hw = 64;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.extractor_hw = 12;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.distilled = 17;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = {};
    c.classes = 1;
    EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(Params, GroupsAndNames) {
    auto p = nets::init_params<float>(NetConfig{}, 1);
    EXPECT_EQ(nets::group_of("extractor.dw1"), nets::ParamGroup::Extractor);
    EXPECT_EQ(nets::group_of("attn.logits"), nets::ParamGroup::Attention);
    EXPECT_THROW(nets::group_of("head.w"), ArgumentError);
    EXPECT_THROW(p.add("main.fc", Tensor<float>({1})), ArgumentError);
    EXPECT_THROW(p.at("main.nothing"), ArgumentError);
    EXPECT_EQ(p.count(), p.count(nets::ParamGroup::Extractor) + p.count(nets::ParamGroup::Tsd) +
                             p.count(nets::ParamGroup::Main) + p.count(nets::ParamGroup::Attention));
    EXPECT_EQ(p.count(nets::ParamGroup::Attention), 16u);
    // 3x3x3 kernels: 27*3*16 + 16 + 27*16*32 + 32 + 32*8 + 8
    EXPECT_EQ(p.count(nets::ParamGroup::Main), 1296u + 16 + 13824 + 32 + 256 + 8);
    EXPECT_TRUE(nets::is_client_group(nets::ParamGroup::Tsd));
    EXPECT_FALSE(nets::is_client_group(nets::ParamGroup::Main));
}

TEST(Params, DeterministicPerSeed) {
    EXPECT_EQ(nets::init_params<float>(NetConfig{}, 4), nets::init_params<float>(NetConfig{}, 4));
    EXPECT_FALSE(nets::init_params<float>(NetConfig{}, 4) == nets::init_params<float>(NetConfig{}, 5));
}

TEST(Params, AttentionWeightsStartUniform) {
    auto w = nets::init_params<double>(NetConfig{}, 1).attention_weights();
    ASSERT_EQ(w.size(), 16u);
    for (double v : w) EXPECT_NEAR(v, 1.0 / 16, 1e-15);
}

TEST(Extractor, DefaultOutputShape) {
    NetConfig c;
    auto p = nets::init_params<float>(c, 2);
    std::mt19937_64 rng(2);
    auto f = nets::coarse_features(oracle::random_tensor(c.clip_shape(), rng, 0, 1).cast<float>(), p, c);
    EXPECT_EQ(f.shape(), (Shape{16, 8, 8, 16}));
}

TEST(Extractor, ZeroInputZeroBiasesGivesZero) {
    NetConfig c;
    auto p = nets::init_params<double>(c, 3);
    for (auto& param : p.params()) {
        if (param.name.ends_with("_bias")) param.value = Dense(param.value.shape());
    }
    EXPECT_EQ(nets::coarse_features(Dense(c.clip_shape()), p, c), Dense(c.feature_shape()));
}

TEST(Extractor, WrongShape) {
    NetConfig c;
    auto p = nets::init_params<float>(c, 3);
    EXPECT_THROW(nets::coarse_features(Tensor<float>({8, 32, 32, 3}), p, c), DimensionError);
}

TEST(Extractor, MatchesCompositionOracle) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        NetConfig c = gradcheck::tiny_net(rng);
        auto p = gradcheck::random_params(c, rng);
        Dense x = oracle::random_tensor(c.clip_shape(), rng, 0, 1);
        EXPECT_LE(oracle::max_abs_diff(nets::coarse_features(x, p, c), extractor_oracle(x, p, c)), 1e-12);
    }
}

TEST(Recognizer, OutputIsDistribution) {
    NetConfig c;
    auto p = nets::init_params<float>(c, 5);
    std::mt19937_64 rng(5);
    for (std::size_t ts : {1u, 2u, 4u, 16u}) {
        auto probs = nets::recognize(oracle::random_tensor({ts, 32, 32, 3}, rng, 0, 1).cast<float>(), p, c);
        ASSERT_EQ(probs.shape(), (Shape{8}));
        double s = 0;
        for (float v : probs.data()) s += v;
        EXPECT_NEAR(s, 1.0, 1e-6);
    }
}

TEST(Recognizer, ZeroClassifierIsUniform) {
    NetConfig c;
    auto p = nets::init_params<double>(c, 6);
    p.at("main.fc") = Dense(p.at("main.fc").shape());
    std::mt19937_64 rng(6);
    auto probs = nets::recognize(oracle::random_tensor({4, 32, 32, 3}, rng, 0, 1), p, c);
    for (double v : probs.data()) EXPECT_NEAR(v, 1.0 / 8, 1e-15);
}

TEST(Recognizer, MatchesCompositionOracle) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
        NetConfig c = gradcheck::tiny_net(rng);
        auto p = gradcheck::random_params(c, rng);
        Dense y = oracle::random_tensor({c.distilled, c.input_hw, c.input_hw, c.channels}, rng, 0, 1);
        Dense want = recognizer_oracle(y, p, c);
        EXPECT_LE(oracle::max_abs_diff(nets::recognize(y, p, c), want.reshaped({c.classes})), 1e-12);
    }
}

TEST(Recognizer, SensitiveToFrameOrder) {
    NetConfig c;
    std::mt19937_64 rng(8);
    auto p = gradcheck::random_params(c, rng, 0.3);
    Dense y = oracle::random_tensor({4, 32, 32, 3}, rng, 0, 1);
    Dense reversed(y.shape());
    const std::size_t frame = y.size() / 4;
    for (std::size_t t = 0; t < 4; ++t)
        std::copy_n(y.data().begin() + static_cast<std::ptrdiff_t>(t * frame), frame,
                    reversed.data().begin() + static_cast<std::ptrdiff_t>((3 - t) * frame));
    EXPECT_GT(oracle::max_abs_diff(nets::recognize(y, p, c), nets::recognize(reversed, p, c)), 1e-9);
}

TEST(Recognizer, WrongFrameGeometry) {
    NetConfig c;
    auto p = nets::init_params<float>(c, 3);
    EXPECT_THROW(nets::recognize(Tensor<float>({4, 16, 16, 3}), p, c), DimensionError);
}

TEST(Composed, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 3; ++i) {
        NetConfig c = gradcheck::tiny_net(rng);
        auto p = gradcheck::random_params(c, rng);
        Dense x = oracle::random_tensor(c.clip_shape(), rng, 0, 1);
        EXPECT_LT(gradcheck::composed_max_relative_error(c, p, x, rng), 1e-4);
    }
}

TEST(OpLists, ShapesFollowConfig) {
    NetConfig c;
    auto ext = nets::extractor_ops(c);
    auto rec4 = nets::recognizer_ops(c, 4);
    ASSERT_FALSE(ext.empty());
    ASSERT_FALSE(rec4.empty());
    EXPECT_EQ(rec4.front().kind, saasbench::OpKind::Conv3d);
    EXPECT_EQ(rec4.front().out_t, 4u);
    EXPECT_EQ(rec4.front().out_h, 16u);
    EXPECT_EQ(nets::distill_ops(c).front().kind, saasbench::OpKind::Matmul);
}

}  // namespace
}  // namespace fewframe
