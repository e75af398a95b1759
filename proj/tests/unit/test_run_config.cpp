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

#include "fewframe/run_config.hpp"

namespace fewframe {
namespace {

using cli::RunConfig;

TEST(RunConfig, DefaultsValidate) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.net_config().feature_shape(), (Shape{16, 8, 8, 16}));
    EXPECT_EQ(c.synth_spec(5).seed, 5u);
}

TEST(RunConfig, TextRoundTrip) {
    RunConfig c;
    c.set("variant", "uniform");
    c.set("T_s", "5");
    c.set("noise_level", "0.125");
    c.set("stage1_lr", "0.0003");
    c.set("clip_norm", "2.5");
    c.set("deployment", "split");
    c.set("seed", "18446744073709551615");
    const RunConfig back = RunConfig::parse(c.to_text());
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.variant, selectors::Variant::Uniform);
    EXPECT_EQ(back.distilled, 5u);
    EXPECT_EQ(back.training.stage1.lr, 0.0003);
    EXPECT_EQ(back.training.clip_norm, 2.5);
    EXPECT_EQ(back.seed, ~std::uint64_t{0});
}

TEST(RunConfig, EveryKeyAppearsOnce) {
    const auto keys = RunConfig::keys();
    const std::string text = RunConfig{}.to_text();
    for (const auto& k : keys) {
        EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
    }
    std::vector<std::string> sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(RunConfig, CommentsAndBlankLines) {
    const auto c = RunConfig::parse("# header\n\n  Q = 5   # trailing\nT=8\r\n");
    EXPECT_EQ(c.clips, 5u);
    EXPECT_EQ(c.frames, 8u);
}

TEST(RunConfig, Errors) {
    RunConfig c;
    EXPECT_THROW(c.set("colour", "red"), ConfigError);
    EXPECT_THROW(c.set("T", "-1"), ConfigError);
    EXPECT_THROW(c.set("T", "12abc"), ConfigError);
    EXPECT_THROW(c.set("noise_level", "loud"), ConfigError);
    EXPECT_THROW(c.set("variant", "tsn"), ConfigError);
    EXPECT_THROW(RunConfig::parse("T 16\n"), ConfigError);
    EXPECT_THROW(RunConfig::load("/nonexistent/run.cfg"), IoError);
}

TEST(RunConfig, InconsistentSettings) {
    RunConfig c;
    c.distilled = 20;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.video_frames = 8;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.signal_frames = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.training.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfig, DerivedConfigsCarryRunSettings) {
    RunConfig c;
    c.set("variant", "attn");
    c.set("seed", "9");
    c.set("Q", "2");
    const auto t = c.train_config();
    EXPECT_EQ(t.variant, selectors::Variant::Attention);
    EXPECT_EQ(t.seed, 9u);
    EXPECT_EQ(t.clips, 2u);
    EXPECT_EQ(c.geometry().bytes_per_scalar, 4u);
}

}  // namespace
}  // namespace fewframe
