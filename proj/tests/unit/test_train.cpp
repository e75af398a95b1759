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

#include <cmath>
#include <limits>
#include <random>

#include "fewframe/train.hpp"

namespace fewframe {
namespace {

using namespace train;
using nets::ParamGroup;

nets::NetConfig tiny_net() {
    nets::NetConfig c;
    c.frames = 6;
    c.distilled = 2;
    c.input_hw = 8;
    c.extractor_hw = 4;
    c.extractor_channels = {3, 4};
    c.main_channels = {4, 6};
    c.classes = 2;
    return c;
}

synthvid::SynthSpec tiny_spec(std::uint64_t seed, std::size_t video_frames = 8) {
    synthvid::SynthSpec s;
    s.frames = video_frames;
    s.height = s.width = 8;
    s.classes = 2;
    s.seed = seed;
    return s;
}

TrainConfig tiny_config(Variant v, std::size_t steps = 4) {
    TrainConfig t;
    t.variant = v;
    t.frames = 6;
    t.distilled = 2;
    t.batch_size = 3;
    t.baseline = {0.01, 0.1, 100, steps};
    t.stage1 = {0.01, 0.1, 100, steps};
    t.stage2 = {0.01, 0.1, 100, steps};
    t.seed = 3;
    return t;
}

bool group_equal(const nets::ModelParams<float>& a, const nets::ModelParams<float>& b, ParamGroup g) {
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        if (a.params()[i].group == g && !(a.params()[i] == b.params()[i])) return false;
    }
    return true;
}

class Training : public ::testing::Test {
  protected:
    nets::NetConfig net = tiny_net();
    nets::ModelParams<float> init = nets::init_params<float>(net, 1);
    std::vector<synthvid::LabeledClip> data = synthvid::generate_dataset(tiny_spec(2), 12);
};

TEST(Schedule, StepDecay) {
    Schedule s{0.1, 0.5, 10, 100};
    EXPECT_DOUBLE_EQ(s.lr_at(0), 0.1);
    EXPECT_DOUBLE_EQ(s.lr_at(9), 0.1);
    EXPECT_DOUBLE_EQ(s.lr_at(10), 0.05);
    EXPECT_DOUBLE_EQ(s.lr_at(25), 0.025);
}

TEST(TrainConfig, Validation) {
    TrainConfig t;
    EXPECT_NO_THROW(t.validate());
    t.stage1.lr = 0;
    EXPECT_THROW(t.validate(), ArgumentError);
    t = {};
    t.momentum = 1.0;
    EXPECT_THROW(t.validate(), ArgumentError);
    t = {};
    t.distilled = 17;
    EXPECT_THROW(t.validate(), ArgumentError);
    t = {};
    t.clip_norm = -1;
    EXPECT_THROW(t.validate(), ArgumentError);
    t.clip_norm = std::numeric_limits<double>::infinity();
    EXPECT_THROW(t.validate(), ArgumentError);
    t.clip_norm = 0;
    EXPECT_NO_THROW(t.validate());
}

TEST(CrossEntropy, ValueAndGradient) {
    const std::vector<double> p{0.25, 0.75};
    EXPECT_DOUBLE_EQ(cross_entropy(p, 1), -std::log(0.75));
    EXPECT_THROW(cross_entropy(p, 2), ArgumentError);
    ad::Tape<double> tape;
    auto probs = tape.variable(Tensor<double>({2, 1}, {0.25, 0.75}));
    auto loss = cross_entropy(probs, 0);
    EXPECT_DOUBLE_EQ(loss.value()[0], std::log(4.0));
    tape.backward(loss);
    EXPECT_EQ(tape.grad(probs), Tensor<double>({2, 1}, {-4.0, 0.0}));
}

TEST(CrossEntropy, FloorAtTinyProbability) {
    const std::vector<double> p{0.0, 1.0};
    EXPECT_DOUBLE_EQ(cross_entropy(p, 0), -std::log(1e-12));
}

TEST(Groups, TrainedPerVariant) {
    EXPECT_TRUE(trains_group(Variant::Tsd, ParamGroup::Extractor));
    EXPECT_TRUE(trains_group(Variant::Tsd, ParamGroup::Main));
    EXPECT_FALSE(trains_group(Variant::Tsd, ParamGroup::Attention));
    EXPECT_TRUE(trains_group(Variant::Attention, ParamGroup::Attention));
    EXPECT_FALSE(trains_group(Variant::Attention, ParamGroup::Tsd));
    for (Variant v : {Variant::I3D, Variant::Random, Variant::Uniform}) {
        EXPECT_TRUE(trains_group(v, ParamGroup::Main));
        EXPECT_FALSE(trains_group(v, ParamGroup::Extractor));
        EXPECT_FALSE(trains_group(v, ParamGroup::Attention));
    }
}

TEST(Argmax, LowestIndexOnTies) {
    const std::vector<double> v{0.1, 0.4, 0.4, 0.1};
    EXPECT_EQ(argmax(v), 1u);
    EXPECT_THROW(argmax(std::vector<double>{}), ArgumentError);
}

TEST(WindowOffsets, CenterForSingleClip) {
    EXPECT_EQ(window_offsets(20, 16, 1, 5, 0), (std::vector<std::size_t>{2}));
    EXPECT_EQ(window_offsets(16, 16, 1, 5, 0), (std::vector<std::size_t>{0}));
    const auto o = window_offsets(40, 16, 5, 7, 3);
    EXPECT_EQ(o, window_offsets(40, 16, 5, 7, 3));
    for (std::size_t s : o) EXPECT_LE(s, 24u);
    EXPECT_THROW(window_offsets(10, 16, 1, 0, 0), ArgumentError);
}

TEST_F(Training, Stage1LeavesMainBitIdentical) {
    auto r = train_stage1(init, data, net, tiny_config(Variant::Tsd));
    EXPECT_TRUE(group_equal(r.params, init, ParamGroup::Main));
    EXPECT_TRUE(group_equal(r.params, init, ParamGroup::Attention));
    EXPECT_FALSE(group_equal(r.params, init, ParamGroup::Tsd));
    EXPECT_FALSE(group_equal(r.params, init, ParamGroup::Extractor));
    EXPECT_EQ(r.losses.size(), 4u);
}

TEST_F(Training, Stage2UpdatesEverythingButAttention) {
    auto r = train_stage2(init, data, net, tiny_config(Variant::Tsd));
    EXPECT_FALSE(group_equal(r.params, init, ParamGroup::Main));
    EXPECT_FALSE(group_equal(r.params, init, ParamGroup::Tsd));
    EXPECT_TRUE(group_equal(r.params, init, ParamGroup::Attention));
}

TEST_F(Training, BaselineTouchesOnlyItsGroups) {
    for (Variant v : {Variant::I3D, Variant::Random, Variant::Uniform, Variant::Attention}) {
        auto r = train_baseline(init, data, net, tiny_config(v));
        EXPECT_FALSE(group_equal(r.params, init, ParamGroup::Main)) << selectors::to_string(v);
        EXPECT_TRUE(group_equal(r.params, init, ParamGroup::Extractor));
        EXPECT_TRUE(group_equal(r.params, init, ParamGroup::Tsd));
        EXPECT_EQ(group_equal(r.params, init, ParamGroup::Attention), v != Variant::Attention);
    }
}

TEST_F(Training, FixedSeedIsBitIdentical) {
    auto cfg = tiny_config(Variant::Tsd, 2);
    auto a = train_variant(init, data, net, cfg);
    auto b = train_variant(init, data, net, cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.losses, b.losses);
    EXPECT_EQ(a.losses.size(), 6u);
    cfg.seed = 4;
    EXPECT_FALSE(train_variant(init, data, net, cfg).params == a.params);
}

double step_length(const nets::ModelParams<float>& a, const nets::ModelParams<float>& b) {
    double d2 = 0;
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        const auto x = a.params()[i].value.data(), y = b.params()[i].value.data();
        for (std::size_t j = 0; j < x.size(); ++j) d2 += (double(x[j]) - y[j]) * (double(x[j]) - y[j]);
    }
    return std::sqrt(d2);
}

TEST_F(Training, ClippingBoundsFirstStep) {
    auto cfg = tiny_config(Variant::I3D, 1);
    cfg.clip_norm = 0;
    const double free_step = step_length(train_baseline(init, data, net, cfg).params, init);
    ASSERT_GT(free_step, 1e-4);
    cfg.clip_norm = 1e-3;
    const double clipped = step_length(train_baseline(init, data, net, cfg).params, init);
    EXPECT_GT(clipped, 0.0);
    EXPECT_NEAR(clipped, cfg.baseline.lr * cfg.clip_norm, 1e-2 * cfg.baseline.lr * cfg.clip_norm);
    cfg.clip_norm = 1e6;
    EXPECT_NEAR(step_length(train_baseline(init, data, net, cfg).params, init), free_step, 1e-6 * free_step);
}

TEST_F(Training, PretrainedMainIsUsed) {
    auto cfg = tiny_config(Variant::Tsd, 2);
    auto pre = train_baseline(init, data, net, tiny_config(Variant::I3D, 3));
    auto r = train_variant(init, data, net, cfg, &pre.params);
    EXPECT_EQ(r.losses.size(), 4u);
}

TEST_F(Training, ZeroStepsIsIdentity) {
    auto cfg = tiny_config(Variant::Uniform, 0);
    auto r = train_baseline(init, data, net, cfg);
    EXPECT_EQ(r.params, init);
    EXPECT_TRUE(r.losses.empty());
}

TEST_F(Training, LossDecreasesOnSeparableData) {
    auto cfg = tiny_config(Variant::I3D, 120);
    cfg.baseline.lr = 0.05;
    auto r = train_baseline(init, data, net, cfg);
    double first = 0, last = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        first += r.losses[i];
        last += r.losses[r.losses.size() - 1 - i];
    }
    EXPECT_LT(last, 0.5 * first);
}

TEST_F(Training, Stage1OverfitsSmallSubset) {
    auto subset = synthvid::generate_dataset(tiny_spec(21), 16);
    auto cfg = tiny_config(Variant::I3D, 200);
    cfg.batch_size = 16;
    cfg.baseline.lr = 0.05;
    auto pre = train_baseline(init, subset, net, cfg).params;
    cfg.variant = Variant::Tsd;
    cfg.stage1.lr = 0.05;
    auto r = train_stage1(pre, subset, net, cfg);
    ASSERT_EQ(r.losses.size(), 200u);
    EXPECT_LT(r.losses.back(), 0.1 * r.losses.front());

    double ema = r.losses.front(), checkpoint = ema;
    for (std::size_t i = 1; i < r.losses.size(); ++i) {
        ema = 0.95 * ema + 0.05 * r.losses[i];
        if (i % 40 == 0 || i + 1 == r.losses.size()) {
            EXPECT_LT(ema, checkpoint) << "step " << i;
            checkpoint = ema;
        }
    }
}

TEST_F(Training, Stage2GradientReachesEveryGroup) {
    auto params = init;
    std::mt19937_64 init_rng(4);
    for (auto& p : params.params()) {
        std::normal_distribution<float> d(0.0f, 0.3f);
        for (float& v : p.value.data()) v = d(init_rng);
    }
    ad::Tape<float> tape;
    nets::BoundParams<float> bound(tape, params, [](ParamGroup g) { return trains_group(Variant::Tsd, g); });
    std::mt19937_64 rng(0);
    const auto& clip = data[0].clip;
    Tensor<float> window({6, 8, 8, 3}, std::vector<float>(clip.data().begin(), clip.data().begin() + 6 * 192));
    auto probs = forward_window(bound, net, tape.constant(window), Variant::Tsd, Mode::Train, 2, rng);
    tape.backward(cross_entropy(probs, data[0].label));
    double norm[3] = {0, 0, 0};
    for (std::size_t i = 0; i < params.params().size(); ++i) {
        const auto g = params.params()[i].group;
        if (g == ParamGroup::Attention) continue;
        const int slot = g == ParamGroup::Extractor ? 0 : g == ParamGroup::Tsd ? 1 : 2;
        for (float v : tape.grad(bound.vars()[i]).data()) norm[slot] += static_cast<double>(v) * v;
    }
    EXPECT_GT(norm[0], 0.0);
    EXPECT_GT(norm[1], 0.0);
    EXPECT_GT(norm[2], 0.0);
}

TEST_F(Training, QClipAverageMatchesPerWindowMean) {
    auto videos = synthvid::generate_dataset(tiny_spec(9, 12), 4);
    for (Variant v : {Variant::I3D, Variant::Uniform, Variant::Attention, Variant::Tsd}) {
        for (std::size_t i = 0; i < videos.size(); ++i) {
            const auto& clip = videos[i].clip;
            const auto got = video_probabilities(init, net, clip, v, 6, 2, 3, 5, i);
            std::vector<double> want(2, 0.0);
            for (std::size_t start : window_offsets(12, 6, 3, 5, i)) {
                Tensor<float> w({6, 8, 8, 3}, std::vector<float>(clip.data().begin() + start * 192,
                                                                 clip.data().begin() + (start + 6) * 192));
                std::mt19937_64 rng(0);
                const auto p = window_probabilities(init, net, w, v, 2, rng);
                for (std::size_t k = 0; k < 2; ++k) want[k] += p[k] / 3;
            }
            for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(got[k], want[k], 1e-6);
        }
    }
}

TEST_F(Training, IdenticalWindowsMatchSingleClip) {
    auto videos = synthvid::generate_dataset(tiny_spec(9, 6), 5);
    for (Variant v : {Variant::I3D, Variant::Uniform, Variant::Tsd}) {
        for (std::size_t i = 0; i < videos.size(); ++i) {
            const auto one = video_probabilities(init, net, videos[i].clip, v, 6, 2, 1, 7, i);
            const auto two = video_probabilities(init, net, videos[i].clip, v, 6, 2, 2, 7, i);
            EXPECT_EQ(argmax(one), argmax(two));
            for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(one[k], two[k], 1e-12);
        }
    }
}

TEST_F(Training, FullLengthI3DIsPlainRecognizer) {
    auto videos = synthvid::generate_dataset(tiny_spec(13, 6), 6);
    std::size_t correct = 0;
    for (const auto& v : videos) {
        const auto probs = nets::recognize(v.clip, init, net);
        correct += argmax(std::vector<double>(probs.data().begin(), probs.data().end())) == v.label;
    }
    const auto report = evaluate_qclips(init, videos, net, Variant::I3D, 6, 6, 2, 3);
    EXPECT_EQ(report.accuracy, static_cast<double>(correct) / 6);
    EXPECT_EQ(evaluate_qclips(init, videos, net, Variant::I3D, 6, 6, 2, 3).accuracy, report.accuracy);
}

TEST_F(Training, BadInputs) {
    EXPECT_THROW(train_baseline(init, {}, net, tiny_config(Variant::I3D)), ArgumentError);
    auto short_clips = synthvid::generate_dataset(tiny_spec(2, 4), 2);
    EXPECT_THROW(train_baseline(init, short_clips, net, tiny_config(Variant::I3D)), ArgumentError);
    auto poisoned = data;
    poisoned[0].clip[0] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(train_baseline(init, poisoned, net, tiny_config(Variant::I3D)), NumericError);
    EXPECT_THROW(evaluate_qclips(init, poisoned, net, Variant::I3D, 6, 2, 1, 0), NumericError);
}

TEST_F(Training, SingleClipEvaluationIsCenterWindow) {
    auto params = train_baseline(init, data, net, tiny_config(Variant::Uniform, 5)).params;
    auto videos = synthvid::generate_dataset(tiny_spec(9, 10), 6);
    for (Variant v : {Variant::Uniform, Variant::I3D, Variant::Tsd, Variant::Attention}) {
        auto report = evaluate_qclips(params, videos, net, v, 6, 2, 1, 11);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < videos.size(); ++i) {
            const auto& clip = videos[i].clip;
            const std::size_t frame = clip.size() / clip.dim(0);
            Tensor<float> center({6, 8, 8, 3}, std::vector<float>(clip.data().begin() + 2 * frame,
                                                                   clip.data().begin() + 8 * frame));
            std::mt19937_64 rng(0);
            correct += argmax(window_probabilities(params, net, center, v, 2, rng)) == videos[i].label;
        }
        EXPECT_EQ(report.accuracy, static_cast<double>(correct) / 6) << selectors::to_string(v);
        EXPECT_EQ(report.clips_evaluated, 6u);
    }
}

TEST_F(Training, EvalModeSelections) {
    std::mt19937_64 rng(0);
    const auto& clip = data[0].clip;
    Tensor<float> window({6, 8, 8, 3}, std::vector<float>(clip.data().begin(), clip.data().begin() + 6 * 192));
    auto probs = window_probabilities(init, net, window, Variant::Uniform, 2, rng);
    auto direct = nets::recognize(tsd::distill(window, selectors::uniform_P<float>(6, 2, 0)), init, net);
    ASSERT_EQ(probs.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(probs[k], direct[k], 1e-7);

    auto peaked = init;
    peaked.at("attn.logits") = Tensor<float>({6}, {0, 3, 0, 0, 2, 0});
    probs = window_probabilities(peaked, net, window, Variant::Attention, 2, rng);
    auto rows = std::vector<std::size_t>{1, 4};
    direct = nets::recognize(tsd::distill(window, selectors::one_hot<float>(6, rows)), peaked, net);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(probs[k], direct[k], 1e-7);

    probs = window_probabilities(init, net, window, Variant::I3D, 2, rng);
    direct = nets::recognize(tsd::distill(window, selectors::consecutive_P<float>(6, 2, 2)), init, net);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(probs[k], direct[k], 1e-7);
}

TEST_F(Training, EvaluationSkipsShortClipsAndChecksLabels) {
    auto videos = synthvid::generate_dataset(tiny_spec(9, 8), 4);
    videos.push_back(synthvid::generate_dataset(tiny_spec(9, 4), 1)[0]);
    auto report = evaluate_qclips(init, videos, net, Variant::Uniform, 6, 2, 3, 1);
    EXPECT_EQ(report.clips_evaluated, 4u);
    EXPECT_EQ(report.clips_skipped, 1u);
    EXPECT_EQ(report.per_class.size(), 2u);
    EXPECT_EQ(report, evaluate_qclips(init, videos, net, Variant::Uniform, 6, 2, 3, 1));
    videos[0].label = 5;
    EXPECT_THROW(evaluate_qclips(init, videos, net, Variant::Uniform, 6, 2, 3, 1), ArgumentError);
}

TEST(Csv, LossAndEvalSchemas) {
    const std::vector<double> losses{2.5, 0.125};
    EXPECT_EQ(loss_csv(losses), "step,loss\n0,2.5\n1,0.125\n");
    EvalReport r;
    r.variant = Variant::Uniform;
    r.frames = 16;
    r.distilled = 4;
    r.clips = 3;
    r.accuracy = 0.5;
    EXPECT_EQ(eval_csv(r), "variant,T,T_s,Q,accuracy\nuniform,16,4,3,0.5\n");
}

}  // namespace
}  // namespace fewframe
