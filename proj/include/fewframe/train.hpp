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

// Loss, SGD-with-momentum training (baseline runs and the two-stage schedule
// for the distillation network) and Q-clip evaluation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fewframe/nets.hpp"
#include "fewframe/selectors.hpp"
#include "fewframe/synthvid.hpp"

namespace fewframe::train {

using selectors::Variant;

/// Step decay: lr * decay_factor^floor(step / decay_steps).
struct Schedule {
    double lr = 0.01;
    double decay_factor = 0.1;
    std::size_t decay_steps = 1000;
    std::size_t steps = 3000;

    double lr_at(std::size_t step) const;
};

struct TrainConfig {
    Schedule baseline{0.01, 0.1, 800, 1000};  // single-stage runs and main-network pretraining
    Schedule stage1{0.001, 0.1, 800, 1000};   // extractor + TSD, main frozen
    Schedule stage2{0.001, 0.3, 500, 1000};   // everything
    std::size_t batch_size = 16;
    double momentum = 0.9;
    double clip_norm = 1.0;  // global L2 bound on the batch gradient; 0 disables
    std::uint64_t seed = 0;
    Variant variant = Variant::Tsd;
    std::size_t frames = 16;    // T
    std::size_t distilled = 4;  // T_s
    std::size_t clips = 3;      // Q

    /// Throws ArgumentError on non-positive rates/sizes or T_s > T.
    void validate() const;
};

struct TrainResult {
    nets::ModelParams<float> params;
    std::vector<double> losses;  // mean batch loss per step
};

struct EvalReport {
    double accuracy = 0;
    std::vector<double> per_class;
    std::size_t clips_evaluated = 0;
    std::size_t clips_skipped = 0;
    Variant variant = Variant::Tsd;
    std::size_t frames = 0, distilled = 0, clips = 0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

enum class Mode { Train, Eval };

/// -log(max(p[label], 1e-12)) for a K x 1 probability column.
template <typename S>
ad::Var<S> cross_entropy(ad::Var<S> probs, std::size_t label);
double cross_entropy(std::span<const double> probs, std::size_t label);

/// Probabilities (K x 1) for one T-frame window under a variant.
///
/// Train mode: I3D sees all T frames; Random draws a fresh subset; Uniform a
/// random admissible offset; Attention scales every frame by w_i * T.
/// Eval mode: I3D takes the centered T_s consecutive frames; Uniform uses
/// offset 0; Attention keeps the top-T_s weights. Tsd is identical in both.
template <typename S>
ad::Var<S> forward_window(const nets::BoundParams<S>& params, const nets::NetConfig& config,
                          ad::Var<S> window, Variant variant, Mode mode, std::size_t distilled,
                          std::mt19937_64& rng);

/// Parameter groups updated when training `variant` end to end.
bool trains_group(Variant variant, nets::ParamGroup group);

/// Extractor and TSD block only; main network parameters are left untouched.
TrainResult train_stage1(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                         const nets::NetConfig& net, const TrainConfig& cfg);
/// All TSD network parameters.
TrainResult train_stage2(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                         const nets::NetConfig& net, const TrainConfig& cfg);
/// Single-stage run of cfg.variant with cfg.baseline.
TrainResult train_baseline(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                           const nets::NetConfig& net, const TrainConfig& cfg);

/// Full recipe for cfg.variant. For Tsd: main network taken from
/// `pretrained_main` when given, otherwise pretrained with an I3D baseline run;
/// then stage 1 and stage 2. Losses of all stages are concatenated.
TrainResult train_variant(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                          const nets::NetConfig& net, const TrainConfig& cfg,
                          const nets::ModelParams<float>* pretrained_main = nullptr);

/// The T x T_s matrix a variant applies to one window in Eval mode.
tsd::TransformMatrix<float> eval_transform(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                                           const Tensor<float>& window, Variant variant, std::size_t distilled,
                                           std::mt19937_64& rng);

/// Class probabilities of one window, averaged later over Q windows.
std::vector<double> window_probabilities(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                                         const Tensor<float>& window, Variant variant, std::size_t distilled,
                                         std::mt19937_64& rng);

/// Start frames of the Q windows drawn for video `index`: the center window
/// when Q = 1, otherwise uniform random offsets.
std::vector<std::size_t> window_offsets(std::size_t video_frames, std::size_t frames, std::size_t clips,
                                        std::uint64_t seed, std::size_t index);

/// Averaged Q-window probabilities for one video.
std::vector<double> video_probabilities(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                                        const Tensor<float>& video, Variant variant, std::size_t frames,
                                        std::size_t distilled, std::size_t clips, std::uint64_t seed,
                                        std::size_t index);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

EvalReport evaluate_qclips(const nets::ModelParams<float>& params, std::span<const synthvid::LabeledClip> dataset,
                           const nets::NetConfig& net, Variant variant, std::size_t frames, std::size_t distilled,
                           std::size_t clips, std::uint64_t seed);

/// "step,loss" rows.
std::string loss_csv(std::span<const double> losses);
/// "variant,T,T_s,Q,accuracy" header and one row.
std::string eval_csv(const EvalReport& report);

}  // namespace fewframe::train
