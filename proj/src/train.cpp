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

#include "fewframe/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "fewframe/rng.hpp"

namespace fewframe::train {
namespace {

enum Stream : std::uint64_t { kBatchOrder = 11, kWindows = 12, kEvalWindows = 13, kEvalSelect = 14 };
enum StageId : std::uint64_t { kBaselineStage = 0, kStage1 = 1, kStage2 = 2 };

constexpr double kProbFloor = 1e-12;

Tensor<float> cut_window(const Tensor<float>& video, std::size_t start, std::size_t frames) {
    const Shape& vs = video.shape();
    const std::size_t frame_size = vs[1] * vs[2] * vs[3];
    auto src = video.data().subspan(start * frame_size, frames * frame_size);
    return Tensor<float>({frames, vs[1], vs[2], vs[3]}, std::vector<float>(src.begin(), src.end()));
}

using GroupFilter = bool (*)(Variant, nets::ParamGroup);

bool stage1_groups(Variant, nets::ParamGroup g) { return nets::is_client_group(g); }
bool stage2_groups(Variant, nets::ParamGroup g) { return g != nets::ParamGroup::Attention; }

TrainResult run_sgd(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                    const nets::NetConfig& net, const TrainConfig& cfg, Variant variant, const Schedule& schedule,
                    GroupFilter trainable, StageId stage) {
    cfg.validate();
    TrainResult result{std::move(params), {}};
    if (schedule.steps == 0) return result;
    if (data.empty()) throw ArgumentError("training: empty dataset");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& clip = data[i].clip;
        if (clip.rank() != 4 || clip.dim(0) < cfg.frames) {
            throw ArgumentError("training: clip shorter than T=" + std::to_string(cfg.frames));
        }
        if (!clip.all_finite()) throw NumericError("training: clip " + std::to_string(i) + " has non-finite pixels");
    }

    auto& ps = result.params;
    const auto is_trainable = [&](nets::ParamGroup g) { return trainable(variant, g); };
    std::vector<Tensor<float>> velocity;
    velocity.reserve(ps.params().size());
    for (const auto& p : ps.params()) velocity.emplace_back(p.value.shape());

    auto order_rng = stream_rng(cfg.seed, kBatchOrder, stage);
    auto window_rng = stream_rng(cfg.seed, kWindows, stage);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    std::vector<Tensor<float>> grads;
    for (std::size_t step = 0; step < schedule.steps; ++step) {
        grads.clear();
        for (const auto& p : ps.params()) grads.emplace_back(p.value.shape());
        double loss_sum = 0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), order_rng);
                cursor = 0;
            }
            const auto& lc = data[order[cursor++]];
            const std::size_t video_frames = lc.clip.dim(0);
            const std::size_t start =
                std::uniform_int_distribution<std::size_t>(0, video_frames - cfg.frames)(window_rng);

            ad::Tape<float> tape;
            nets::BoundParams<float> bound(tape, ps, is_trainable);
            auto window = tape.constant(cut_window(lc.clip, start, cfg.frames));
            auto probs = forward_window(bound, net, window, variant, Mode::Train, cfg.distilled, window_rng);
            auto loss = cross_entropy(probs, lc.label);
            tape.backward(loss);
            loss_sum += static_cast<double>(loss.value()[0]);

            const auto vars = bound.vars();
            for (std::size_t i = 0; i < vars.size(); ++i) {
                if (!tape.requires_grad(vars[i].id())) continue;
                const Tensor<float> g = tape.grad(vars[i]);
                auto dst = grads[i].data();
                auto src = g.data();
                for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(cfg.batch_size);
        if (!std::isfinite(mean_loss)) {
            throw NumericError("non-finite training loss at step " + std::to_string(step));
        }
        result.losses.push_back(mean_loss);

        auto all = ps.params();
        float scale = 1.0f / static_cast<float>(cfg.batch_size);
        if (cfg.clip_norm > 0) {
            double norm2 = 0;
            for (std::size_t i = 0; i < all.size(); ++i) {
                if (!is_trainable(all[i].group)) continue;
                for (float g : grads[i].data()) norm2 += static_cast<double>(g) * g;
            }
            const double norm = std::sqrt(norm2) * scale;
            if (norm > cfg.clip_norm) scale *= static_cast<float>(cfg.clip_norm / norm);
        }
        const auto lr = static_cast<float>(schedule.lr_at(step));
        const auto mu = static_cast<float>(cfg.momentum);
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (!is_trainable(all[i].group)) continue;
            auto v = velocity[i].data();
            auto g = grads[i].data();
            auto w = all[i].value.data();
            for (std::size_t j = 0; j < w.size(); ++j) {
                v[j] = mu * v[j] + g[j] * scale;
                w[j] -= lr * v[j];
            }
        }
    }
    return result;
}

}  // namespace

double Schedule::lr_at(std::size_t step) const {
    const std::size_t drops = decay_steps ? step / decay_steps : 0;
    return lr * std::pow(decay_factor, static_cast<double>(drops));
}

void TrainConfig::validate() const {
    for (const Schedule* s : {&baseline, &stage1, &stage2}) {
        if (!(s->lr > 0) || !(s->decay_factor > 0) || s->decay_steps == 0) {
            throw ArgumentError("train config: learning rates, decay factors and decay steps must be positive");
        }
    }
    if (batch_size == 0) throw ArgumentError("train config: batch_size must be positive");
    if (!(momentum >= 0 && momentum < 1)) throw ArgumentError("train config: momentum must lie in [0, 1)");
    if (!(clip_norm >= 0) || !std::isfinite(clip_norm)) throw ArgumentError("train config: clip_norm must be finite and >= 0");
    if (distilled == 0 || distilled > frames) throw ArgumentError("train config: need 1 <= T_s <= T");
    if (clips == 0) throw ArgumentError("train config: Q must be positive");
}

template <typename S>
ad::Var<S> cross_entropy(ad::Var<S> probs, std::size_t label) {
    const Tensor<S>& p = probs.value();
    if (label >= p.size()) {
        throw ArgumentError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                            std::to_string(p.size()) + " classes");
    }
    const S floor = static_cast<S>(kProbFloor);
    const S pl = p[label];
    const S value = -std::log(std::max(pl, floor));
    const std::size_t ip = probs.id();
    return probs.tape()->record(Tensor<S>::scalar(value), {probs},
                                [ip, label, floor](ad::Tape<S>& t, const Tensor<S>& g) {
                                    const Tensor<S>& pv = t.value(ip);
                                    Tensor<S> grad(pv.shape());
                                    if (pv[label] > floor) grad[label] = -g[0] / pv[label];
                                    t.accumulate(ip, std::move(grad));
                                });
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw ArgumentError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                            std::to_string(probs.size()) + " classes");
    }
    return -std::log(std::max(probs[label], kProbFloor));
}

template <typename S>
ad::Var<S> forward_window(const nets::BoundParams<S>& params, const nets::NetConfig& config, ad::Var<S> window,
                          Variant variant, Mode mode, std::size_t distilled, std::mt19937_64& rng) {
    ad::Tape<S>& tape = params.tape();
    const std::size_t frames = window.shape().at(0);
    const bool training = mode == Mode::Train;
    auto select = [&](const tsd::TransformMatrix<S>& p) { return tsd::distill(window, tape.constant(p.values())); };

    ad::Var<S> y;
    switch (variant) {
        case Variant::I3D:
            y = training ? window : select(selectors::consecutive_P<S>(frames, distilled, (frames - distilled) / 2));
            break;
        case Variant::Random:
            y = select(selectors::random_P<S>(frames, distilled, rng()));
            break;
        case Variant::Uniform: {
            std::size_t offset = 0;
            if (training) {
                offset = std::uniform_int_distribution<std::size_t>(
                    0, selectors::max_uniform_offset(frames, distilled))(rng);
            }
            y = select(selectors::uniform_P<S>(frames, distilled, offset));
            break;
        }
        case Variant::Attention: {
            ad::Var<S> w = nets::attention_weights(params);
            if (training) {
                y = tsd::distill(window, ad::scale(ad::diag(w), static_cast<S>(frames)));
            } else {
                y = select(selectors::attention_P_test<S>(w.value().data(), distilled));
            }
            break;
        }
        case Variant::Tsd: {
            ad::Var<S> f = nets::coarse_features(window, params, config);
            y = tsd::distill(window, tsd::compute_transform(f, params.tsd()));
            break;
        }
    }
    return nets::recognize(y, params, config);
}

bool trains_group(Variant variant, nets::ParamGroup group) {
    switch (variant) {
        case Variant::Tsd: return group != nets::ParamGroup::Attention;
        case Variant::Attention: return group == nets::ParamGroup::Main || group == nets::ParamGroup::Attention;
        default: return group == nets::ParamGroup::Main;
    }
}

TrainResult train_stage1(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                         const nets::NetConfig& net, const TrainConfig& cfg) {
    return run_sgd(std::move(params), data, net, cfg, Variant::Tsd, cfg.stage1, stage1_groups, kStage1);
}

TrainResult train_stage2(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                         const nets::NetConfig& net, const TrainConfig& cfg) {
    return run_sgd(std::move(params), data, net, cfg, Variant::Tsd, cfg.stage2, stage2_groups, kStage2);
}

TrainResult train_baseline(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                           const nets::NetConfig& net, const TrainConfig& cfg) {
    return run_sgd(std::move(params), data, net, cfg, cfg.variant, cfg.baseline, trains_group, kBaselineStage);
}

TrainResult train_variant(nets::ModelParams<float> params, std::span<const synthvid::LabeledClip> data,
                          const nets::NetConfig& net, const TrainConfig& cfg,
                          const nets::ModelParams<float>* pretrained_main) {
    if (cfg.variant != Variant::Tsd) return train_baseline(std::move(params), data, net, cfg);

    std::vector<double> losses;
    if (pretrained_main != nullptr) {
        for (auto& p : params.params()) {
            if (p.group == nets::ParamGroup::Main) p.value = pretrained_main->at(p.name);
        }
    } else {
        TrainConfig pre = cfg;
        pre.variant = Variant::I3D;
        TrainResult r = train_baseline(std::move(params), data, net, pre);
        params = std::move(r.params);
        losses = std::move(r.losses);
    }
    TrainResult s1 = train_stage1(std::move(params), data, net, cfg);
    TrainResult s2 = train_stage2(std::move(s1.params), data, net, cfg);
    losses.insert(losses.end(), s1.losses.begin(), s1.losses.end());
    losses.insert(losses.end(), s2.losses.begin(), s2.losses.end());
    return {std::move(s2.params), std::move(losses)};
}

tsd::TransformMatrix<float> eval_transform(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                                           const Tensor<float>& window, Variant variant, std::size_t distilled,
                                           std::mt19937_64& rng) {
    const std::size_t frames = window.dim(0);
    switch (variant) {
        case Variant::I3D: return selectors::consecutive_P<float>(frames, distilled, (frames - distilled) / 2);
        case Variant::Random: return selectors::random_P<float>(frames, distilled, rng());
        case Variant::Uniform: return selectors::uniform_P<float>(frames, distilled, 0);
        case Variant::Attention: {
            const auto w = params.attention_weights();
            return selectors::attention_P_test<float>(w, distilled);
        }
        case Variant::Tsd: break;
    }
    return tsd::compute_transform(nets::coarse_features(window, params, net), params.tsd_weights());
}

std::vector<double> window_probabilities(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                                         const Tensor<float>& window, Variant variant, std::size_t distilled,
                                         std::mt19937_64& rng) {
    ad::Tape<float> tape;
    nets::BoundParams<float> bound(tape, params, [](nets::ParamGroup) { return false; });
    auto probs = forward_window(bound, net, tape.constant(window), variant, Mode::Eval, distilled, rng);
    const auto v = probs.value().data();
    return std::vector<double>(v.begin(), v.end());
}

std::vector<std::size_t> window_offsets(std::size_t video_frames, std::size_t frames, std::size_t clips,
                                        std::uint64_t seed, std::size_t index) {
    if (clips == 0) throw ArgumentError("window_offsets: Q must be positive");
    if (video_frames < frames) throw ArgumentError("window_offsets: video shorter than T");
    const std::size_t span = video_frames - frames;
    if (clips == 1) return {span / 2};
    auto rng = stream_rng(seed, kEvalWindows, index);
    std::uniform_int_distribution<std::size_t> pick(0, span);
    std::vector<std::size_t> offsets(clips);
    for (auto& o : offsets) o = pick(rng);
    return offsets;
}

std::vector<double> video_probabilities(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                                        const Tensor<float>& video, Variant variant, std::size_t frames,
                                        std::size_t distilled, std::size_t clips, std::uint64_t seed,
                                        std::size_t index) {
    const auto offsets = window_offsets(video.dim(0), frames, clips, seed, index);
    auto select_rng = stream_rng(seed, kEvalSelect, index);
    std::vector<double> mean(net.classes, 0.0);
    for (std::size_t start : offsets) {
        const auto p = window_probabilities(params, net, cut_window(video, start, frames), variant, distilled,
                                            select_rng);
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += p[k];
    }
    for (double& m : mean) m /= static_cast<double>(offsets.size());
    return mean;
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("argmax of empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

EvalReport evaluate_qclips(const nets::ModelParams<float>& params, std::span<const synthvid::LabeledClip> dataset,
                           const nets::NetConfig& net, Variant variant, std::size_t frames, std::size_t distilled,
                           std::size_t clips, std::uint64_t seed) {
    if (clips == 0) throw ArgumentError("evaluate_qclips: Q must be positive");
    if (distilled == 0 || distilled > frames) throw ArgumentError("evaluate_qclips: need 1 <= T_s <= T");
    EvalReport report;
    report.variant = variant;
    report.frames = frames;
    report.distilled = distilled;
    report.clips = clips;
    std::vector<std::size_t> correct(net.classes, 0), total(net.classes, 0);
    std::size_t correct_all = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& lc = dataset[i];
        if (lc.clip.rank() != 4 || lc.clip.dim(0) < frames) {
            ++report.clips_skipped;
            continue;
        }
        if (lc.label >= net.classes) {
            throw ArgumentError("evaluate_qclips: label " + std::to_string(lc.label) + " out of range");
        }
        if (!lc.clip.all_finite()) throw NumericError("evaluate_qclips: clip " + std::to_string(i) + " has non-finite pixels");
        const auto probs = video_probabilities(params, net, lc.clip, variant, frames, distilled, clips, seed, i);
        const bool hit = argmax(probs) == lc.label;
        ++report.clips_evaluated;
        ++total[lc.label];
        if (hit) {
            ++correct[lc.label];
            ++correct_all;
        }
    }
    report.accuracy = report.clips_evaluated
                          ? static_cast<double>(correct_all) / static_cast<double>(report.clips_evaluated)
                          : 0.0;
    report.per_class.resize(net.classes);
    for (std::size_t k = 0; k < net.classes; ++k) {
        report.per_class[k] = total[k] ? static_cast<double>(correct[k]) / static_cast<double>(total[k]) : 0.0;
    }
    return report;
}

std::string loss_csv(std::span<const double> losses) {
    std::ostringstream os;
    os << "step,loss\n" << std::setprecision(9);
    for (std::size_t i = 0; i < losses.size(); ++i) os << i << ',' << losses[i] << '\n';
    return os.str();
}

std::string eval_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "variant,T,T_s,Q,accuracy\n"
       << selectors::to_string(r.variant) << ',' << r.frames << ',' << r.distilled << ',' << r.clips << ','
       << std::setprecision(9) << r.accuracy << '\n';
    return os.str();
}

template ad::Var<float> cross_entropy(ad::Var<float>, std::size_t);
template ad::Var<double> cross_entropy(ad::Var<double>, std::size_t);
template ad::Var<float> forward_window(const nets::BoundParams<float>&, const nets::NetConfig&, ad::Var<float>,
                                       Variant, Mode, std::size_t, std::mt19937_64&);
template ad::Var<double> forward_window(const nets::BoundParams<double>&, const nets::NetConfig&, ad::Var<double>,
                                        Variant, Mode, std::size_t, std::mt19937_64&);

}  // namespace fewframe::train
