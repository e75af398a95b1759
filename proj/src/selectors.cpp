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

#include "fewframe/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fewframe::selectors {
namespace {

void check_lengths(std::size_t frames, std::size_t distilled, const char* what) {
    if (distilled == 0 || distilled > frames) {
        throw ArgumentError(std::string(what) + ": need 1 <= T_s <= T, got T=" + std::to_string(frames) +
                            " T_s=" + std::to_string(distilled));
    }
}

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::I3D: return "i3d";
        case Variant::Random: return "rand";
        case Variant::Uniform: return "uniform";
        case Variant::Attention: return "attn";
        case Variant::Tsd: return "tsd";
    }
    return "unknown";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::I3D, Variant::Random, Variant::Uniform, Variant::Attention, Variant::Tsd}) {
        if (to_string(v) == name) return v;
    }
    throw ArgumentError("unknown variant '" + std::string(name) + "' (expected i3d|rand|uniform|attn|tsd)");
}

std::size_t uniform_stride(std::size_t frames, std::size_t distilled) {
    check_lengths(frames, distilled, "uniform_stride");
    return frames / distilled;
}

std::size_t max_uniform_offset(std::size_t frames, std::size_t distilled) {
    return frames - 1 - (distilled - 1) * uniform_stride(frames, distilled);
}

template <typename S>
tsd::TransformMatrix<S> one_hot(std::size_t frames, std::span<const std::size_t> rows) {
    if (rows.empty()) throw ArgumentError("one_hot: no columns");
    Tensor<S> p({frames, rows.size()});
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j] >= frames) {
            throw ArgumentError("one_hot: row " + std::to_string(rows[j]) + " out of range for T=" +
                                std::to_string(frames));
        }
        p[rows[j] * rows.size() + j] = S{1};
    }
    return tsd::TransformMatrix<S>(std::move(p));
}

template <typename S>
std::vector<std::size_t> selected_rows(const tsd::TransformMatrix<S>& p) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < p.distilled(); ++j) {
        std::size_t found = p.frames();
        for (std::size_t i = 0; i < p.frames(); ++i) {
            const S v = p(i, j);
            if (v == S{0}) continue;
            if (v != S{1} || found != p.frames()) {
                throw ArgumentError("selected_rows: column " + std::to_string(j) + " is not one-hot");
            }
            found = i;
        }
        if (found == p.frames()) {
            throw ArgumentError("selected_rows: column " + std::to_string(j) + " is empty");
        }
        rows.push_back(found);
    }
    return rows;
}

template <typename S>
tsd::TransformMatrix<S> uniform_P(std::size_t frames, std::size_t distilled, std::size_t offset) {
    check_lengths(frames, distilled, "uniform_P");
    const std::size_t stride = uniform_stride(frames, distilled);
    if (offset > max_uniform_offset(frames, distilled)) {
        throw ArgumentError("uniform_P: offset " + std::to_string(offset) + " exceeds admissible maximum " +
                            std::to_string(max_uniform_offset(frames, distilled)));
    }
    std::vector<std::size_t> rows(distilled);
    for (std::size_t j = 0; j < distilled; ++j) rows[j] = offset + j * stride;
    return one_hot<S>(frames, rows);
}

template <typename S>
tsd::TransformMatrix<S> random_P(std::size_t frames, std::size_t distilled, std::uint64_t seed) {
    check_lengths(frames, distilled, "random_P");
    std::vector<std::size_t> all(frames);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> rows;
    rows.reserve(distilled);
    std::mt19937_64 rng(seed);
    // Selection sampling keeps the input order, so rows come out ascending.
    std::sample(all.begin(), all.end(), std::back_inserter(rows), distilled, rng);
    return one_hot<S>(frames, rows);
}

template <typename S>
tsd::TransformMatrix<S> consecutive_P(std::size_t frames, std::size_t distilled, std::size_t start) {
    check_lengths(frames, distilled, "consecutive_P");
    if (start + distilled > frames) {
        throw ArgumentError("consecutive_P: window [" + std::to_string(start) + ", " +
                            std::to_string(start + distilled) + ") exceeds T=" + std::to_string(frames));
    }
    std::vector<std::size_t> rows(distilled);
    std::iota(rows.begin(), rows.end(), start);
    return one_hot<S>(frames, rows);
}

template <typename S>
void validate_attention_weights(std::span<const S> weights) {
    if (weights.empty()) throw ArgumentError("attention weights are empty");
    double total = 0;
    for (S w : weights) {
        if (!std::isfinite(w) || w < S{0}) {
            throw ArgumentError("attention weights must be finite and non-negative");
        }
        total += static_cast<double>(w);
    }
    const double tolerance = std::is_same_v<S, float> ? 1e-5 : 1e-12;
    if (std::abs(total - 1.0) > tolerance * static_cast<double>(weights.size())) {
        throw ArgumentError("attention weights must sum to 1, got " + std::to_string(total));
    }
}

template <typename S>
tsd::TransformMatrix<S> attention_P_train(std::span<const S> weights) {
    validate_attention_weights(weights);
    const std::size_t frames = weights.size();
    Tensor<S> p({frames, frames});
    for (std::size_t i = 0; i < frames; ++i) p[i * frames + i] = weights[i] * static_cast<S>(frames);
    return tsd::TransformMatrix<S>(std::move(p));
}

template <typename S>
std::vector<std::size_t> top_weight_indices(std::span<const S> weights, std::size_t count) {
    check_lengths(weights.size(), count, "top_weight_indices");
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

template <typename S>
tsd::TransformMatrix<S> attention_P_test(std::span<const S> weights, std::size_t distilled) {
    validate_attention_weights(weights);
    const auto rows = top_weight_indices(weights, distilled);
    return one_hot<S>(weights.size(), rows);
}

#define FEWFRAME_INSTANTIATE_SELECTORS(S)                                                                 \
    template tsd::TransformMatrix<S> one_hot<S>(std::size_t, std::span<const std::size_t>);               \
    template std::vector<std::size_t> selected_rows(const tsd::TransformMatrix<S>&);                      \
    template tsd::TransformMatrix<S> uniform_P<S>(std::size_t, std::size_t, std::size_t);                 \
    template tsd::TransformMatrix<S> random_P<S>(std::size_t, std::size_t, std::uint64_t);                \
    template tsd::TransformMatrix<S> consecutive_P<S>(std::size_t, std::size_t, std::size_t);             \
    template void validate_attention_weights(std::span<const S>);                                         \
    template tsd::TransformMatrix<S> attention_P_train(std::span<const S>);                               \
    template tsd::TransformMatrix<S> attention_P_test(std::span<const S>, std::size_t);                   \
    template std::vector<std::size_t> top_weight_indices(std::span<const S>, std::size_t);

FEWFRAME_INSTANTIATE_SELECTORS(float)
FEWFRAME_INSTANTIATE_SELECTORS(double)

#undef FEWFRAME_INSTANTIATE_SELECTORS

}  // namespace fewframe::selectors
