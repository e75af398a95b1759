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

// Frame-selection baselines expressed as transform matrices, so every variant
// runs through the same Y = X P pipeline as the distillation block.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fewframe/tsd.hpp"

namespace fewframe::selectors {

/// I3D: consecutive frames. Random/Uniform: sampled frames. Attention: learned
/// per-position importance. Tsd: distillation block.
enum class Variant { I3D, Random, Uniform, Attention, Tsd };

/// CLI spelling: i3d, rand, uniform, attn, tsd.
std::string_view to_string(Variant v);
/// Throws ArgumentError on unknown names.
Variant parse_variant(std::string_view name);

/// floor(T / T_s).
std::size_t uniform_stride(std::size_t frames, std::size_t distilled);
/// Largest admissible offset: T - 1 - (T_s - 1) * stride.
std::size_t max_uniform_offset(std::size_t frames, std::size_t distilled);

/// T x T_s matrix whose column j is one-hot at rows[j].
template <typename S>
tsd::TransformMatrix<S> one_hot(std::size_t frames, std::span<const std::size_t> rows);

/// Row index of the single nonzero entry of every column. Throws ArgumentError
/// if a column is not one-hot.
template <typename S>
std::vector<std::size_t> selected_rows(const tsd::TransformMatrix<S>& p);

/// Columns one-hot at offset + j * stride.
template <typename S>
tsd::TransformMatrix<S> uniform_P(std::size_t frames, std::size_t distilled, std::size_t offset);

/// Columns one-hot at a uniformly random sorted subset; deterministic per seed.
template <typename S>
tsd::TransformMatrix<S> random_P(std::size_t frames, std::size_t distilled, std::uint64_t seed);

/// Columns one-hot at `start`, `start + 1`, ...
template <typename S>
tsd::TransformMatrix<S> consecutive_P(std::size_t frames, std::size_t distilled, std::size_t start);

/// Throws ArgumentError unless weights are non-negative and sum to 1.
template <typename S>
void validate_attention_weights(std::span<const S> weights);

/// diag(w * T): every frame passes, scaled by its importance.
template <typename S>
tsd::TransformMatrix<S> attention_P_train(std::span<const S> weights);

/// One-hot at the T_s largest weights, ascending by frame index; ties go to the
/// smaller index.
template <typename S>
tsd::TransformMatrix<S> attention_P_test(std::span<const S> weights, std::size_t distilled);

template <typename S>
std::vector<std::size_t> top_weight_indices(std::span<const S> weights, std::size_t count);

}  // namespace fewframe::selectors
