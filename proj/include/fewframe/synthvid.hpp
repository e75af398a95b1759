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

// Synthetic action clips. Each clip has a static, class-independent background
// with Gaussian noise; k contiguous frames at a random temporal position carry
// a class-specific glyph moving in a class-specific direction.
//
// Clip file layout (little-endian):
//   "TSDC" | u32 version=1 | u32 label | u32 T, H, W, C | u8 dtype (0 = f32)
//   | 3 zero pad bytes | T*H*W*C f32 payload, row-major, frame-major.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fewframe/tensor.hpp"

namespace fewframe::synthvid {

inline constexpr std::size_t kMaxClasses = 16;
inline constexpr std::size_t kGlyphSide = 5;
inline constexpr std::size_t kClipHeaderBytes = 32;

struct SynthSpec {
    std::size_t frames = 16;        // T
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t channels = 3;
    std::size_t classes = 8;        // K
    std::size_t signal_frames = 2;  // k
    double noise_level = 0.05;
    std::uint64_t seed = 0;

    /// Throws ArgumentError unless 1 <= k <= T, 2 <= K <= 16, H,W >= 8,
    /// noise_level >= 0 and the glyph path fits in the frame.
    void validate() const;
};

struct LabeledClip {
    Tensor<float> clip;  // T x H x W x C, values in [0, 1]
    std::uint32_t label = 0;

    friend bool operator==(const LabeledClip&, const LabeledClip&) = default;
};

/// 5x5 bitmap for a class, row-major, 1 = glyph pixel.
const std::array<std::uint8_t, kGlyphSide * kGlyphSide>& glyph(std::size_t label);
/// Per-frame (dy, dx) unit direction for a class.
std::array<int, 2> motion_direction(std::size_t label);
/// Pixels per glyph cell.
std::size_t glyph_scale(const SynthSpec& spec);
/// First frame of the signal block for a given clip seed.
std::size_t signal_start(const SynthSpec& spec, std::uint64_t seed);

/// Deterministic per (spec, label, seed). Throws ArgumentError if label >= K.
LabeledClip generate_clip(const SynthSpec& spec, std::uint32_t label, std::uint64_t seed);

/// `count` clips with labels cycling 0..K-1; clip i uses a seed derived from
/// (spec.seed, i).
std::vector<LabeledClip> generate_dataset(const SynthSpec& spec, std::size_t count);
std::uint64_t dataset_clip_seed(const SynthSpec& spec, std::size_t index);

std::vector<std::uint8_t> encode_clip(const LabeledClip& clip);
/// Throws FormatError with the failing byte offset.
LabeledClip decode_clip(std::span<const std::uint8_t> bytes);

void write_clip(const std::filesystem::path& path, const LabeledClip& clip);
LabeledClip read_clip(const std::filesystem::path& path);

/// Directory of clip files plus manifest.txt ("<relative path> <label>" per line).
void write_dataset(const std::filesystem::path& dir, std::span<const LabeledClip> clips);
std::vector<LabeledClip> read_dataset(const std::filesystem::path& dir);

}  // namespace fewframe::synthvid
