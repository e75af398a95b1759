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

// Run configuration: every tunable of a run as flat key = value pairs.
// Files may contain blank lines and '#' comments. Unknown keys are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fewframe/nets.hpp"
#include "fewframe/saasbench.hpp"
#include "fewframe/synthvid.hpp"
#include "fewframe/train.hpp"

namespace fewframe::cli {

struct RunConfig {
    // shared
    std::uint64_t seed = 0;
    selectors::Variant variant = selectors::Variant::Tsd;
    std::size_t frames = 16;    // T
    std::size_t distilled = 4;  // T_s
    std::size_t clips = 3;      // Q

    // data
    std::size_t video_frames = 16;
    std::size_t frame_side = 32;
    std::size_t channels = 3;
    std::size_t classes = 8;
    std::size_t signal_frames = 2;
    double noise_level = 0.05;
    std::size_t train_clips = 4000;
    std::size_t test_clips = 1000;

    // networks
    std::size_t extractor_side = 16;
    std::size_t extractor_channels1 = 8, extractor_channels2 = 16;
    std::size_t main_channels1 = 16, main_channels2 = 32;

    // training
    train::TrainConfig training;

    // bench
    saasbench::Deployment deployment = saasbench::Deployment::CloudOnly;
    std::size_t bytes_per_scalar = 4;

    /// Throws ConfigError for an unknown key or unparsable value.
    void set(std::string_view key, std::string_view value);
    /// Throws ConfigError when settings are mutually inconsistent.
    void validate() const;

    synthvid::SynthSpec synth_spec(std::uint64_t seed) const;
    nets::NetConfig net_config() const;
    train::TrainConfig train_config() const;
    saasbench::FrameGeometry geometry() const;

    /// Every key with its resolved value, in a fixed order; parse(to_text())
    /// reproduces the config exactly.
    std::string to_text() const;

    static std::vector<std::string> keys();
    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);

    friend bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_text() == b.to_text(); }
};

}  // namespace fewframe::cli
