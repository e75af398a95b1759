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

#include "fewframe/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "fewframe/errors.hpp"

namespace fewframe::cli {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct Binding {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, std::string_view)> set;
};

template <typename M>
Binding size_key(std::string key, M member) {
    return {key, [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); },
            [member, key](RunConfig& c, std::string_view v) {
                std::invoke(member, c) = parse_number<std::size_t>(key, v);
            }};
}

template <typename M>
Binding real_key(std::string key, M member) {
    return {key, [member](const RunConfig& c) { return format_double(std::invoke(member, c)); },
            [member, key](RunConfig& c, std::string_view v) { std::invoke(member, c) = parse_number<double>(key, v); }};
}

template <typename Get>
void schedule_keys(std::vector<Binding>& out, const std::string& prefix, Get sched) {
    auto name = [&](const char* suffix) { return prefix + suffix; };
    out.push_back(real_key(name("_lr"), [sched](auto& c) -> auto& { return sched(c).lr; }));
    out.push_back(real_key(name("_decay_factor"), [sched](auto& c) -> auto& { return sched(c).decay_factor; }));
    out.push_back(size_key(name("_decay_steps"), [sched](auto& c) -> auto& { return sched(c).decay_steps; }));
    out.push_back(size_key(name("_steps"), [sched](auto& c) -> auto& { return sched(c).steps; }));
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = [] {
        std::vector<Binding> b;
        b.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                     [](RunConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v); }});
        b.push_back({"variant", [](const RunConfig& c) { return std::string(selectors::to_string(c.variant)); },
                     [](RunConfig& c, std::string_view v) {
                         try {
                             c.variant = selectors::parse_variant(v);
                         } catch (const ArgumentError& e) {
                             throw ConfigError(e.what());
                         }
                     }});
        b.push_back(size_key("T", &RunConfig::frames));
        b.push_back(size_key("T_s", &RunConfig::distilled));
        b.push_back(size_key("Q", &RunConfig::clips));
        b.push_back(size_key("video_frames", &RunConfig::video_frames));
        b.push_back(size_key("frame_side", &RunConfig::frame_side));
        b.push_back(size_key("channels", &RunConfig::channels));
        b.push_back(size_key("classes", &RunConfig::classes));
        b.push_back(size_key("signal_frames", &RunConfig::signal_frames));
        b.push_back(real_key("noise_level", &RunConfig::noise_level));
        b.push_back(size_key("train_clips", &RunConfig::train_clips));
        b.push_back(size_key("test_clips", &RunConfig::test_clips));
        b.push_back(size_key("extractor_side", &RunConfig::extractor_side));
        b.push_back(size_key("extractor_channels1", &RunConfig::extractor_channels1));
        b.push_back(size_key("extractor_channels2", &RunConfig::extractor_channels2));
        b.push_back(size_key("main_channels1", &RunConfig::main_channels1));
        b.push_back(size_key("main_channels2", &RunConfig::main_channels2));
        schedule_keys(b, "baseline", [](auto& c) -> auto& { return c.training.baseline; });
        schedule_keys(b, "stage1", [](auto& c) -> auto& { return c.training.stage1; });
        schedule_keys(b, "stage2", [](auto& c) -> auto& { return c.training.stage2; });
        b.push_back(size_key("batch_size", [](auto& c) -> auto& { return c.training.batch_size; }));
        b.push_back(real_key("momentum", [](auto& c) -> auto& { return c.training.momentum; }));
        b.push_back(real_key("clip_norm", [](auto& c) -> auto& { return c.training.clip_norm; }));
        b.push_back({"deployment", [](const RunConfig& c) { return std::string(saasbench::to_string(c.deployment)); },
                     [](RunConfig& c, std::string_view v) {
                         try {
                             c.deployment = saasbench::parse_deployment(v);
                         } catch (const ArgumentError& e) {
                             throw ConfigError(e.what());
                         }
                     }});
        b.push_back(size_key("bytes_per_scalar", &RunConfig::bytes_per_scalar));
        return b;
    }();
    return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    for (const auto& b : bindings()) {
        if (b.key == key) {
            b.set(*this, trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
    try {
        synth_spec(seed).validate();
        net_config().validate();
        train_config().validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    if (video_frames < frames) throw ConfigError("video_frames must be >= T");
    if (train_clips == 0 || test_clips == 0) throw ConfigError("train_clips and test_clips must be positive");
    if (bytes_per_scalar == 0) throw ConfigError("bytes_per_scalar must be positive");
}

synthvid::SynthSpec RunConfig::synth_spec(std::uint64_t s) const {
    synthvid::SynthSpec spec;
    spec.frames = video_frames;
    spec.height = frame_side;
    spec.width = frame_side;
    spec.channels = channels;
    spec.classes = classes;
    spec.signal_frames = signal_frames;
    spec.noise_level = noise_level;
    spec.seed = s;
    return spec;
}

nets::NetConfig RunConfig::net_config() const {
    nets::NetConfig n;
    n.frames = frames;
    n.distilled = distilled;
    n.input_hw = frame_side;
    n.channels = channels;
    n.extractor_hw = extractor_side;
    n.extractor_channels = {extractor_channels1, extractor_channels2};
    n.main_channels = {main_channels1, main_channels2};
    n.classes = classes;
    return n;
}

train::TrainConfig RunConfig::train_config() const {
    train::TrainConfig t = training;
    t.seed = seed;
    t.variant = variant;
    t.frames = frames;
    t.distilled = distilled;
    t.clips = clips;
    return t;
}

saasbench::FrameGeometry RunConfig::geometry() const {
    return {frame_side, frame_side, channels, bytes_per_scalar};
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    for (const auto& b : bindings()) os << b.key << " = " << b.get(*this) << '\n';
    return os.str();
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& b : bindings()) out.emplace_back(b.key);
    return out;
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace fewframe::cli
