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

// fewframe: dataset generation, training, evaluation, distillation and cost
// benchmarking from one resolved run configuration.
//
// Exit status: 0 success, 1 configuration or input error, 2 runtime failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fewframe/checkpoint.hpp"
#include "fewframe/errors.hpp"
#include "fewframe/rng.hpp"
#include "fewframe/run_config.hpp"
#include "fewframe/saasbench.hpp"
#include "fewframe/synthvid.hpp"
#include "fewframe/train.hpp"

namespace fs = std::filesystem;
using namespace fewframe;

namespace {

enum Stream : std::uint64_t { kTrainData = 1, kTestData = 2, kInit = 3 };

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::string> variant, deployment;
    std::optional<std::size_t> frames, distilled, clips;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string data, checkpoint, input;
    bool all = false;
};

cli::RunConfig resolve(const Options& o) {
    cli::RunConfig cfg = o.config.empty() ? cli::RunConfig{} : cli::RunConfig::load(o.config);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.variant) cfg.set("variant", *o.variant);
    if (o.deployment) cfg.set("deployment", *o.deployment);
    if (o.frames) cfg.frames = *o.frames;
    if (o.distilled) cfg.distilled = *o.distilled;
    if (o.clips) cfg.clips = *o.clips;
    if (o.seed) cfg.seed = *o.seed;
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

fs::path prepare_out(const Options& o, const cli::RunConfig& cfg) {
    const fs::path out(o.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    write_text(out / "resolved.cfg", cfg.to_text());
    std::clog << "# resolved config\n" << cfg.to_text();
    return out;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw ConfigError(std::string(flag) + " is required");
    if (!fs::exists(path)) throw IoError("missing file " + path);
}

synthvid::SynthSpec split_spec(const cli::RunConfig& cfg, Stream split) {
    return cfg.synth_spec(derive_seed(cfg.seed, split));
}

// Reads <data>/<name> when --data is given, otherwise regenerates the split.
std::vector<synthvid::LabeledClip> load_split(const Options& o, const cli::RunConfig& cfg, Stream split) {
    const char* name = split == kTrainData ? "train" : "test";
    if (!o.data.empty()) {
        const fs::path dir = fs::path(o.data) / name;
        if (!fs::exists(dir / "manifest.txt")) throw IoError("missing file " + (dir / "manifest.txt").string());
        return synthvid::read_dataset(dir);
    }
    const std::size_t count = split == kTrainData ? cfg.train_clips : cfg.test_clips;
    return synthvid::generate_dataset(split_spec(cfg, split), count);
}

nets::ModelParams<float> load_params(const Options& o, const cli::RunConfig& cfg) {
    const auto net = cfg.net_config();
    if (o.checkpoint.empty()) return nets::init_params<float>(net, derive_seed(cfg.seed, kInit));
    require_file(o.checkpoint, "--checkpoint");
    auto params = checkpoint::load(o.checkpoint);
    try {
        checkpoint::require_compatible(params, net);
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("checkpoint does not match the configured networks: ") + e.what());
    }
    return params;
}

void gen_data(const Options& o, const cli::RunConfig& cfg) {
    const fs::path out = prepare_out(o, cfg);
    for (Stream split : {kTrainData, kTestData}) {
        const std::size_t count = split == kTrainData ? cfg.train_clips : cfg.test_clips;
        const auto clips = synthvid::generate_dataset(split_spec(cfg, split), count);
        synthvid::write_dataset(out / (split == kTrainData ? "train" : "test"), clips);
        std::clog << "wrote " << count << (split == kTrainData ? " train" : " test") << " clips\n";
    }
}

void train_cmd(const Options& o, const cli::RunConfig& cfg) {
    const fs::path out = prepare_out(o, cfg);
    const auto data = load_split(o, cfg, kTrainData);
    const auto net = cfg.net_config();
    const auto result = train::train_variant(nets::init_params<float>(net, derive_seed(cfg.seed, kInit)), data, net,
                                             cfg.train_config());
    checkpoint::save(out / "checkpoint.tsdp", result.params);
    write_text(out / "loss.csv", train::loss_csv(result.losses));
    std::clog << "trained " << selectors::to_string(cfg.variant) << " for " << result.losses.size() << " steps";
    if (!result.losses.empty()) std::clog << ", final loss " << result.losses.back();
    std::clog << '\n';
}

void eval_cmd(const Options& o, const cli::RunConfig& cfg) {
    require_file(o.checkpoint, "--checkpoint");
    const fs::path out = prepare_out(o, cfg);
    const auto params = load_params(o, cfg);
    const auto data = load_split(o, cfg, kTestData);
    const auto report = train::evaluate_qclips(params, data, cfg.net_config(), cfg.variant, cfg.frames,
                                               cfg.distilled, cfg.clips, cfg.seed);
    write_text(out / "eval.csv", train::eval_csv(report));
    std::clog << selectors::to_string(cfg.variant) << " accuracy " << report.accuracy << " over "
              << report.clips_evaluated << " clips";
    if (report.clips_skipped) std::clog << " (" << report.clips_skipped << " shorter than T skipped)";
    std::clog << '\n';
}

void distill_cmd(const Options& o, const cli::RunConfig& cfg) {
    require_file(o.input, "--input");
    const fs::path out = prepare_out(o, cfg);
    const auto params = load_params(o, cfg);
    const auto clip = synthvid::read_clip(o.input);
    const auto& video = clip.clip;
    const auto net = cfg.net_config();
    if (video.dim(0) < cfg.frames) {
        throw ConfigError("clip " + o.input + " has " + std::to_string(video.dim(0)) + " frames, T is " +
                          std::to_string(cfg.frames));
    }
    if (video.dim(1) != net.input_hw || video.dim(2) != net.input_hw || video.dim(3) != net.channels) {
        throw ConfigError("clip " + o.input + " has frame shape " + shape_string(video.shape()) +
                          ", config expects side " + std::to_string(net.input_hw));
    }
    const std::size_t start = (video.dim(0) - cfg.frames) / 2, frame = video.size() / video.dim(0);
    Tensor<float> window({cfg.frames, video.dim(1), video.dim(2), video.dim(3)},
                         std::vector<float>(video.data().begin() + static_cast<std::ptrdiff_t>(start * frame),
                                            video.data().begin() +
                                                static_cast<std::ptrdiff_t>((start + cfg.frames) * frame)));
    auto rng = stream_rng(cfg.seed, 0);
    const auto p = train::eval_transform(params, net, window, cfg.variant, cfg.distilled, rng);
    Tensor<float> y = tsd::distill(window, p);
    for (float& v : y.data()) v = std::clamp(v, 0.0f, 1.0f);
    synthvid::write_clip(out / "distilled.tsdc", {std::move(y), clip.label});

    std::ostringstream csv;
    csv.precision(9);
    csv << "frame";
    for (std::size_t j = 0; j < p.distilled(); ++j) csv << ",p" << j;
    csv << '\n';
    for (std::size_t i = 0; i < p.frames(); ++i) {
        csv << i;
        for (std::size_t j = 0; j < p.distilled(); ++j) csv << ',' << p(i, j);
        csv << '\n';
    }
    write_text(out / "transform.csv", csv.str());
    std::clog << "distilled " << cfg.frames << " frames starting at " << start << " into " << cfg.distilled << '\n';
}

void bench_cmd(const Options& o, const cli::RunConfig& cfg) {
    const fs::path out = prepare_out(o, cfg);
    const auto params = load_params(o, cfg);
    const auto net = cfg.net_config();
    std::vector<saasbench::CostReport> rows;
    auto add = [&](selectors::Variant v, saasbench::Deployment d) {
        rows.push_back(saasbench::simulate_session(params, net, v, d, cfg.frames, cfg.distilled, cfg.clips,
                                                   cfg.geometry()));
    };
    if (o.all) {
        using V = selectors::Variant;
        for (V v : {V::I3D, V::Random, V::Uniform, V::Attention, V::Tsd}) {
            add(v, saasbench::Deployment::CloudOnly);
            if (saasbench::supports_split(v)) add(v, saasbench::Deployment::Split);
        }
    } else {
        add(cfg.variant, cfg.deployment);
    }
    write_text(out / "cost.csv", saasbench::cost_csv(rows));
    std::clog << "wrote " << rows.size() << " cost rows\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-frame action recognition with temporal sequence distillation"};
    app.require_subcommand(1);
    Options o;

    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "key = value run configuration file");
        sub->add_option("--set", o.overrides, "override one config key (key=value), repeatable");
        sub->add_option("--variant", o.variant, "i3d, rand, uniform, attn or tsd");
        sub->add_option("--T", o.frames, "frames per window");
        sub->add_option("--Ts", o.distilled, "distilled frames per window");
        sub->add_option("--Q", o.clips, "windows per video");
        sub->add_option("--seed", o.seed, "run seed");
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--deployment", o.deployment, "cloud or split");
    };

    CLI::App* gen = app.add_subcommand("gen-data", "write train/ and test/ clip directories");
    CLI::App* tr = app.add_subcommand("train", "train a variant and write checkpoint.tsdp and loss.csv");
    CLI::App* ev = app.add_subcommand("eval", "Q-clip evaluation of a checkpoint, writes eval.csv");
    CLI::App* di = app.add_subcommand("distill", "distill one clip, writes distilled.tsdc and transform.csv");
    CLI::App* be = app.add_subcommand("bench", "client/cloud cost accounting, writes cost.csv");
    for (CLI::App* sub : {gen, tr, ev, di, be}) common(sub);
    for (CLI::App* sub : {tr, ev}) sub->add_option("--data", o.data, "dataset directory written by gen-data");
    for (CLI::App* sub : {ev, di, be}) sub->add_option("--checkpoint", o.checkpoint, "checkpoint file");
    di->add_option("--input", o.input, "clip file");
    be->add_flag("--all", o.all, "every variant and supported deployment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const cli::RunConfig cfg = resolve(o);
        if (gen->parsed()) gen_data(o, cfg);
        if (tr->parsed()) train_cmd(o, cfg);
        if (ev->parsed()) eval_cmd(o, cfg);
        if (di->parsed()) distill_cmd(o, cfg);
        if (be->parsed()) bench_cmd(o, cfg);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
