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

#include "fewframe/synthvid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"
#include "fewframe/rng.hpp"

namespace fewframe::synthvid {
namespace {

enum Stream : std::uint64_t { kBackground = 1, kSignal = 2, kNoise = 3, kDatasetClip = 4 };

constexpr std::array<const char*, kMaxClasses> kGlyphRows = {
    "#...#.#.#...#...#.#.#...#",  // X
    "..#....#..#####..#....#..",  // plus
    "######...##...##...######",  // square outline
    "..#...###.#####.###...#..",  // diamond
    "#####..#....#....#....#..",  // T
    "#....#....#....#....#####",  // L
    "#####...#...#...#...#####",  // Z
    "#####.....#####.....#####",  // horizontal bars
    "#.#.##.#.##.#.##.#.##.#.#",  // vertical bars
    "#....##...###..####.#####",  // triangle
    "......###..###..###......",  // center block
    "#.....#.....#.....#.....#",  // backslash
    "....#...#...#...#...#....",  // slash
    "######....####.#....#####",  // E
    ".#####....#....#.....####",  // C
    "#...#.......#.......#...#",  // corner dots
};

constexpr std::array<std::array<int, 2>, 8> kDirections = {{
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1},
}};

struct Path {
    std::size_t start_frame;
    long y0, x0;
    long dy, dx;  // pixels per frame
};

long speed_for(const SynthSpec& spec) {
    const long side = static_cast<long>(kGlyphSide * glyph_scale(spec));
    const long room = static_cast<long>(std::min(spec.height, spec.width)) - side;
    if (spec.signal_frames <= 1) return 0;
    return std::min<long>(2, room / static_cast<long>(spec.signal_frames - 1));
}

// Admissible start coordinates so the glyph stays inside [0, extent) on every signal frame.
std::pair<long, long> start_range(long extent, long side, long velocity, std::size_t frames) {
    const long travel = velocity * static_cast<long>(frames > 0 ? frames - 1 : 0);
    const long lo = travel < 0 ? -travel : 0;
    const long hi = extent - side - (travel > 0 ? travel : 0);
    return {lo, hi};
}

Path signal_path(const SynthSpec& spec, std::uint32_t label, std::uint64_t seed) {
    auto rng = stream_rng(seed, kSignal);
    Path p{};
    p.start_frame = std::uniform_int_distribution<std::size_t>(0, spec.frames - spec.signal_frames)(rng);
    const long speed = speed_for(spec);
    const auto dir = motion_direction(label);
    p.dy = dir[0] * speed;
    p.dx = dir[1] * speed;
    const long side = static_cast<long>(kGlyphSide * glyph_scale(spec));
    const auto [ylo, yhi] = start_range(static_cast<long>(spec.height), side, p.dy, spec.signal_frames);
    const auto [xlo, xhi] = start_range(static_cast<long>(spec.width), side, p.dx, spec.signal_frames);
    p.y0 = std::uniform_int_distribution<long>(ylo, yhi)(rng);
    p.x0 = std::uniform_int_distribution<long>(xlo, xhi)(rng);
    return p;
}

}  // namespace

void SynthSpec::validate() const {
    if (frames == 0 || signal_frames == 0 || signal_frames > frames) {
        throw ArgumentError("synth spec: need 1 <= signal_frames <= T");
    }
    if (classes < 2 || classes > kMaxClasses) {
        throw ArgumentError("synth spec: class count must lie in [2, " + std::to_string(kMaxClasses) + "]");
    }
    if (height < 8 || width < 8 || channels == 0) {
        throw ArgumentError("synth spec: frames must be at least 8x8 with >= 1 channel");
    }
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
        throw ArgumentError("synth spec: noise_level must be finite and >= 0");
    }
}

const std::array<std::uint8_t, kGlyphSide * kGlyphSide>& glyph(std::size_t label) {
    static const auto table = [] {
        std::array<std::array<std::uint8_t, kGlyphSide * kGlyphSide>, kMaxClasses> t{};
        for (std::size_t g = 0; g < kMaxClasses; ++g) {
            for (std::size_t i = 0; i < kGlyphSide * kGlyphSide; ++i) t[g][i] = kGlyphRows[g][i] == '#';
        }
        return t;
    }();
    if (label >= kMaxClasses) throw ArgumentError("glyph: label out of range");
    return table[label];
}

std::array<int, 2> motion_direction(std::size_t label) { return kDirections[label % kDirections.size()]; }

std::size_t glyph_scale(const SynthSpec& spec) {
    return std::max<std::size_t>(1, std::min(spec.height, spec.width) / 16);
}

std::size_t signal_start(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    return signal_path(spec, 0, seed).start_frame;
}

LabeledClip generate_clip(const SynthSpec& spec, std::uint32_t label, std::uint64_t seed) {
    spec.validate();
    if (label >= spec.classes) {
        throw ArgumentError("generate_clip: label " + std::to_string(label) + " out of range for K=" +
                            std::to_string(spec.classes));
    }
    const std::size_t T = spec.frames, H = spec.height, W = spec.width, C = spec.channels;

    // Background: per-channel base level plus one low-frequency wave, static over time.
    std::vector<float> background(H * W * C);
    {
        auto rng = stream_rng(seed, kBackground);
        std::uniform_real_distribution<double> base(0.1, 0.35), amp(0.0, 0.15), freq(0.05, 0.3),
            phase(0.0, 2.0 * std::numbers::pi);
        for (std::size_t c = 0; c < C; ++c) {
            const double b = base(rng), a = amp(rng), fy = freq(rng), fx = freq(rng), ph = phase(rng);
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    const double v = b + a * std::sin(fy * static_cast<double>(y) + fx * static_cast<double>(x) + ph);
                    background[(y * W + x) * C + c] = static_cast<float>(std::clamp(v, 0.0, 0.5));
                }
            }
        }
    }

    Tensor<float> clip({T, H, W, C});
    auto data = clip.data();
    for (std::size_t t = 0; t < T; ++t) {
        std::copy(background.begin(), background.end(), data.begin() + static_cast<std::ptrdiff_t>(t * H * W * C));
    }

    const Path path = signal_path(spec, label, seed);
    const auto& bits = glyph(label);
    const std::size_t scale = glyph_scale(spec);
    for (std::size_t k = 0; k < spec.signal_frames; ++k) {
        const std::size_t t = path.start_frame + k;
        const long y0 = path.y0 + path.dy * static_cast<long>(k);
        const long x0 = path.x0 + path.dx * static_cast<long>(k);
        for (std::size_t gy = 0; gy < kGlyphSide * scale; ++gy) {
            for (std::size_t gx = 0; gx < kGlyphSide * scale; ++gx) {
                if (!bits[(gy / scale) * kGlyphSide + gx / scale]) continue;
                const auto y = static_cast<std::size_t>(y0 + static_cast<long>(gy));
                const auto x = static_cast<std::size_t>(x0 + static_cast<long>(gx));
                for (std::size_t c = 0; c < C; ++c) data[((t * H + y) * W + x) * C + c] = 1.0f;
            }
        }
    }

    if (spec.noise_level > 0.0) {
        auto rng = stream_rng(seed, kNoise);
        std::normal_distribution<double> noise(0.0, spec.noise_level);
        for (float& v : data) v = static_cast<float>(std::clamp(static_cast<double>(v) + noise(rng), 0.0, 1.0));
    }
    return LabeledClip{std::move(clip), label};
}

std::uint64_t dataset_clip_seed(const SynthSpec& spec, std::size_t index) {
    return derive_seed(spec.seed, kDatasetClip, index);
}

std::vector<LabeledClip> generate_dataset(const SynthSpec& spec, std::size_t count) {
    std::vector<LabeledClip> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(generate_clip(spec, static_cast<std::uint32_t>(i % spec.classes), dataset_clip_seed(spec, i)));
    }
    return out;
}

std::vector<std::uint8_t> encode_clip(const LabeledClip& lc) {
    if (lc.clip.rank() != 4) {
        throw DimensionError("encode_clip: clip must be T x H x W x C, got " + shape_string(lc.clip.shape()));
    }
    detail::ByteWriter w;
    w.bytes("TSDC", 4);
    w.u32(1);
    w.u32(lc.label);
    for (std::size_t d : lc.clip.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("encode_clip: extent too large");
        w.u32(static_cast<std::uint32_t>(d));
    }
    w.u8(0);
    w.u8(0), w.u8(0), w.u8(0);
    w.buffer().reserve(kClipHeaderBytes + lc.clip.size() * 4);
    for (float v : lc.clip.data()) w.f32(v);
    return std::move(w.buffer());
}

LabeledClip decode_clip(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    const auto magic = r.take(4, "clip header");
    if (std::memcmp(magic.data(), "TSDC", 4) != 0) throw FormatError("bad clip magic", 0);
    if (const std::uint32_t version = r.u32("clip header"); version != 1) {
        throw FormatError("unsupported clip version " + std::to_string(version), 4);
    }
    LabeledClip lc;
    lc.label = r.u32("clip header");
    Shape shape(4);
    std::uint64_t elements = 1;
    constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::uint64_t at = r.offset();
        shape[i] = r.u32("clip header");
        if (shape[i] == 0) throw FormatError("zero clip extent", at);
        elements *= shape[i];
        if (elements > kMaxElements) throw FormatError("clip dimensions overflow", at);
    }
    if (const std::uint8_t dtype = r.u8("clip header"); dtype != 0) {
        throw FormatError("unsupported clip dtype " + std::to_string(dtype), r.offset() - 1);
    }
    for (int i = 0; i < 3; ++i) {
        if (r.u8("clip header") != 0) throw FormatError("nonzero clip header padding", r.offset() - 1);
    }
    r.need(elements * 4, "clip payload");
    std::vector<float> data(elements);
    for (std::uint64_t i = 0; i < elements; ++i) {
        const std::uint64_t at = r.offset();
        const float v = r.f32("clip payload");
        if (!(v >= 0.0f && v <= 1.0f)) throw FormatError("clip pixel outside [0, 1]", at);
        data[i] = v;
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after clip payload", r.offset());
    lc.clip = Tensor<float>(std::move(shape), std::move(data));
    return lc;
}

void write_clip(const std::filesystem::path& path, const LabeledClip& clip) {
    const auto bytes = encode_clip(clip);
    detail::write_file(path, bytes);
}

LabeledClip read_clip(const std::filesystem::path& path) { return decode_clip(detail::read_file(path)); }

void write_dataset(const std::filesystem::path& dir, std::span<const LabeledClip> clips) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    std::ostringstream manifest;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "clip_%06zu.tsdc", i);
        write_clip(dir / name, clips[i]);
        manifest << name << ' ' << clips[i].label << '\n';
    }
    const std::string text = manifest.str();
    detail::write_file(dir / "manifest.txt",
                       std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<LabeledClip> read_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.txt";
    const auto bytes = detail::read_file(manifest_path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::vector<LabeledClip> out;
    std::string line;
    std::uint64_t offset = 0;
    while (std::getline(in, line)) {
        const std::uint64_t line_offset = offset;
        offset += line.size() + 1;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string rel;
        long long label = -1;
        if (!(fields >> rel >> label) || label < 0) {
            throw FormatError("malformed manifest line in " + manifest_path.string(), line_offset);
        }
        LabeledClip lc = read_clip(dir / rel);
        if (lc.label != static_cast<std::uint64_t>(label)) {
            throw FormatError("manifest label disagrees with " + rel, line_offset);
        }
        out.push_back(std::move(lc));
    }
    return out;
}

}  // namespace fewframe::synthvid
