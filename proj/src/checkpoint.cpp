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

#include "fewframe/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "fewframe/errors.hpp"

namespace fewframe::checkpoint {
namespace {

constexpr char kMagic[4] = {'T', 'S', 'D', 'P'};
constexpr std::uint32_t kMaxNameLength = 256;
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;

}  // namespace

std::vector<std::uint8_t> encode(const nets::ModelParams<float>& params) {
    detail::ByteWriter w;
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(params.params().size()));
    for (const auto& p : params.params()) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.bytes(p.name.data(), p.name.size());
        w.u32(static_cast<std::uint32_t>(p.value.rank()));
        for (std::size_t d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (float v : p.value.data()) w.f32(v);
    }
    return std::move(w.buffer());
}

nets::ModelParams<float> decode(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    const auto magic = r.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad checkpoint magic", 0);
    const std::uint64_t version_at = r.offset();
    if (r.u32("version") != kVersion) throw FormatError("unsupported checkpoint version", version_at);
    const std::uint64_t count_at = r.offset();
    const std::uint32_t count = r.u32("record count");
    // Smallest record: name length, one name byte, rank, one dim, one scalar.
    if (count > r.remaining() / 17) throw FormatError("record count exceeds file size", count_at);

    nets::ModelParams<float> params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint64_t name_at = r.offset();
        const std::uint32_t name_len = r.u32("name length");
        if (name_len == 0 || name_len > kMaxNameLength) throw FormatError("bad parameter name length", name_at);
        const auto raw = r.take(name_len, "name");
        std::string name(raw.begin(), raw.end());
        const std::uint64_t rank_at = r.offset();
        const std::uint32_t rank = r.u32("rank");
        if (rank == 0 || rank > kMaxRank) throw FormatError("bad tensor rank", rank_at);
        Shape shape(rank);
        std::uint64_t elements = 1;
        for (auto& d : shape) {
            const std::uint64_t dim_at = r.offset();
            d = r.u32("dimension");
            if (d == 0) throw FormatError("zero tensor extent", dim_at);
            elements *= d;
            if (elements > kMaxElements) throw FormatError("tensor too large", dim_at);
        }
        r.need(elements * 4, "payload");
        std::vector<float> values(elements);
        for (auto& v : values) {
            const std::uint64_t at = r.offset();
            v = r.f32("payload");
            if (!std::isfinite(v)) throw FormatError("non-finite parameter value", at);
        }
        try {
            params.add(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
        } catch (const std::invalid_argument& e) {
            throw FormatError(e.what(), name_at);
        }
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint", r.offset());
    return params;
}

void save(const std::filesystem::path& path, const nets::ModelParams<float>& params) {
    detail::write_file(path, encode(params));
}

nets::ModelParams<float> load(const std::filesystem::path& path) { return decode(detail::read_file(path)); }

void require_compatible(const nets::ModelParams<float>& params, const nets::NetConfig& net) {
    const auto expected = nets::init_params<float>(net, 0);
    const auto want = expected.params();
    const auto got = params.params();
    if (want.size() != got.size()) {
        throw ArgumentError("checkpoint has " + std::to_string(got.size()) + " parameters, config expects " +
                            std::to_string(want.size()));
    }
    for (const auto& p : want) {
        if (!params.contains(p.name)) throw ArgumentError("checkpoint lacks parameter '" + p.name + "'");
        const Shape& s = params.at(p.name).shape();
        if (s != p.value.shape()) {
            throw ArgumentError("checkpoint parameter '" + p.name + "' has shape " + shape_string(s) +
                                ", config expects " + shape_string(p.value.shape()));
        }
    }
}

}  // namespace fewframe::checkpoint
