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

#include "fewframe/saasbench.hpp"

#include <sstream>

#include "fewframe/errors.hpp"

namespace fewframe::saasbench {
namespace {

using selectors::Variant;

std::uint64_t require(std::uint64_t v, const OpDescriptor& op, const char* field) {
    if (v == 0) throw ArgumentError("count_flops: op '" + op.name + "' has zero " + field);
    return v;
}

std::uint64_t sum_flops(const std::vector<OpDescriptor>& ops) { return count_flops(std::span<const OpDescriptor>(ops)); }

}  // namespace

std::uint64_t count_flops(const OpDescriptor& op) {
    switch (op.kind) {
        case OpKind::Matmul:
            return 2 * require(op.m, op, "m") * require(op.k, op, "k") * require(op.n, op, "n");
        case OpKind::Conv3d:
            return 2 * require(op.kt, op, "kt") * require(op.kh, op, "kh") * require(op.kw, op, "kw") *
                   require(op.cin, op, "cin") * require(op.cout, op, "cout") * require(op.out_t, op, "out_t") *
                   require(op.out_h, op, "out_h") * require(op.out_w, op, "out_w");
        case OpKind::DepthwiseConv3d:
            return 2 * require(op.kt, op, "kt") * require(op.kh, op, "kh") * require(op.kw, op, "kw") *
                   require(op.cin, op, "cin") * require(op.out_t, op, "out_t") * require(op.out_h, op, "out_h") *
                   require(op.out_w, op, "out_w");
        case OpKind::Elementwise:
            return require(op.elements, op, "elements");
        case OpKind::SoftmaxCols:
            return 4 * require(op.m, op, "m") * require(op.n, op, "n");
    }
    throw ArgumentError("count_flops: unknown op kind");
}

std::uint64_t count_flops(std::span<const OpDescriptor> ops) {
    std::uint64_t total = 0;
    for (const auto& op : ops) total += count_flops(op);
    return total;
}

std::string_view to_string(Deployment d) { return d == Deployment::Split ? "split" : "cloud"; }

Deployment parse_deployment(std::string_view name) {
    if (name == "cloud") return Deployment::CloudOnly;
    if (name == "split") return Deployment::Split;
    throw ArgumentError("unknown deployment '" + std::string(name) + "' (expected cloud or split)");
}

bool supports_split(Variant variant) { return variant == Variant::Tsd || variant == Variant::Attention; }

CostReport simulate_session(const nets::ModelParams<float>& params, const nets::NetConfig& net, Variant variant,
                            Deployment deployment, std::size_t frames, std::size_t distilled, std::size_t clips,
                            const FrameGeometry& geometry) {
    if (deployment == Deployment::Split && !supports_split(variant)) {
        throw ArgumentError("split deployment needs a client component; variant '" +
                            std::string(selectors::to_string(variant)) + "' has none");
    }
    if (clips == 0) throw ArgumentError("simulate_session: Q must be positive");
    if (geometry.height == 0 || geometry.width == 0 || geometry.channels == 0 || geometry.bytes_per_scalar == 0) {
        throw ArgumentError("simulate_session: frame geometry must be positive");
    }
    nets::NetConfig cfg = net;
    cfg.frames = frames;
    cfg.distilled = distilled;
    cfg.validate();

    std::uint64_t front_flops = 0, front_params = 0;
    if (variant == Variant::Tsd) {
        front_flops = sum_flops(nets::extractor_ops(cfg)) + sum_flops(nets::tsd_block_ops(cfg)) +
                      sum_flops(nets::distill_ops(cfg));
        front_params = params.count(nets::ParamGroup::Extractor) + params.count(nets::ParamGroup::Tsd);
    } else if (variant == Variant::Attention) {
        OpDescriptor scoring{"attn.softmax", OpKind::SoftmaxCols};
        scoring.m = frames;
        scoring.n = 1;
        front_flops = count_flops(scoring);
        front_params = params.count(nets::ParamGroup::Attention);
    }
    const std::uint64_t main_flops = sum_flops(nets::recognizer_ops(cfg, distilled));
    const std::uint64_t main_params = params.count(nets::ParamGroup::Main);
    const std::uint64_t q = clips;

    CostReport r;
    r.variant = variant;
    r.deployment = deployment;
    r.clips = q;
    r.frames = frames;
    r.distilled = distilled;
    r.cloud_flops = q * main_flops;
    r.cloud_params = main_params;
    r.frames_processed_cloud = q * distilled;
    if (deployment == Deployment::Split) {
        r.client_params = front_params;
        r.client_flops = q * front_flops;
        r.frames_processed_client = q * frames;
        r.frames_transmitted = q * distilled;
    } else {
        r.cloud_params += front_params;
        r.cloud_flops += q * front_flops;
        r.frames_transmitted = q * frames;
    }
    r.bytes_transmitted =
        r.frames_transmitted * geometry.height * geometry.width * geometry.channels * geometry.bytes_per_scalar;
    return r;
}

std::string cost_csv_header() {
    return "variant,deployment,clips,T,T_s,client_params,client_flops,frames_processed_client,"
           "frames_transmitted,bytes_transmitted,cloud_params,cloud_flops,frames_processed_cloud";
}

std::string cost_csv(std::span<const CostReport> reports) {
    std::ostringstream os;
    os << cost_csv_header() << '\n';
    for (const auto& r : reports) {
        os << selectors::to_string(r.variant) << ',' << to_string(r.deployment) << ',' << r.clips << ',' << r.frames
           << ',' << r.distilled << ',' << r.client_params << ',' << r.client_flops << ','
           << r.frames_processed_client << ',' << r.frames_transmitted << ',' << r.bytes_transmitted << ','
           << r.cloud_params << ',' << r.cloud_flops << ',' << r.frames_processed_cloud << '\n';
    }
    return os.str();
}

}  // namespace fewframe::saasbench
