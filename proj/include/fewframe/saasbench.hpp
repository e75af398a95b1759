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

// Client/cloud cost accounting: parameters, FLOPs and transmitted frames per
// video under a deployment choice. Pure bookkeeping, no I/O.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fewframe/nets.hpp"
#include "fewframe/op_descriptor.hpp"
#include "fewframe/selectors.hpp"

namespace fewframe::saasbench {

/// Multiply-accumulate counts as 2 FLOPs. Throws ArgumentError if any extent
/// the kind depends on is zero.
std::uint64_t count_flops(const OpDescriptor& op);
std::uint64_t count_flops(std::span<const OpDescriptor> ops);

enum class Deployment { CloudOnly, Split };

std::string_view to_string(Deployment d);
/// "cloud" or "split".
Deployment parse_deployment(std::string_view name);

struct FrameGeometry {
    std::uint64_t height = 32, width = 32, channels = 3;
    std::uint64_t bytes_per_scalar = 4;
};

struct CostReport {
    selectors::Variant variant = selectors::Variant::Tsd;
    Deployment deployment = Deployment::CloudOnly;
    std::uint64_t clips = 0, frames = 0, distilled = 0;
    std::uint64_t client_params = 0, client_flops = 0;
    std::uint64_t frames_processed_client = 0, frames_transmitted = 0, bytes_transmitted = 0;
    std::uint64_t cloud_params = 0, cloud_flops = 0;
    std::uint64_t frames_processed_cloud = 0;

    friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// True for variants with a client-side component (tsd, attn).
bool supports_split(selectors::Variant variant);

/// Costs of Q clips of T frames reduced to T_s. Parameter counts come from
/// `params` restricted to the groups the variant uses; FLOPs from the op lists
/// of `net` with its frame counts replaced by T and T_s. Split places
/// extractor, TSD block and selection on the client.
CostReport simulate_session(const nets::ModelParams<float>& params, const nets::NetConfig& net,
                            selectors::Variant variant, Deployment deployment, std::size_t frames,
                            std::size_t distilled, std::size_t clips, const FrameGeometry& geometry);

/// Header line of cost_csv.
std::string cost_csv_header();
/// Header plus one row per report.
std::string cost_csv(std::span<const CostReport> reports);

}  // namespace fewframe::saasbench
