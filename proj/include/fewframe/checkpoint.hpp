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

// Parameter checkpoints. Little-endian layout:
//   "TSDP" | u32 version = 1 | u32 record count |
//   per record: u32 name length | name bytes | u32 rank | u32 dims[rank] |
//               f32 payload (row-major)

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fewframe/nets.hpp"

namespace fewframe::checkpoint {

inline constexpr std::uint32_t kVersion = 1;

std::vector<std::uint8_t> encode(const nets::ModelParams<float>& params);
/// Throws FormatError with the byte offset of the first bad field.
nets::ModelParams<float> decode(std::span<const std::uint8_t> bytes);

void save(const std::filesystem::path& path, const nets::ModelParams<float>& params);
nets::ModelParams<float> load(const std::filesystem::path& path);

/// Throws ArgumentError unless `params` holds exactly the names and shapes
/// init_params would produce for `net`.
void require_compatible(const nets::ModelParams<float>& params, const nets::NetConfig& net);

}  // namespace fewframe::checkpoint
