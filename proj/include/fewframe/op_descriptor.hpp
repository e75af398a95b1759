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

#pragma once

#include <cstdint>
#include <string>

namespace fewframe::saasbench {

enum class OpKind {
    Matmul,           // m x k times k x n
    Conv3d,           // full 3D convolution
    DepthwiseConv3d,  // per-channel 3D convolution
    Elementwise,      // bias add, relu, pooling, scaling: one FLOP per element
    SoftmaxCols,      // rows x cols, normalized per column
};

/// Fully shaped description of one op, enough to count its FLOPs.
///   Matmul:          m, k, n
///   Conv3d:          kernel (kt,kh,kw), cin, cout, out (t,h,w)
///   DepthwiseConv3d: kernel (kt,kh,kw), cin (= channels), out (t,h,w)
///   Elementwise:     elements
///   SoftmaxCols:     m = rows, n = cols
struct OpDescriptor {
    std::string name;
    OpKind kind = OpKind::Elementwise;
    std::uint64_t m = 0, k = 0, n = 0;
    std::uint64_t kt = 0, kh = 0, kw = 0;
    std::uint64_t cin = 0, cout = 0;
    std::uint64_t out_t = 0, out_h = 0, out_w = 0;
    std::uint64_t elements = 0;
};

}  // namespace fewframe::saasbench
