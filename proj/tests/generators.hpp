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

// Hand-rolled generators of small random problem instances for property tests.

#pragma once

#include <numeric>
#include <random>
#include <vector>

#include "fewframe/ops.hpp"
#include "fewframe/tsd.hpp"
#include "oracles.hpp"

namespace gen {

using fewframe::Shape;
using oracle::Dense;
using oracle::uniform_index;

struct ConvCase {
    Dense x;       // T x H x W x Cin
    Dense kernel;  // Kt x Kh x Kw x Cin x Cout
    fewframe::ops::Triple stride;
    bool same = false;
};

inline std::array<std::size_t, 3> arr(fewframe::ops::Triple t) { return {t.t, t.h, t.w}; }

inline fewframe::ops::Padding padding(bool same) {
    return same ? fewframe::ops::Padding::Same : fewframe::ops::Padding::Valid;
}

/// Extents <= 8 with the kernel fitting the input under either padding.
inline ConvCase conv_case(std::mt19937_64& rng, std::size_t max_extent = 6, std::size_t max_channels = 4) {
    ConvCase c;
    c.same = uniform_index(rng, 0, 1) == 1;
    std::size_t in[3], k[3], s[3];
    for (int a = 0; a < 3; ++a) {
        in[a] = uniform_index(rng, 1, max_extent);
        k[a] = uniform_index(rng, 1, std::min<std::size_t>(in[a], 3));
        s[a] = uniform_index(rng, 1, 2);
    }
    const std::size_t cin = uniform_index(rng, 1, max_channels), cout = uniform_index(rng, 1, max_channels);
    c.x = oracle::random_tensor({in[0], in[1], in[2], cin}, rng);
    c.kernel = oracle::random_tensor({k[0], k[1], k[2], cin, cout}, rng);
    c.stride = {s[0], s[1], s[2]};
    return c;
}

inline std::vector<std::size_t> permutation(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

inline Shape shape(std::mt19937_64& rng, std::size_t rank, std::size_t max_extent = 8) {
    Shape s(rank);
    for (auto& e : s) e = uniform_index(rng, 1, max_extent);
    return s;
}

/// Random column-stochastic T x Ts matrix.
inline Dense stochastic(std::mt19937_64& rng, std::size_t t, std::size_t ts) {
    Dense p = oracle::random_tensor({t, ts}, rng, 0.0, 1.0);
    for (std::size_t j = 0; j < ts; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < t; ++i) s += p[i * ts + j];
        for (std::size_t i = 0; i < t; ++i) p[i * ts + j] /= s;
    }
    return p;
}

struct TsdCase {
    Dense f;
    oracle::TsdKernels k;
    fewframe::tsd::BlockConfig block;
};

/// Feature map T x H x W x C and TSD weights with T <= 8, H, W <= 4, C <= 4.
inline TsdCase tsd_case(std::mt19937_64& rng, double weight_scale = 0.5) {
    TsdCase c;
    const std::size_t t = uniform_index(rng, 1, 8), h = uniform_index(rng, 1, 4), w = uniform_index(rng, 1, 4);
    const std::size_t ch = uniform_index(rng, 1, 4), ts = uniform_index(rng, 1, t);
    c.block.frames = t;
    c.block.distilled = ts;
    c.block.channels = ch;
    c.f = oracle::random_tensor({t, h, w, ch}, rng);
    const auto shapes = fewframe::tsd::weight_shapes(c.block);
    Dense* fields[] = {&c.k.w_alpha, &c.k.b_alpha, &c.k.w_beta, &c.k.b_beta, &c.k.w_gamma, &c.k.b_gamma};
    for (std::size_t i = 0; i < 6; ++i) *fields[i] = oracle::random_tensor(shapes[i], rng, -weight_scale, weight_scale);
    return c;
}

inline fewframe::tsd::TsdWeights<double> weights(const oracle::TsdKernels& k) {
    return {k.w_alpha, k.b_alpha, k.w_beta, k.b_beta, k.w_gamma, k.b_gamma};
}

}  // namespace gen
