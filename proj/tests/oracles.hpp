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

// Reference implementations for the tests. Everything here is written
// directly from the defining formulas, loop by loop, in double precision, and
// shares no code with the library kernels.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "fewframe/tensor.hpp"

namespace oracle {

using fewframe::Shape;
using Dense = fewframe::Tensor<double>;

inline Dense random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(fewframe::shape_size(shape));
    for (double& x : v) x = u(rng);
    return Dense(shape, std::move(v));
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double max_abs_diff(const Dense& a, const Dense& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline Dense matmul(const Dense& a, const Dense& b) {
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Dense out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t p = 0; p < k; ++p) s += a.at({i, p}) * b.at({p, j});
            out[i * n + j] = s;
        }
    }
    return out;
}

// Output index o reads input o' = axes[o]: out.shape[d] = in.shape[axes[d]].
inline Dense permute(const Dense& x, const std::vector<std::size_t>& axes) {
    const std::size_t r = x.rank();
    Shape out_shape(r);
    for (std::size_t d = 0; d < r; ++d) out_shape[d] = x.dim(axes[d]);
    Dense out(out_shape);
    std::vector<std::size_t> idx(r, 0), src(r);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t d = r; d-- > 0;) {
            idx[d] = rem % out_shape[d];
            rem /= out_shape[d];
        }
        for (std::size_t d = 0; d < r; ++d) src[axes[d]] = idx[d];
        std::size_t offset = 0;
        for (std::size_t d = 0; d < r; ++d) offset = offset * x.dim(d) + src[d];
        out[flat] = x[offset];
    }
    return out;
}

inline Dense softmax_cols(const Dense& z) {
    const std::size_t m = z.dim(0), n = z.dim(1);
    Dense out({m, n});
    for (std::size_t j = 0; j < n; ++j) {
        double denom = 0;
        for (std::size_t i = 0; i < m; ++i) denom += std::exp(z[i * n + j]);
        for (std::size_t i = 0; i < m; ++i) out[i * n + j] = std::exp(z[i * n + j]) / denom;
    }
    return out;
}

struct Axis {
    std::size_t out, pad_before;
};

// Same: out = ceil(in / stride), total padding = max(0, (out-1)*stride + k - in),
// leading share floor(total / 2). Valid: out = (in - k) / stride + 1.
inline Axis axis(std::size_t in, std::size_t k, std::size_t stride, bool same) {
    if (!same) return {(in - k) / stride + 1, 0};
    const std::size_t out = (in + stride - 1) / stride;
    const long total = std::max<long>(0, static_cast<long>((out - 1) * stride + k) - static_cast<long>(in));
    return {out, static_cast<std::size_t>(total / 2)};
}

// Seven nested loops over (t, h, w, cout) x (kt, kh, kw, cin) with explicit
// bounds checks for the zero padding. Kernel layout Kt x Kh x Kw x Cin x Cout.
inline Dense conv3d(const Dense& x, const Dense& k, std::array<std::size_t, 3> stride, bool same) {
    const std::size_t T = x.dim(0), H = x.dim(1), W = x.dim(2), Cin = x.dim(3);
    const std::size_t KT = k.dim(0), KH = k.dim(1), KW = k.dim(2), Cout = k.dim(4);
    const Axis at = axis(T, KT, stride[0], same), ah = axis(H, KH, stride[1], same), aw = axis(W, KW, stride[2], same);
    Dense out({at.out, ah.out, aw.out, Cout});
    for (std::size_t t = 0; t < at.out; ++t)
        for (std::size_t h = 0; h < ah.out; ++h)
            for (std::size_t w = 0; w < aw.out; ++w)
                for (std::size_t co = 0; co < Cout; ++co) {
                    double s = 0;
                    for (std::size_t kt = 0; kt < KT; ++kt)
                        for (std::size_t kh = 0; kh < KH; ++kh)
                            for (std::size_t kw = 0; kw < KW; ++kw) {
                                const long it = static_cast<long>(t * stride[0] + kt) - static_cast<long>(at.pad_before);
                                const long ih = static_cast<long>(h * stride[1] + kh) - static_cast<long>(ah.pad_before);
                                const long iw = static_cast<long>(w * stride[2] + kw) - static_cast<long>(aw.pad_before);
                                if (it < 0 || ih < 0 || iw < 0 || it >= static_cast<long>(T) ||
                                    ih >= static_cast<long>(H) || iw >= static_cast<long>(W)) {
                                    continue;
                                }
                                for (std::size_t ci = 0; ci < Cin; ++ci) {
                                    s += x.at({std::size_t(it), std::size_t(ih), std::size_t(iw), ci}) *
                                         k.at({kt, kh, kw, ci, co});
                                }
                            }
                    out.at({t, h, w, co}) = s;
                }
    return out;
}

// Depthwise: kernel Kt x Kh x Kw x C, channel c only sees channel c.
inline Dense depthwise_conv3d(const Dense& x, const Dense& k, std::array<std::size_t, 3> stride, bool same) {
    const std::size_t C = x.dim(3);
    Dense out;
    for (std::size_t c = 0; c < C; ++c) {
        Dense xc({x.dim(0), x.dim(1), x.dim(2), 1});
        for (std::size_t i = 0; i < xc.size(); ++i) xc[i] = x[i * C + c];
        Dense kc({k.dim(0), k.dim(1), k.dim(2), 1, 1});
        for (std::size_t i = 0; i < kc.size(); ++i) kc[i] = k[i * C + c];
        const Dense oc = conv3d(xc, kc, stride, same);
        if (c == 0) out = Dense({oc.dim(0), oc.dim(1), oc.dim(2), C});
        for (std::size_t i = 0; i < oc.size(); ++i) out[i * C + c] = oc[i];
    }
    return out;
}

inline Dense avg_pool3d(const Dense& x, std::array<std::size_t, 3> win) {
    const std::size_t C = x.dim(3);
    Dense out({x.dim(0) / win[0], x.dim(1) / win[1], x.dim(2) / win[2], C});
    for (std::size_t t = 0; t < out.dim(0); ++t)
        for (std::size_t h = 0; h < out.dim(1); ++h)
            for (std::size_t w = 0; w < out.dim(2); ++w)
                for (std::size_t c = 0; c < C; ++c) {
                    double s = 0;
                    for (std::size_t a = 0; a < win[0]; ++a)
                        for (std::size_t b = 0; b < win[1]; ++b)
                            for (std::size_t d = 0; d < win[2]; ++d)
                                s += x.at({t * win[0] + a, h * win[1] + b, w * win[2] + d, c});
                    out.at({t, h, w, c}) = s / static_cast<double>(win[0] * win[1] * win[2]);
                }
    return out;
}

inline Dense add_bias(Dense x, const Dense& b) {
    const std::size_t C = b.size();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += b[i % C];
    return x;
}

inline Dense relu(Dense x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] > 0 ? x[i] : 0.0;
    return x;
}

// Y[j] = sum_i P[i][j] X[i], frame by frame.
inline Dense distill(const Dense& x, const Dense& p) {
    const std::size_t T = x.dim(0), Ts = p.dim(1);
    const std::size_t frame = x.size() / T;
    Dense y({Ts, x.dim(1), x.dim(2), x.dim(3)});
    for (std::size_t j = 0; j < Ts; ++j)
        for (std::size_t e = 0; e < frame; ++e) {
            double s = 0;
            for (std::size_t i = 0; i < T; ++i) s += p[i * Ts + j] * x[i * frame + e];
            y[j * frame + e] = s;
        }
    return y;
}

struct TsdKernels {
    Dense w_alpha, b_alpha, w_beta, b_beta, w_gamma, b_gamma;
};

// Step-by-step transform: A = f*w_alpha + b; O[h,w,c,s] = sum_t A[t,h,w,c] w_beta[t,s] + b_beta[s];
// G = f*w_gamma + b; logits[t,s] = sum_{h,w,c} G[t,h,w,c] O[h,w,c,s]; P = softmax over t.
inline Dense compute_transform(const Dense& f, const TsdKernels& k) {
    const std::size_t T = f.dim(0), H = f.dim(1), W = f.dim(2), C = f.dim(3);
    const std::size_t Ts = k.w_beta.dim(4);
    const Dense a = add_bias(conv3d(f, k.w_alpha, {1, 1, 1}, true), k.b_alpha);
    const Dense g = add_bias(conv3d(f, k.w_gamma, {1, 1, 1}, true), k.b_gamma);
    Dense logits({T, Ts});
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < Ts; ++s) {
            double acc = 0;
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t w = 0; w < W; ++w)
                    for (std::size_t c = 0; c < C; ++c) {
                        double o = k.b_beta[s];
                        for (std::size_t u = 0; u < T; ++u) o += a.at({u, h, w, c}) * k.w_beta.at({0, 0, 0, u, s});
                        acc += g.at({t, h, w, c}) * o;
                    }
            logits[t * Ts + s] = acc;
        }
    return softmax_cols(logits);
}

// Central differences of a scalar function with respect to every entry of x.
inline Dense numeric_gradient(const std::function<double(const Dense&)>& f, Dense x, double eps = 1e-5) {
    Dense g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = f(x);
        x[i] = keep - eps;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2 * eps);
    }
    return g;
}

// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const Dense& a, const Dense& b, double floor = 1e-6) {
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(std::max(na, nb)), floor);
}

}  // namespace oracle
