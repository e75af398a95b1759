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

#include "fewframe/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fewframe::ops {
namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* what) {
    if (shape.size() != rank) {
        throw DimensionError(std::string(what) + " expects rank " + std::to_string(rank) +
                             ", got shape " + shape_string(shape));
    }
}

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    }
}

std::size_t same_extent(std::size_t in, std::size_t stride) { return (in + stride - 1) / stride; }

void axis_geometry(std::size_t in, std::size_t k, std::size_t stride, Padding padding,
                   std::size_t& pad_before, std::size_t& out, const char* axis) {
    if (stride == 0 || k == 0 || in == 0) {
        throw ArgumentError(std::string("conv geometry: zero extent or stride on axis ") + axis);
    }
    if (padding == Padding::Valid) {
        if (k > in) {
            throw DimensionError(std::string("kernel extent ") + std::to_string(k) +
                                 " exceeds input extent " + std::to_string(in) + " on axis " + axis);
        }
        pad_before = 0;
        out = (in - k) / stride + 1;
        return;
    }
    out = same_extent(in, stride);
    std::size_t needed = (out - 1) * stride + k;
    std::size_t pad_total = needed > in ? needed - in : 0;
    if (k > in + pad_total) {
        throw DimensionError(std::string("kernel extent ") + std::to_string(k) +
                             " exceeds padded input extent on axis " + axis);
    }
    pad_before = pad_total / 2;
}

ConvGeometry geometry_for(const Shape& input_shape, const Shape& kernel_shape, Triple stride,
                          Padding padding) {
    return conv_geometry({input_shape[0], input_shape[1], input_shape[2]},
                         {kernel_shape[0], kernel_shape[1], kernel_shape[2]}, stride, padding);
}

// Calls fn(out_index, in_index, kernel_index) for every (output position, kernel
// offset) pair whose input position falls inside the unpadded input. Indices are
// flat spatial indices (channel axis excluded). Visiting order is fixed.
template <typename Fn>
void for_each_tap(const ConvGeometry& g, Fn&& fn) {
    const auto in_t = static_cast<std::ptrdiff_t>(g.in.t);
    const auto in_h = static_cast<std::ptrdiff_t>(g.in.h);
    const auto in_w = static_cast<std::ptrdiff_t>(g.in.w);
    std::size_t out_index = 0;
    for (std::size_t ot = 0; ot < g.out.t; ++ot) {
        for (std::size_t oh = 0; oh < g.out.h; ++oh) {
            for (std::size_t ow = 0; ow < g.out.w; ++ow, ++out_index) {
                const auto t0 = static_cast<std::ptrdiff_t>(ot * g.stride.t) -
                                static_cast<std::ptrdiff_t>(g.pad_before.t);
                const auto h0 = static_cast<std::ptrdiff_t>(oh * g.stride.h) -
                                static_cast<std::ptrdiff_t>(g.pad_before.h);
                const auto w0 = static_cast<std::ptrdiff_t>(ow * g.stride.w) -
                                static_cast<std::ptrdiff_t>(g.pad_before.w);
                for (std::size_t kt = 0; kt < g.kernel.t; ++kt) {
                    const std::ptrdiff_t it = t0 + static_cast<std::ptrdiff_t>(kt);
                    if (it < 0 || it >= in_t) continue;
                    for (std::size_t kh = 0; kh < g.kernel.h; ++kh) {
                        const std::ptrdiff_t ih = h0 + static_cast<std::ptrdiff_t>(kh);
                        if (ih < 0 || ih >= in_h) continue;
                        for (std::size_t kw = 0; kw < g.kernel.w; ++kw) {
                            const std::ptrdiff_t iw = w0 + static_cast<std::ptrdiff_t>(kw);
                            if (iw < 0 || iw >= in_w) continue;
                            const auto in_index = static_cast<std::size_t>((it * in_h + ih) * in_w + iw);
                            const std::size_t k_index = (kt * g.kernel.h + kh) * g.kernel.w + kw;
                            fn(out_index, in_index, k_index);
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

ConvGeometry conv_geometry(Triple in, Triple kernel, Triple stride, Padding padding) {
    ConvGeometry g{in, kernel, stride, {}, {}};
    axis_geometry(in.t, kernel.t, stride.t, padding, g.pad_before.t, g.out.t, "T");
    axis_geometry(in.h, kernel.h, stride.h, padding, g.pad_before.h, g.out.h, "H");
    axis_geometry(in.w, kernel.w, stride.w, padding, g.pad_before.w, g.out.w, "W");
    return g;
}

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<S> out({m, n});
    auto o = out.data();
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        S* row = o.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const S v = ad[i * k + p];
            const S* brow = bd.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += v * brow[j];
        }
    }
    return out;
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> axes) {
    std::vector<std::size_t> inverse(axes.size(), axes.size());
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i] >= axes.size() || inverse[axes[i]] != axes.size()) {
            throw ArgumentError("invalid permutation of " + std::to_string(axes.size()) + " axes");
        }
        inverse[axes[i]] = i;
    }
    return inverse;
}

template <typename S>
Tensor<S> permute(const Tensor<S>& x, std::span<const std::size_t> axes) {
    if (axes.size() != x.rank()) {
        throw ArgumentError("permute: " + std::to_string(axes.size()) + " axes for tensor of shape " +
                            shape_string(x.shape()));
    }
    inverse_permutation(axes);  // validates
    const std::size_t rank = x.rank();
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.dim(axes[i]);
    Tensor<S> out(out_shape);
    if (rank == 0) {
        out[0] = x[0];
        return out;
    }
    // Output axis i walks input axis axes[i].
    const auto in_strides = row_major_strides(x.shape());
    std::vector<std::size_t> step(rank);
    for (std::size_t i = 0; i < rank; ++i) step[i] = in_strides[axes[i]];
    std::vector<std::size_t> counter(rank, 0);
    std::size_t src = 0;
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t dst = 0; dst < od.size(); ++dst) {
        od[dst] = xd[src];
        for (std::size_t ax = rank; ax-- > 0;) {
            if (++counter[ax] < out_shape[ax]) {
                src += step[ax];
                break;
            }
            src -= step[ax] * (out_shape[ax] - 1);
            counter[ax] = 0;
        }
    }
    return out;
}

template <typename S>
Tensor<S> softmax_cols(const Tensor<S>& logits) {
    require_rank(logits.shape(), 2, "softmax_cols");
    const std::size_t rows = logits.dim(0), cols = logits.dim(1);
    Tensor<S> out(logits.shape());
    auto in = logits.data();
    auto o = out.data();
    for (std::size_t j = 0; j < cols; ++j) {
        S max_v = -std::numeric_limits<S>::infinity();
        for (std::size_t i = 0; i < rows; ++i) max_v = std::max(max_v, in[i * cols + j]);
        S total = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            const S e = std::exp(in[i * cols + j] - max_v);
            o[i * cols + j] = e;
            total += e;
        }
        for (std::size_t i = 0; i < rows; ++i) o[i * cols + j] /= total;
    }
    return out;
}

template <typename S>
Tensor<S> softmax_cols_backward(const Tensor<S>& p, const Tensor<S>& grad_p) {
    require_same_shape(p, grad_p, "softmax_cols_backward");
    const std::size_t rows = p.dim(0), cols = p.dim(1);
    Tensor<S> out(p.shape());
    for (std::size_t j = 0; j < cols; ++j) {
        S dot = 0;
        for (std::size_t i = 0; i < rows; ++i) dot += p[i * cols + j] * grad_p[i * cols + j];
        for (std::size_t i = 0; i < rows; ++i) {
            out[i * cols + j] = p[i * cols + j] * (grad_p[i * cols + j] - dot);
        }
    }
    return out;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    require_same_shape(a, b, "add");
    Tensor<S> out(a);
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
    return out;
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    require_same_shape(a, b, "sub");
    Tensor<S> out(a);
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
    return out;
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    require_same_shape(a, b, "mul");
    Tensor<S> out(a);
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
    return out;
}

template <typename S>
Tensor<S> scale(const Tensor<S>& x, S factor) {
    Tensor<S> out(x);
    for (S& v : out.data()) v *= factor;
    return out;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
    Tensor<S> out(x);
    for (S& v : out.data()) v = v > S{0} ? v : S{0};
    return out;
}

template <typename S>
Tensor<S> relu_backward(const Tensor<S>& x, const Tensor<S>& grad) {
    require_same_shape(x, grad, "relu_backward");
    Tensor<S> out(grad);
    auto o = out.data();
    auto xd = x.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (!(xd[i] > S{0})) o[i] = S{0};
    }
    return out;
}

namespace {

// Splits a shape around `axis` into (outer, extent, inner) element counts.
struct AxisSplit {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

}  // namespace

template <typename S>
Tensor<S> mean_over_axis(const Tensor<S>& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw ArgumentError("mean_over_axis: axis " + std::to_string(axis) + " out of range for shape " +
                            shape_string(x.shape()));
    }
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    const AxisSplit s = split_at(x.shape(), axis);
    Tensor<S> out(out_shape);
    auto xd = x.data();
    auto o = out.data();
    for (std::size_t a = 0; a < s.outer; ++a) {
        for (std::size_t e = 0; e < s.extent; ++e) {
            const S* src = xd.data() + (a * s.extent + e) * s.inner;
            S* dst = o.data() + a * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
    }
    const S inv = S{1} / static_cast<S>(s.extent);
    for (S& v : o) v *= inv;
    return out;
}

template <typename S>
Tensor<S> mean_over_axis_backward(const Tensor<S>& grad, const Shape& input_shape, std::size_t axis) {
    const AxisSplit s = split_at(input_shape, axis);
    Tensor<S> out(input_shape);
    const S inv = S{1} / static_cast<S>(s.extent);
    auto g = grad.data();
    auto o = out.data();
    for (std::size_t a = 0; a < s.outer; ++a) {
        for (std::size_t e = 0; e < s.extent; ++e) {
            S* dst = o.data() + (a * s.extent + e) * s.inner;
            const S* src = g.data() + a * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] = src[i] * inv;
        }
    }
    return out;
}

template <typename S>
Tensor<S> max_over_axis(const Tensor<S>& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw ArgumentError("max_over_axis: axis " + std::to_string(axis) + " out of range for shape " +
                            shape_string(x.shape()));
    }
    Shape out_shape = x.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    const AxisSplit s = split_at(x.shape(), axis);
    Tensor<S> out(out_shape);
    auto xd = x.data();
    auto o = out.data();
    for (std::size_t a = 0; a < s.outer; ++a) {
        S* dst = o.data() + a * s.inner;
        std::copy_n(xd.data() + a * s.extent * s.inner, s.inner, dst);
        for (std::size_t e = 1; e < s.extent; ++e) {
            const S* src = xd.data() + (a * s.extent + e) * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] = std::max(dst[i], src[i]);
        }
    }
    return out;
}

template <typename S>
Tensor<S> max_over_axis_backward(const Tensor<S>& x, const Tensor<S>& grad, std::size_t axis) {
    const AxisSplit s = split_at(x.shape(), axis);
    Tensor<S> out(x.shape());
    auto xd = x.data();
    auto g = grad.data();
    auto o = out.data();
    for (std::size_t a = 0; a < s.outer; ++a) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            std::size_t best = 0;
            for (std::size_t e = 1; e < s.extent; ++e) {
                if (xd[(a * s.extent + e) * s.inner + i] > xd[(a * s.extent + best) * s.inner + i]) best = e;
            }
            o[(a * s.extent + best) * s.inner + i] = g[a * s.inner + i];
        }
    }
    return out;
}

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
    S total = 0;
    for (S v : x.data()) total += v;
    return Tensor<S>::scalar(total);
}

template <typename S>
Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& bias) {
    if (x.rank() == 0 || bias.rank() != 1 || bias.dim(0) != x.shape().back()) {
        throw DimensionError("add_bias: bias " + shape_string(bias.shape()) +
                             " does not match last axis of " + shape_string(x.shape()));
    }
    Tensor<S> out(x);
    const std::size_t c = bias.dim(0);
    auto o = out.data();
    auto b = bias.data();
    for (std::size_t i = 0; i < o.size(); i += c) {
        for (std::size_t j = 0; j < c; ++j) o[i + j] += b[j];
    }
    return out;
}

template <typename S>
Tensor<S> bias_backward(const Tensor<S>& grad) {
    const std::size_t c = grad.shape().back();
    Tensor<S> out({c});
    auto g = grad.data();
    auto o = out.data();
    for (std::size_t i = 0; i < g.size(); i += c) {
        for (std::size_t j = 0; j < c; ++j) o[j] += g[i + j];
    }
    return out;
}

namespace {

void check_conv_operands(const Shape& x, const Shape& k, const char* what) {
    require_rank(x, 4, what);
    require_rank(k, 5, what);
    if (x[3] != k[3]) {
        throw DimensionError(std::string(what) + ": input channels of " + shape_string(x) +
                             " do not match kernel " + shape_string(k));
    }
}

void check_depthwise_operands(const Shape& x, const Shape& k, const char* what) {
    require_rank(x, 4, what);
    require_rank(k, 4, what);
    if (x[3] != k[3]) {
        throw DimensionError(std::string(what) + ": channels of " + shape_string(x) +
                             " do not match kernel " + shape_string(k));
    }
}

}  // namespace

namespace {

// Patch matrix of the convolution: one row per output position, one column per
// (kernel tap, input channel). Taps that fall into padding stay zero.
template <typename S>
std::vector<S> im2col(const S* x, const ConvGeometry& g, std::size_t cin) {
    const std::size_t taps = g.kernel.t * g.kernel.h * g.kernel.w;
    const std::size_t positions = g.out.t * g.out.h * g.out.w;
    std::vector<S> col(positions * taps * cin, S{0});
    for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t ki) {
        std::copy_n(x + ii * cin, cin, col.data() + (oi * taps + ki) * cin);
    });
    return col;
}

template <typename S>
void col2im_add(const std::vector<S>& col, const ConvGeometry& g, std::size_t cin, S* x) {
    const std::size_t taps = g.kernel.t * g.kernel.h * g.kernel.w;
    for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t ki) {
        const S* src = col.data() + (oi * taps + ki) * cin;
        S* dst = x + ii * cin;
        for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
    });
}

// Columns [j, j + NR) of c[m x n] += a[m x k] * b[k x n], one output row at a
// time with the row segment held in a local accumulator.
template <std::size_t NR, typename S>
void gemm_panel(const S* __restrict a, const S* __restrict b, S* __restrict c, std::size_t m, std::size_t k,
                std::size_t n, std::size_t j) {
    for (std::size_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * n + j;
        S acc[NR];
        for (std::size_t q = 0; q < NR; ++q) acc[q] = crow[q];
        for (std::size_t p = 0; p < k; ++p) {
            const S v = arow[p];
            const S* brow = b + p * n + j;
            for (std::size_t q = 0; q < NR; ++q) acc[q] += v * brow[q];
        }
        for (std::size_t q = 0; q < NR; ++q) crow[q] = acc[q];
    }
}

// c[m x n] += a[m x k] * b[k x n]
template <typename S>
void gemm_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n) {
    std::size_t j = 0;
    for (; j + 32 <= n; j += 32) gemm_panel<32>(a, b, c, m, k, n, j);
    for (; j + 16 <= n; j += 16) gemm_panel<16>(a, b, c, m, k, n, j);
    for (; j + 8 <= n; j += 8) gemm_panel<8>(a, b, c, m, k, n, j);
    for (; j < n; ++j) gemm_panel<1>(a, b, c, m, k, n, j);
}

// Columns [j, j + NR) of c[k x n] += a[m x k]^T * b[m x n], consuming MR rows of
// a and b per pass over c.
template <std::size_t NR, typename S>
void gemm_at_b_panel(const S* __restrict a, const S* __restrict b, S* __restrict c, std::size_t m,
                     std::size_t k, std::size_t n, std::size_t j) {
    constexpr std::size_t MR = 8;
    std::size_t i = 0;
    for (; i + MR <= m; i += MR) {
        for (std::size_t p = 0; p < k; ++p) {
            S* crow = c + p * n + j;
            S acc[NR];
            for (std::size_t q = 0; q < NR; ++q) acc[q] = crow[q];
            for (std::size_t r = 0; r < MR; ++r) {
                const S v = a[(i + r) * k + p];
                const S* brow = b + (i + r) * n + j;
                for (std::size_t q = 0; q < NR; ++q) acc[q] += v * brow[q];
            }
            for (std::size_t q = 0; q < NR; ++q) crow[q] = acc[q];
        }
    }
    for (; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const S v = a[i * k + p];
            const S* brow = b + i * n + j;
            S* crow = c + p * n + j;
            for (std::size_t q = 0; q < NR; ++q) crow[q] += v * brow[q];
        }
    }
}

// c[k x n] += a[m x k]^T * b[m x n]
template <typename S>
void gemm_at_b_acc(const S* a, const S* b, S* c, std::size_t m, std::size_t k, std::size_t n) {
    std::size_t j = 0;
    for (; j + 32 <= n; j += 32) gemm_at_b_panel<32>(a, b, c, m, k, n, j);
    for (; j + 16 <= n; j += 16) gemm_at_b_panel<16>(a, b, c, m, k, n, j);
    for (; j + 8 <= n; j += 8) gemm_at_b_panel<8>(a, b, c, m, k, n, j);
    for (; j < n; ++j) gemm_at_b_panel<1>(a, b, c, m, k, n, j);
}

}  // namespace

template <typename S>
Tensor<S> conv3d(const Tensor<S>& x, const Tensor<S>& kernel, Triple stride, Padding padding) {
    check_conv_operands(x.shape(), kernel.shape(), "conv3d");
    const ConvGeometry g = geometry_for(x.shape(), kernel.shape(), stride, padding);
    const std::size_t cin = x.dim(3), cout = kernel.dim(4);
    const std::size_t depth = g.kernel.t * g.kernel.h * g.kernel.w * cin;
    Tensor<S> out({g.out.t, g.out.h, g.out.w, cout});
    const std::vector<S> col = im2col(x.data().data(), g, cin);
    gemm_acc(col.data(), kernel.data().data(), out.data().data(), g.out.t * g.out.h * g.out.w, depth, cout);
    return out;
}

template <typename S>
Tensor<S> conv3d_backward_input(const Tensor<S>& grad, const Tensor<S>& kernel, const Shape& input_shape,
                                Triple stride, Padding padding) {
    check_conv_operands(input_shape, kernel.shape(), "conv3d_backward_input");
    const ConvGeometry g = geometry_for(input_shape, kernel.shape(), stride, padding);
    const std::size_t cin = input_shape[3], cout = kernel.dim(4);
    const std::size_t depth = g.kernel.t * g.kernel.h * g.kernel.w * cin;
    const std::size_t positions = g.out.t * g.out.h * g.out.w;
    // Kernel transposed to (Cout, tap * Cin) so the inner loop runs over contiguous columns.
    std::vector<S> kt(kernel.size());
    for (std::size_t r = 0; r < depth; ++r) {
        for (std::size_t co = 0; co < cout; ++co) kt[co * depth + r] = kernel[r * cout + co];
    }
    std::vector<S> col(positions * depth, S{0});
    gemm_acc(grad.data().data(), kt.data(), col.data(), positions, cout, depth);
    Tensor<S> out(input_shape);
    col2im_add(col, g, cin, out.data().data());
    return out;
}

template <typename S>
Tensor<S> conv3d_backward_kernel(const Tensor<S>& x, const Tensor<S>& grad, const Shape& kernel_shape,
                                 Triple stride, Padding padding) {
    check_conv_operands(x.shape(), kernel_shape, "conv3d_backward_kernel");
    const ConvGeometry g = geometry_for(x.shape(), kernel_shape, stride, padding);
    const std::size_t cin = x.dim(3), cout = kernel_shape[4];
    const std::size_t depth = g.kernel.t * g.kernel.h * g.kernel.w * cin;
    Tensor<S> out(kernel_shape);
    const std::vector<S> col = im2col(x.data().data(), g, cin);
    gemm_at_b_acc(col.data(), grad.data().data(), out.data().data(), g.out.t * g.out.h * g.out.w, depth, cout);
    return out;
}

template <typename S>
Tensor<S> depthwise_conv3d(const Tensor<S>& x, const Tensor<S>& kernel, Triple stride, Padding padding) {
    check_depthwise_operands(x.shape(), kernel.shape(), "depthwise_conv3d");
    const ConvGeometry g = geometry_for(x.shape(), kernel.shape(), stride, padding);
    const std::size_t c = x.dim(3);
    Tensor<S> out({g.out.t, g.out.h, g.out.w, c});
    const S* xd = x.data().data();
    const S* kd = kernel.data().data();
    S* od = out.data().data();
    for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t ki) {
        S* o = od + oi * c;
        const S* in = xd + ii * c;
        const S* k = kd + ki * c;
        for (std::size_t ch = 0; ch < c; ++ch) o[ch] += in[ch] * k[ch];
    });
    return out;
}

template <typename S>
Tensor<S> depthwise_conv3d_backward_input(const Tensor<S>& grad, const Tensor<S>& kernel,
                                          const Shape& input_shape, Triple stride, Padding padding) {
    check_depthwise_operands(input_shape, kernel.shape(), "depthwise_conv3d_backward_input");
    const ConvGeometry g = geometry_for(input_shape, kernel.shape(), stride, padding);
    const std::size_t c = input_shape[3];
    Tensor<S> out(input_shape);
    const S* gd = grad.data().data();
    const S* kd = kernel.data().data();
    S* od = out.data().data();
    for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t ki) {
        const S* go = gd + oi * c;
        S* gi = od + ii * c;
        const S* k = kd + ki * c;
        for (std::size_t ch = 0; ch < c; ++ch) gi[ch] += go[ch] * k[ch];
    });
    return out;
}

template <typename S>
Tensor<S> depthwise_conv3d_backward_kernel(const Tensor<S>& x, const Tensor<S>& grad,
                                           const Shape& kernel_shape, Triple stride, Padding padding) {
    check_depthwise_operands(x.shape(), kernel_shape, "depthwise_conv3d_backward_kernel");
    const ConvGeometry g = geometry_for(x.shape(), kernel_shape, stride, padding);
    const std::size_t c = x.dim(3);
    Tensor<S> out(kernel_shape);
    const S* xd = x.data().data();
    const S* gd = grad.data().data();
    S* od = out.data().data();
    for_each_tap(g, [&](std::size_t oi, std::size_t ii, std::size_t ki) {
        const S* go = gd + oi * c;
        const S* in = xd + ii * c;
        S* gk = od + ki * c;
        for (std::size_t ch = 0; ch < c; ++ch) gk[ch] += in[ch] * go[ch];
    });
    return out;
}

namespace {

void check_pool(const Shape& shape, Triple window) {
    require_rank(shape, 4, "avg_pool3d");
    if (window.t == 0 || window.h == 0 || window.w == 0 || shape[0] % window.t != 0 ||
        shape[1] % window.h != 0 || shape[2] % window.w != 0) {
        throw DimensionError("avg_pool3d: window does not tile input " + shape_string(shape));
    }
}

}  // namespace

template <typename S>
Tensor<S> avg_pool3d(const Tensor<S>& x, Triple window) {
    check_pool(x.shape(), window);
    const std::size_t t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    Tensor<S> out({t / window.t, h / window.h, w / window.w, c});
    const S inv = S{1} / static_cast<S>(window.t * window.h * window.w);
    const S* xd = x.data().data();
    S* od = out.data().data();
    for (std::size_t it = 0; it < t; ++it) {
        for (std::size_t ih = 0; ih < h; ++ih) {
            for (std::size_t iw = 0; iw < w; ++iw) {
                const std::size_t o =
                    ((it / window.t) * (h / window.h) + ih / window.h) * (w / window.w) + iw / window.w;
                const S* src = xd + ((it * h + ih) * w + iw) * c;
                S* dst = od + o * c;
                for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
            }
        }
    }
    for (S& v : out.data()) v *= inv;
    return out;
}

template <typename S>
Tensor<S> avg_pool3d_backward(const Tensor<S>& grad, const Shape& input_shape, Triple window) {
    check_pool(input_shape, window);
    const std::size_t t = input_shape[0], h = input_shape[1], w = input_shape[2], c = input_shape[3];
    Tensor<S> out(input_shape);
    const S inv = S{1} / static_cast<S>(window.t * window.h * window.w);
    const S* gd = grad.data().data();
    S* od = out.data().data();
    for (std::size_t it = 0; it < t; ++it) {
        for (std::size_t ih = 0; ih < h; ++ih) {
            for (std::size_t iw = 0; iw < w; ++iw) {
                const std::size_t o =
                    ((it / window.t) * (h / window.h) + ih / window.h) * (w / window.w) + iw / window.w;
                const S* src = gd + o * c;
                S* dst = od + ((it * h + ih) * w + iw) * c;
                for (std::size_t ch = 0; ch < c; ++ch) dst[ch] = src[ch] * inv;
            }
        }
    }
    return out;
}

template <typename S>
Tensor<S> diag(const Tensor<S>& v) {
    require_rank(v.shape(), 1, "diag");
    const std::size_t n = v.dim(0);
    Tensor<S> out({n, n});
    for (std::size_t i = 0; i < n; ++i) out[i * n + i] = v[i];
    return out;
}

template <typename S>
Tensor<S> diagonal(const Tensor<S>& m) {
    require_rank(m.shape(), 2, "diagonal");
    if (m.dim(0) != m.dim(1)) {
        throw DimensionError("diagonal: matrix " + shape_string(m.shape()) + " is not square");
    }
    const std::size_t n = m.dim(0);
    Tensor<S> out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = m[i * n + i];
    return out;
}

#define FEWFRAME_INSTANTIATE_OPS(S)                                                                   \
    template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                                    \
    template Tensor<S> permute(const Tensor<S>&, std::span<const std::size_t>);                      \
    template Tensor<S> softmax_cols(const Tensor<S>&);                                                \
    template Tensor<S> softmax_cols_backward(const Tensor<S>&, const Tensor<S>&);                     \
    template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                                       \
    template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                                       \
    template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                                       \
    template Tensor<S> scale(const Tensor<S>&, S);                                                    \
    template Tensor<S> relu(const Tensor<S>&);                                                        \
    template Tensor<S> relu_backward(const Tensor<S>&, const Tensor<S>&);                             \
    template Tensor<S> mean_over_axis(const Tensor<S>&, std::size_t);                                 \
    template Tensor<S> mean_over_axis_backward(const Tensor<S>&, const Shape&, std::size_t);          \
    template Tensor<S> max_over_axis(const Tensor<S>&, std::size_t);                                  \
    template Tensor<S> max_over_axis_backward(const Tensor<S>&, const Tensor<S>&, std::size_t);       \
    template Tensor<S> sum(const Tensor<S>&);                                                         \
    template Tensor<S> add_bias(const Tensor<S>&, const Tensor<S>&);                                  \
    template Tensor<S> bias_backward(const Tensor<S>&);                                               \
    template Tensor<S> conv3d(const Tensor<S>&, const Tensor<S>&, Triple, Padding);                   \
    template Tensor<S> conv3d_backward_input(const Tensor<S>&, const Tensor<S>&, const Shape&, Triple, \
                                             Padding);                                                \
    template Tensor<S> conv3d_backward_kernel(const Tensor<S>&, const Tensor<S>&, const Shape&,       \
                                              Triple, Padding);                                       \
    template Tensor<S> depthwise_conv3d(const Tensor<S>&, const Tensor<S>&, Triple, Padding);         \
    template Tensor<S> depthwise_conv3d_backward_input(const Tensor<S>&, const Tensor<S>&,            \
                                                       const Shape&, Triple, Padding);                \
    template Tensor<S> depthwise_conv3d_backward_kernel(const Tensor<S>&, const Tensor<S>&,           \
                                                        const Shape&, Triple, Padding);               \
    template Tensor<S> avg_pool3d(const Tensor<S>&, Triple);                                          \
    template Tensor<S> avg_pool3d_backward(const Tensor<S>&, const Shape&, Triple);                   \
    template Tensor<S> diag(const Tensor<S>&);                                                        \
    template Tensor<S> diagonal(const Tensor<S>&);

FEWFRAME_INSTANTIATE_OPS(float)
FEWFRAME_INSTANTIATE_OPS(double)

#undef FEWFRAME_INSTANTIATE_OPS

}  // namespace fewframe::ops
