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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fewframe/errors.hpp"

namespace fewframe {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ')';
    return os.str();
}

/// Row-major strides (last axis fastest).
inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) {
        strides[i - 1] = strides[i] * shape[i];
    }
    return strides;
}

/// Dense N-dimensional array of S (float or double), row-major.
///
/// A default-constructed tensor is the rank-0 scalar 0. Every extent must be
/// positive, so `size() == product(shape)` always holds.
template <typename S>
class Tensor {
    static_assert(std::is_floating_point_v<S>);

  public:
    using value_type = S;

    Tensor() : data_(1, S{0}) {}

    explicit Tensor(Shape shape) : shape_(std::move(shape)) {
        validate_extents();
        data_.assign(shape_size(shape_), S{0});
    }

    Tensor(Shape shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_extents();
        if (data_.size() != shape_size(shape_)) {
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, S value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    static Tensor scalar(S value) { return Tensor(Shape{}, std::vector<S>{value}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const S> data() const noexcept { return data_; }
    std::span<S> data() noexcept { return data_; }
    const std::vector<S>& vector() const noexcept { return data_; }

    S operator[](std::size_t i) const { return data_[i]; }
    S& operator[](std::size_t i) { return data_[i]; }

    /// Element access by multi-index.
    S at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }
    S& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }

    /// Same data, new shape of equal element count.
    Tensor reshaped(Shape shape) const& {
        Tensor out(*this);
        out.reshape_in_place(std::move(shape));
        return out;
    }
    Tensor reshaped(Shape shape) && {
        reshape_in_place(std::move(shape));
        return std::move(*this);
    }

    template <typename D>
    Tensor<D> cast() const {
        std::vector<D> out(data_.begin(), data_.end());
        return Tensor<D>(shape_, std::move(out));
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](S v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

  private:
    void validate_extents() const {
        for (std::size_t e : shape_) {
            if (e == 0) {
                throw DimensionError("tensor extents must be positive, got " + shape_string(shape_));
            }
        }
    }

    void reshape_in_place(Shape shape) {
        for (std::size_t e : shape) {
            if (e == 0) {
                throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
            }
        }
        if (shape_size(shape) != data_.size()) {
            throw DimensionError("cannot reshape " + shape_string(shape_) + " to " +
                                 shape_string(shape));
        }
        shape_ = std::move(shape);
    }

    std::size_t offset(std::initializer_list<std::size_t> index) const {
        if (index.size() != shape_.size()) {
            throw DimensionError("index rank " + std::to_string(index.size()) +
                                 " does not match tensor shape " + shape_string(shape_));
        }
        std::size_t off = 0;
        std::size_t axis = 0;
        for (std::size_t i : index) {
            if (i >= shape_[axis]) {
                throw DimensionError("index out of range for shape " + shape_string(shape_));
            }
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    Shape shape_;
    std::vector<S> data_;
};

}  // namespace fewframe
