// Copyright 2026 The siesef Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "siesef/error.hpp"

namespace siesef {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major array. Rank 0 (no dims, no data) is the "null" tensor;
// every other tensor has strictly positive dimensions.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  BasicTensor(Shape shape, std::initializer_list<T> data)
      : BasicTensor(std::move(shape), std::vector<T>(data)) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
      throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                       to_string(shape_));
    }
    return shape_[axis];
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // Row-major element access; the number of indices must equal rank().
  template <class... I>
  T& operator()(I... idx) noexcept {
    return data_[offset(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const noexcept {
    return data_[offset(idx...)];
  }

  // Size of the trailing dimension, with everything before it flattened.
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  BasicTensor reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
  }

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    if (shape_.empty()) return {};
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  static std::size_t checked_size(const Shape& shape) {
    for (auto d : shape) {
      if (d == 0) throw ShapeError("zero-sized dimension in " + to_string(shape));
    }
    return shape.empty() ? 0 : shape_size(shape);
  }

  template <class... I>
  std::size_t offset(I... idx) const noexcept {
    std::size_t off = 0;
    std::size_t axis = 0;
    ((off = off * shape_[axis++] + static_cast<std::size_t>(idx)), ...);
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

// A tensor viewed as [outer, axis, inner] around one axis.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

inline AxisSplit split_at_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " invalid for shape " +
                     to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

inline Shape remove_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

namespace testing {

// Fault injection for the `verify` negative control. Never set outside tests.
enum class Mutation { kNone, kSoftmax };

inline std::atomic<Mutation>& active_mutation() {
  static std::atomic<Mutation> mutation{Mutation::kNone};
  return mutation;
}

}  // namespace testing

// Numerically stable softmax along `axis` (max-subtracted).
template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& x, std::size_t axis) {
  if (x.empty()) throw ShapeError("softmax of an empty tensor");
  const AxisSplit s = split_at_axis(x.shape(), axis);
  BasicTensor<T> out(x.shape());
  const bool corrupt =
      testing::active_mutation().load() == testing::Mutation::kSoftmax;
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      T peak = x[base];
      for (std::size_t k = 1; k < s.length; ++k) {
        peak = std::max(peak, x[base + k * s.inner]);
      }
      double total = 0.0;
      for (std::size_t k = 0; k < s.length; ++k) {
        const T e = std::exp(x[base + k * s.inner] - peak);
        out[base + k * s.inner] = e;
        total += static_cast<double>(e);
      }
      const T scale = static_cast<T>((corrupt ? 1.01 : 1.0) / total);
      for (std::size_t k = 0; k < s.length; ++k) out[base + k * s.inner] *= scale;
    }
  }
  return out;
}

// x[..., d_in] * w[d_in, d_out] -> [..., d_out]
template <class T>
BasicTensor<T> matmul_last(const BasicTensor<T>& x, const BasicTensor<T>& w) {
  if (w.rank() != 2 || x.rank() == 0 || x.cols() != w.dim(0)) {
    throw ShapeError("matmul shape mismatch: input " + to_string(x.shape()) +
                     " vs weights " + to_string(w.shape()));
  }
  const std::size_t rows = x.rows();
  const std::size_t din = w.dim(0);
  const std::size_t dout = w.dim(1);
  Shape shape = x.shape();
  shape.back() = dout;
  BasicTensor<T> out(std::move(shape));
  const T* xp = x.data().data();
  const T* wp = w.data().data();
  T* op = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    T* orow = op + r * dout;
    const T* xrow = xp + r * din;
    for (std::size_t i = 0; i < din; ++i) {
      const T xv = xrow[i];
      if (xv == T{0}) continue;
      const T* wrow = wp + i * dout;
      for (std::size_t j = 0; j < dout; ++j) orow[j] += xv * wrow[j];
    }
  }
  return out;
}

// Concatenate along the trailing axis; leading shapes must agree.
template <class T>
BasicTensor<T> concat_last(std::span<const BasicTensor<T>* const> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Shape lead = parts[0]->shape();
  lead.pop_back();
  std::size_t width = 0;
  for (const auto* p : parts) {
    Shape l = p->shape();
    l.pop_back();
    if (l != lead) {
      throw ShapeError("concat leading shape mismatch: " +
                       to_string(parts[0]->shape()) + " vs " +
                       to_string(p->shape()));
    }
    width += p->cols();
  }
  Shape shape = lead;
  shape.push_back(width);
  BasicTensor<T> out(std::move(shape));
  const std::size_t rows = out.rows();
  std::size_t col = 0;
  for (const auto* p : parts) {
    const std::size_t c = p->cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p->data().data() + r * c, c, out.data().data() + r * width + col);
    }
    col += c;
  }
  return out;
}

template <class T>
BasicTensor<T> concat_last(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const BasicTensor<T>* parts[] = {&a, &b};
  return concat_last<T>(std::span<const BasicTensor<T>* const>(parts));
}

}  // namespace siesef
