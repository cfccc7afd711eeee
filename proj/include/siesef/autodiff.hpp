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

#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "siesef/error.hpp"
#include "siesef/tensor.hpp"

// Reverse-mode automatic differentiation over an explicit op tape.
//
// A Graph records every op applied during one forward pass. Values are
// immutable once recorded; Graph::backward walks the tape in reverse and
// accumulates gradients into the recorded inputs and, for parameter leaves,
// into Parameter::grad.
namespace siesef::nn {

template <class T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, BasicTensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = BasicTensor<T>(value.shape()); }

  template <class U>
  Parameter<U> cast() const {
    return Parameter<U>(name, value.template cast<U>());
  }
};

// Branch choices of the piecewise ops (leaky ReLU sign masks, max argmax) in
// recording order. A graph replaying a pattern evaluates every piecewise op
// with the recorded branch, which makes the forward pass a smooth function of
// its inputs around the recording point; finite differences with a step that
// would otherwise cross kinks then measure the same derivative the backward
// pass computes.
struct PiecewisePattern {
  std::vector<std::vector<std::uint32_t>> choices;
};

template <class T>
class Graph;

template <class T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  const BasicTensor<T>& value() const { return graph_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  Graph<T>* graph() const noexcept { return graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

template <class T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that never receives a gradient.
  Var<T> constant(BasicTensor<T> value) {
    return push(std::move(value), false, nullptr, "constant");
  }

  // Leaf whose gradient is kept and readable through grad_of().
  Var<T> input(BasicTensor<T> value) {
    return push(std::move(value), true, nullptr, "input");
  }

  // Leaf bound to a parameter; backward() adds into param.grad.
  Var<T> parameter(Parameter<T>& param) {
    Var<T> v = push(param.value, true, nullptr, param.name.c_str());
    nodes_[v.id()].param = &param;
    return v;
  }

  // Records an op output. `inputs` determine whether it needs a gradient.
  Var<T> record(BasicTensor<T> value, std::initializer_list<std::size_t> inputs,
                Backward backward, const char* op) {
    bool needs = false;
    for (auto id : inputs) needs = needs || nodes_.at(id).requires_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr,
                op);
  }

  Var<T> record(BasicTensor<T> value, const std::vector<std::size_t>& inputs,
                Backward backward, const char* op) {
    bool needs = false;
    for (auto id : inputs) needs = needs || nodes_.at(id).requires_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr,
                op);
  }

  const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of node `id`, allocated (zero) on first access.
  BasicTensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty()) n.grad = BasicTensor<T>(n.value.shape());
    return n.grad;
  }

  // Adds `delta[i]` into the gradient of `id` when it requires one.
  template <class F>
  void accumulate(std::size_t id, F&& delta_at) {
    if (!requires_grad(id)) return;
    BasicTensor<T>& g = grad(id);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta_at(i);
  }

  void backward(const Var<T>& loss) {
    if (nodes_.empty() || loss.graph() != this || loss.id() >= nodes_.size()) {
      throw StateError("backward called without a recorded forward pass");
    }
    if (backward_done_) throw StateError("backward already ran on this graph");
    if (value(loss.id()).size() != 1) {
      throw ShapeError("backward requires a scalar loss, got " +
                       to_string(value(loss.id()).shape()));
    }
    backward_done_ = true;
    grad(loss.id())[0] = T{1};
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.empty()) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param != nullptr) {
        BasicTensor<T>& pg = n.param->grad;
        if (pg.shape() != n.value.shape()) pg = BasicTensor<T>(n.value.shape());
        for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += nodes_[id].grad[i];
      }
    }
  }

  // Gradient of an input leaf after backward(); zeros when unreached.
  BasicTensor<T> grad_of(const Var<T>& v) {
    if (!backward_done_) throw StateError("grad_of before backward");
    return grad(v.id());
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  void record_pattern(PiecewisePattern* pattern) {
    pattern->choices.clear();
    recording_ = pattern;
    replaying_ = nullptr;
  }

  void replay_pattern(const PiecewisePattern* pattern) {
    replaying_ = pattern;
    recording_ = nullptr;
    cursor_ = 0;
  }

  // Branch choices for the next piecewise op: computed by `choose` unless a
  // pattern is being replayed.
  template <class F>
  std::vector<std::uint32_t> piecewise_choice(std::size_t count, F&& choose) {
    if (replaying_ != nullptr) {
      if (cursor_ >= replaying_->choices.size() || replaying_->choices[cursor_].size() != count) {
        throw StateError("piecewise pattern does not match the replayed forward pass");
      }
      return replaying_->choices[cursor_++];
    }
    std::vector<std::uint32_t> c = choose();
    if (recording_ != nullptr) recording_->choices.push_back(c);
    return c;
  }

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    Backward backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };

  Var<T> push(BasicTensor<T> value, bool requires_grad, Backward backward,
              const char* op) {
    if (!value.all_finite()) {
      throw NumericError(std::string("non-finite values produced by '") + op +
                         "' with shape " + to_string(value.shape()));
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
  PiecewisePattern* recording_ = nullptr;
  const PiecewisePattern* replaying_ = nullptr;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Differentiable ops.

template <class T>
Var<T> matmul(const Var<T>& x, const Var<T>& w) {
  Graph<T>& g = *x.graph();
  BasicTensor<T> out = matmul_last(x.value(), w.value());
  const std::size_t xi = x.id(), wi = w.id();
  return g.record(std::move(out), {xi, wi},
      [xi, wi](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        const BasicTensor<T>& xv = gr.value(xi);
        const BasicTensor<T>& wv = gr.value(wi);
        const std::size_t rows = xv.rows(), din = wv.dim(0), dout = wv.dim(1);
        if (gr.requires_grad(xi)) {
          BasicTensor<T>& dx = gr.grad(xi);
          for (std::size_t r = 0; r < rows; ++r) {
            const T* dyr = dy.data().data() + r * dout;
            T* dxr = dx.data().data() + r * din;
            for (std::size_t i = 0; i < din; ++i) {
              const T* wr = wv.data().data() + i * dout;
              T acc{0};
              for (std::size_t j = 0; j < dout; ++j) acc += dyr[j] * wr[j];
              dxr[i] += acc;
            }
          }
        }
        if (gr.requires_grad(wi)) {
          BasicTensor<T>& dw = gr.grad(wi);
          for (std::size_t r = 0; r < rows; ++r) {
            const T* dyr = dy.data().data() + r * dout;
            const T* xr = xv.data().data() + r * din;
            for (std::size_t i = 0; i < din; ++i) {
              const T xv_i = xr[i];
              if (xv_i == T{0}) continue;
              T* dwr = dw.data().data() + i * dout;
              for (std::size_t j = 0; j < dout; ++j) dwr[j] += xv_i * dyr[j];
            }
          }
        }
      },
      "matmul");
}

template <class T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
  const BasicTensor<T>& xv = x.value();
  const BasicTensor<T>& bv = b.value();
  if (bv.size() != xv.cols()) {
    throw ShapeError("bias width " + to_string(bv.shape()) +
                     " does not match input " + to_string(xv.shape()));
  }
  BasicTensor<T> out = xv;
  const std::size_t cols = xv.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % cols];
  const std::size_t xi = x.id(), bi = b.id();
  return x.graph()->record(std::move(out), {xi, bi},
      [xi, bi, cols](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        gr.accumulate(xi, [&](std::size_t i) { return dy[i]; });
        if (gr.requires_grad(bi)) {
          BasicTensor<T>& db = gr.grad(bi);
          for (std::size_t i = 0; i < dy.size(); ++i) db[i % cols] += dy[i];
        }
      },
      "add_bias");
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, std::type_identity_t<T> slope) {
  const BasicTensor<T>& xv = x.value();
  std::vector<std::uint32_t> positive = x.graph()->piecewise_choice(xv.size(), [&] {
    std::vector<std::uint32_t> m(xv.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = xv[i] > T{0} ? 1u : 0u;
    return m;
  });
  BasicTensor<T> out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!positive[i]) out[i] *= slope;
  }
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi, slope, positive = std::move(positive)](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        gr.accumulate(xi, [&](std::size_t i) { return positive[i] ? dy[i] : dy[i] * slope; });
      },
      "leaky_relu");
}

namespace detail {

template <class T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + " shape mismatch: " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  }
}

}  // namespace detail

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "add");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph()->record(std::move(out), {ai, bi},
      [ai, bi](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        gr.accumulate(ai, [&](std::size_t i) { return dy[i]; });
        gr.accumulate(bi, [&](std::size_t i) { return dy[i]; });
      },
      "add");
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "sub");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph()->record(std::move(out), {ai, bi},
      [ai, bi](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        gr.accumulate(ai, [&](std::size_t i) { return dy[i]; });
        gr.accumulate(bi, [&](std::size_t i) { return -dy[i]; });
      },
      "sub");
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "mul");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph()->record(std::move(out), {ai, bi},
      [ai, bi](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        const BasicTensor<T>& av = gr.value(ai);
        const BasicTensor<T>& bv = gr.value(bi);
        gr.accumulate(ai, [&](std::size_t i) { return dy[i] * bv[i]; });
        gr.accumulate(bi, [&](std::size_t i) { return dy[i] * av[i]; });
      },
      "mul");
}

template <class T>
Var<T> scale(const Var<T>& x, std::type_identity_t<T> factor) {
  BasicTensor<T> out = x.value();
  for (auto& v : out.data()) v *= factor;
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi, factor](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        gr.accumulate(xi, [&](std::size_t i) { return dy[i] * factor; });
      },
      "scale");
}

template <class T>
Var<T> concat(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  std::vector<const BasicTensor<T>*> ptrs;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    ptrs.push_back(&p.value());
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
  }
  BasicTensor<T> out = concat_last<T>(std::span<const BasicTensor<T>* const>(ptrs));
  const std::size_t total = out.cols();
  return parts[0].graph()->record(std::move(out), ids,
      [ids, widths, total](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        const std::size_t rows = dy.size() / total;
        std::size_t col = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          const std::size_t w = widths[p];
          if (gr.requires_grad(ids[p])) {
            BasicTensor<T>& dx = gr.grad(ids[p]);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < w; ++c) {
                dx[r * w + c] += dy[r * total + col + c];
              }
            }
          }
          col += w;
        }
      },
      "concat");
}

template <class T>
Var<T> softmax(const Var<T>& x, std::size_t axis) {
  BasicTensor<T> out = siesef::softmax(x.value(), axis);
  const AxisSplit s = split_at_axis(x.shape(), axis);
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi, s](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        const BasicTensor<T>& yv = gr.value(self);
        BasicTensor<T>& dx = gr.grad(xi);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.length * s.inner + in;
            T dot{0};
            for (std::size_t k = 0; k < s.length; ++k) {
              dot += dy[base + k * s.inner] * yv[base + k * s.inner];
            }
            for (std::size_t k = 0; k < s.length; ++k) {
              const std::size_t i = base + k * s.inner;
              dx[i] += yv[i] * (dy[i] - dot);
            }
          }
        }
      },
      "softmax");
}

template <class T>
Var<T> sum(const Var<T>& x, std::size_t axis) {
  const AxisSplit s = split_at_axis(x.shape(), axis);
  BasicTensor<T> out(remove_axis(x.shape(), axis));
  const BasicTensor<T>& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.length; ++k) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        out[o * s.inner + in] += xv[(o * s.length + k) * s.inner + in];
      }
    }
  }
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi, s](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        BasicTensor<T>& dx = gr.grad(xi);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t k = 0; k < s.length; ++k) {
            for (std::size_t in = 0; in < s.inner; ++in) {
              dx[(o * s.length + k) * s.inner + in] += dy[o * s.inner + in];
            }
          }
        }
      },
      "sum");
}

// Max along `axis`; the gradient flows to the first maximal element.
template <class T>
Var<T> max(const Var<T>& x, std::size_t axis) {
  const AxisSplit s = split_at_axis(x.shape(), axis);
  BasicTensor<T> out(remove_axis(x.shape(), axis));
  const BasicTensor<T>& xv = x.value();
  std::vector<std::uint32_t> arg = x.graph()->piecewise_choice(s.outer * s.inner, [&] {
    std::vector<std::uint32_t> a(s.outer * s.inner, 0);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.length * s.inner + in;
        std::uint32_t best = 0;
        for (std::size_t k = 1; k < s.length; ++k) {
          if (xv[base + k * s.inner] > xv[base + best * s.inner]) best = static_cast<std::uint32_t>(k);
        }
        a[o * s.inner + in] = best;
      }
    }
    return a;
  });
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      out[o * s.inner + in] = xv[o * s.length * s.inner + in + arg[o * s.inner + in] * s.inner];
    }
  }
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi, s, arg = std::move(arg)](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        BasicTensor<T>& dx = gr.grad(xi);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t j = o * s.inner + in;
            dx[o * s.length * s.inner + in + arg[j] * s.inner] += dy[j];
          }
        }
      },
      "max");
}

// Row gather: x is [M x ...]; result is lead_shape + x.shape()[1:], with
// out row r = x row ids[r]. Used for neighbor grouping and resampling.
template <class T>
Var<T> gather_rows(const Var<T>& x, std::vector<std::uint32_t> ids, Shape lead_shape) {
  const BasicTensor<T>& xv = x.value();
  if (xv.rank() == 0) throw ShapeError("gather from a null tensor");
  if (shape_size(lead_shape) != ids.size()) {
    throw ShapeError("gather index count " + std::to_string(ids.size()) +
                     " does not match " + to_string(lead_shape));
  }
  const std::size_t m = xv.dim(0);
  const std::size_t width = xv.size() / m;
  Shape shape = lead_shape;
  shape.insert(shape.end(), xv.shape().begin() + 1, xv.shape().end());
  BasicTensor<T> out(std::move(shape));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= m) {
      throw ShapeError("gather index " + std::to_string(ids[r]) +
                       " out of range for " + std::to_string(m) + " rows");
    }
    std::copy_n(xv.data().data() + ids[r] * width, width,
                out.data().data() + r * width);
  }
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi, width, ids = std::move(ids)](Graph<T>& gr, std::size_t self) {
        const BasicTensor<T>& dy = gr.grad(self);
        BasicTensor<T>& dx = gr.grad(xi);
        for (std::size_t r = 0; r < ids.size(); ++r) {
          T* dst = dx.data().data() + ids[r] * width;
          const T* src = dy.data().data() + r * width;
          for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
        }
      },
      "gather_rows");
}

template <class T>
Var<T> sum_all(const Var<T>& x) {
  double total = 0.0;
  for (T v : x.value().data()) total += static_cast<double>(v);
  BasicTensor<T> out(Shape{1}, {static_cast<T>(total)});
  const std::size_t xi = x.id();
  return x.graph()->record(std::move(out), {xi},
      [xi](Graph<T>& gr, std::size_t self) {
        const T d = gr.grad(self)[0];
        gr.accumulate(xi, [d](std::size_t) { return d; });
      },
      "sum_all");
}

}  // namespace siesef::nn
