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

#include <cmath>
#include <string>
#include <vector>

#include "siesef/autodiff.hpp"
#include "siesef/random.hpp"
#include "siesef/tensor.hpp"

namespace siesef::nn {

enum class Activation { kIdentity, kLeakyRelu };

inline constexpr double kDefaultLeakySlope = 0.2;

// Fully connected layer applied identically to every row of its input
// (the "shared MLP" of point networks): out = act(x * W + b).
template <class T>
struct MlpLayer {
  Parameter<T> weights;  // [d_in x d_out]
  Parameter<T> bias;     // [d_out]
  Activation activation = Activation::kLeakyRelu;
  T slope = static_cast<T>(kDefaultLeakySlope);

  std::size_t in_features() const { return weights.value.dim(0); }
  std::size_t out_features() const { return weights.value.dim(1); }

  template <class U>
  MlpLayer<U> cast() const {
    return MlpLayer<U>{weights.template cast<U>(), bias.template cast<U>(),
                       activation, static_cast<U>(slope)};
  }
};

// He-uniform weights (limit sqrt(6 / fan_in)), zero bias.
template <class T>
MlpLayer<T> make_layer(const std::string& name, std::size_t d_in,
                       std::size_t d_out, Activation activation, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(d_in));
  BasicTensor<T> w(Shape{d_in, d_out});
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-limit, limit));
  return MlpLayer<T>{Parameter<T>(name + ".weight", std::move(w)),
                     Parameter<T>(name + ".bias", BasicTensor<T>(Shape{d_out})),
                     activation, static_cast<T>(kDefaultLeakySlope)};
}

// Layer whose weights are the d x d identity and bias zero.
template <class T>
MlpLayer<T> identity_layer(const std::string& name, std::size_t d,
                           Activation activation = Activation::kIdentity) {
  BasicTensor<T> w(Shape{d, d});
  for (std::size_t i = 0; i < d; ++i) w(i, i) = T{1};
  return MlpLayer<T>{Parameter<T>(name + ".weight", std::move(w)),
                     Parameter<T>(name + ".bias", BasicTensor<T>(Shape{d})),
                     activation, static_cast<T>(kDefaultLeakySlope)};
}

template <class T>
Var<T> apply(MlpLayer<T>& layer, const Var<T>& x) {
  Graph<T>& g = *x.graph();
  if (x.value().cols() != layer.in_features()) {
    throw ShapeError("mlp input " + to_string(x.shape()) +
                     " does not match weights " +
                     to_string(layer.weights.value.shape()));
  }
  Var<T> y = add_bias(matmul(x, g.parameter(layer.weights)), g.parameter(layer.bias));
  if (layer.activation == Activation::kLeakyRelu) y = leaky_relu(y, layer.slope);
  return y;
}

template <class T>
Var<T> apply(std::vector<MlpLayer<T>>& stack, Var<T> x) {
  for (auto& layer : stack) x = apply(layer, x);
  return x;
}

// Tape-free evaluation for inference and tests.
template <class T>
BasicTensor<T> mlp_forward(const MlpLayer<T>& layer, const BasicTensor<T>& x) {
  if (x.rank() == 0 || x.cols() != layer.in_features()) {
    throw ShapeError("mlp input " + to_string(x.shape()) +
                     " does not match weights " +
                     to_string(layer.weights.value.shape()));
  }
  BasicTensor<T> y = matmul_last(x, layer.weights.value);
  const std::size_t cols = y.cols();
  for (std::size_t i = 0; i < y.size(); ++i) {
    T v = y[i] + layer.bias.value[i % cols];
    if (layer.activation == Activation::kLeakyRelu && v <= T{0}) v *= layer.slope;
    y[i] = v;
  }
  return y;
}

template <class T>
void collect(std::vector<Parameter<T>*>& out, MlpLayer<T>& layer) {
  out.push_back(&layer.weights);
  out.push_back(&layer.bias);
}

template <class T>
void collect(std::vector<Parameter<T>*>& out, std::vector<MlpLayer<T>>& stack) {
  for (auto& l : stack) collect(out, l);
}

}  // namespace siesef::nn
