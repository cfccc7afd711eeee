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
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "siesef/autodiff.hpp"
#include "siesef/error.hpp"
#include "siesef/point_cloud.hpp"

namespace siesef::net {

inline constexpr double kLogClamp = 1e-12;

// L = -(1/N) sum_i w[y_i] log(softmax(logits_i)[y_i]) over points whose label
// is not kIgnoreLabel; N counts those points only. The log-probability is
// clamped at log(1e-12) in the value; the gradient is that of the unclamped
// loss, so confidently wrong rows keep pulling the logits back.
template <class T>
nn::Var<T> weighted_cross_entropy(const nn::Var<T>& logits, std::span<const std::int32_t> labels,
                                  std::span<const float> class_weights) {
  const BasicTensor<T>& z = logits.value();
  if (z.rank() != 2) throw ShapeError("logits must be [N x C], got " + siesef::to_string(z.shape()));
  const std::size_t n = z.dim(0), c = z.dim(1);
  if (labels.size() != n) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(n) + " logit rows");
  }
  if (class_weights.size() != c) {
    throw ConfigError("class weight count " + std::to_string(class_weights.size()) +
                      " does not match " + std::to_string(c) + " classes");
  }
  for (float w : class_weights) {
    if (!(w > 0.0f) || !std::isfinite(w)) throw ConfigError("class weights must be positive");
  }
  std::size_t counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = labels[i];
    if (y == kIgnoreLabel) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw DataError("label " + std::to_string(y) + " at point " + std::to_string(i) +
                      " outside [0, " + std::to_string(c) + ")");
    }
    ++counted;
  }
  if (counted == 0) throw DataError("cross entropy over zero labeled points");

  BasicTensor<T> grad(z.shape());
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(counted);
  std::vector<double> p(c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = labels[i];
    if (y == kIgnoreLabel) continue;
    double peak = static_cast<double>(z(i, 0));
    for (std::size_t j = 1; j < c; ++j) peak = std::max(peak, static_cast<double>(z(i, j)));
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(static_cast<double>(z(i, j)) - peak);
      total += p[j];
    }
    const auto yi = static_cast<std::size_t>(y);
    const double log_py = static_cast<double>(z(i, yi)) - peak - std::log(total);
    const double w = class_weights[yi];
    loss -= w * std::max(log_py, std::log(kLogClamp)) * inv_n;
    for (std::size_t j = 0; j < c; ++j) {
      const double target = j == yi ? 1.0 : 0.0;
      grad(i, j) = static_cast<T>(w * inv_n * (p[j] / total - target));
    }
  }
  const std::size_t zi = logits.id();
  return logits.graph()->record(BasicTensor<T>(Shape{1}, {static_cast<T>(loss)}), {zi},
      [zi, grad = std::move(grad)](nn::Graph<T>& g, std::size_t self) {
        const T d = g.grad(self)[0];
        g.accumulate(zi, [&](std::size_t i) { return d * grad[i]; });
      },
      "weighted_cross_entropy");
}

template <class T>
double weighted_cross_entropy(const BasicTensor<T>& logits, std::span<const std::int32_t> labels,
                              std::span<const float> class_weights) {
  nn::Graph<T> g;
  return static_cast<double>(weighted_cross_entropy(g.constant(logits), labels, class_weights).value()[0]);
}

// Inverse square root of class frequency, normalized to mean 1. Classes with
// no labeled point are treated as having one.
inline std::vector<float> class_weights_from_labels(std::span<const std::int32_t> labels,
                                                    int num_classes) {
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  double total = 0.0;
  for (auto y : labels) {
    if (y == kIgnoreLabel) continue;
    if (y < 0 || y >= num_classes) throw DataError("label " + std::to_string(y) + " out of range");
    counts[static_cast<std::size_t>(y)] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) return std::vector<float>(static_cast<std::size_t>(num_classes), 1.0f);
  std::vector<double> w(counts.size());
  double mean = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = 1.0 / std::sqrt(std::max(counts[j], 1.0) / total);
    mean += w[j];
  }
  mean /= static_cast<double>(w.size());
  std::vector<float> out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = static_cast<float>(w[j] / mean);
  return out;
}

}  // namespace siesef::net
