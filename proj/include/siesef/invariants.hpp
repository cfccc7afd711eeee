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
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "siesef/gradcheck.hpp"
#include "siesef/loss.hpp"
#include "siesef/network.hpp"
#include "siesef/optim.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/random.hpp"

// Harness pieces shared by the verify command and the test suites:
// consistent permutations and translations of clouds together with their
// sampling hierarchies, and an end-to-end gradient check of the network.
namespace siesef::checks {

inline std::vector<std::uint32_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0u);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

inline std::vector<std::uint32_t> inverse_permutation(std::span<const std::uint32_t> perm) {
  std::vector<std::uint32_t> inv(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) inv[perm[j]] = static_cast<std::uint32_t>(j);
  return inv;
}

// Row j of the result is row perm[j] of `cloud`.
inline PointCloud permute_cloud(const PointCloud& cloud, std::span<const std::uint32_t> perm) {
  return cloud.subset(perm);
}

// Kept-id sets for the permuted cloud that select the same points, in the
// same order, as `kept` does for the original. Only the finest level moves;
// coarser clouds come out identical.
inline std::vector<std::vector<std::uint32_t>> permute_kept_sets(
    std::vector<std::vector<std::uint32_t>> kept, std::span<const std::uint32_t> perm) {
  if (kept.empty()) return kept;
  const auto inv = inverse_permutation(perm);
  for (auto& id : kept.front()) id = inv[id];
  return kept;
}

// Every point moved by `offset`, computed in double, then re-centered on its
// centroid as a loader of georeferenced data would.
inline PointCloud translated_recentered(const PointCloud& cloud, const std::array<double, 3>& offset) {
  std::vector<std::array<double, 3>> world(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    for (int a = 0; a < 3; ++a) world[i][a] = static_cast<double>(p[a]) + offset[a];
  }
  return recentered_cloud(world, cloud.labels);
}

inline PointCloud rotated_about_z(const PointCloud& cloud, double angle) {
  PointCloud out = cloud;
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    out.positions[3 * i] = static_cast<float>(c * p[0] - s * p[1]);
    out.positions[3 * i + 1] = static_cast<float>(s * p[0] + c * p[1]);
  }
  return out;
}

inline PointCloud random_cloud(std::size_t n, Rng& rng, double extent = 1.0, int num_classes = 0) {
  std::vector<std::array<float, 3>> pts(n);
  std::vector<std::int32_t> labels;
  for (auto& p : pts) {
    for (auto& v : p) v = static_cast<float>(rng.uniform(-extent, extent));
  }
  if (num_classes > 0) {
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<std::int32_t>(rng.below(num_classes)));
  }
  return make_cloud(pts, std::move(labels));
}

template <class T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

struct NetworkGradientCheck {
  nn::GradientCheckReport report;
  std::size_t parameters = 0;
};

// Analytic gradients of the weighted loss of the full network against
// central differences, in double. With `freeze_pattern`, every perturbed
// evaluation reuses the leaky-ReLU masks and max-pooling winners of the
// unperturbed pass, so a step that would carry an input across a kink
// measures the slope of the piece the analytic gradient belongs to.
inline NetworkGradientCheck network_gradient_check(const net::ModelConfig& config,
                                                   const PointCloud& cloud, std::uint64_t seed,
                                                   std::span<const float> class_weights,
                                                   nn::GradientCheckOptions options = {},
                                                   bool freeze_pattern = true) {
  const net::Hierarchy h = net::build_hierarchy(cloud, config, seed);
  net::Network<double> model = net::make_network<float>(config).cast<double>();
  auto params = model.parameters();
  nn::PiecewisePattern pattern;
  {
    nn::Graph<double> g;
    g.record_pattern(&pattern);
    const auto loss = net::weighted_cross_entropy(net::network_forward(g, model, h), cloud.labels,
                                                  class_weights);
    nn::zero_grad<double>(params);
    g.backward(loss);
  }
  std::vector<BasicTensor<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  auto loss = [&] {
    nn::Graph<double> g;
    if (freeze_pattern) g.replay_pattern(&pattern);
    return net::weighted_cross_entropy(net::network_forward(g, model, h), cloud.labels, class_weights)
        .value()[0];
  };
  NetworkGradientCheck out;
  out.parameters = model.parameter_count();
  out.report = nn::check_gradients(std::span<nn::Parameter<double>* const>(params),
                                   std::span<const BasicTensor<double>>(analytic), loss, options);
  return out;
}

}  // namespace siesef::checks
