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
#include <vector>

#include "siesef/autodiff.hpp"
#include "siesef/layers.hpp"
#include "siesef/neighborhood.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/tensor.hpp"

// Enhanced local spatial encoding: every (centroid, neighbor) pair gets the
// descriptor [relative position (3) | inverse distance weight (1) |
// angle compensation (6)], which a shared MLP projects to d_g channels.
namespace siesef::encoding {

enum class AngleNormalization {
  kL2,      // unit L2 norm over the 6-vector
  kMinMax,  // each sin/cos mapped from [-1, 1] to [0, 1]
};

struct SpatialOptions {
  // false: the descriptor is the relative position alone (baseline encoding).
  bool enhanced = true;
  AngleNormalization angle_normalization = AngleNormalization::kL2;
};

inline constexpr std::size_t kEnhancedWidth = 10;
inline constexpr std::size_t kBasicWidth = 3;

inline std::size_t descriptor_width(const SpatialOptions& o) {
  return o.enhanced ? kEnhancedWidth : kBasicWidth;
}

struct SpatialDescriptor {
  Tensor relative_pos;     // [N x K x 3]
  Tensor inv_dist_weight;  // [N x K x 1]
  Tensor angle_comp;       // [N x K x 6]
};

// p_i^k - p_i for every neighbor slot.
inline Tensor relative_positions(const PointCloud& cloud, const nbhd::NeighborhoodIndex& index) {
  if (index.num_points != cloud.size()) {
    throw ShapeError("neighborhood index built for " + std::to_string(index.num_points) +
                     " points, cloud has " + std::to_string(cloud.size()));
  }
  const std::size_t n = index.num_points, k = index.k;
  Tensor out(Shape{n, k, 3});
  const float* pos = cloud.positions.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < k; ++s) {
      const std::uint32_t j = index.id(i, s);
      for (int a = 0; a < 3; ++a) out(i, s, a) = pos[3 * j + a] - pos[3 * i + a];
    }
  }
  return out;
}

// 1 - softmax(D) over the K neighbors of each centroid: [N x K] -> [N x K x 1].
inline Tensor inverse_distance_weights(const Tensor& distances) {
  if (distances.rank() != 2) {
    throw ShapeError("distances must be [N x K], got " + to_string(distances.shape()));
  }
  if (!distances.all_finite()) throw NumericError("inverse distance weights: non-finite distance");
  Tensor w = softmax(distances, 1);
  for (auto& v : w.data()) v = 1.0f - v;
  return w.reshaped(Shape{distances.dim(0), distances.dim(1), 1});
}

// atan2 with atan2(0, 0) := 0 regardless of zero signs.
inline double plane_angle(double y, double x) {
  if (y == 0.0 && x == 0.0) return 0.0;
  return std::atan2(y, x);
}

// [sin, cos] of the xy, yz and zx plane angles of each delta, normalized.
inline Tensor angle_compensation(const Tensor& relative_pos,
                                 AngleNormalization norm = AngleNormalization::kL2) {
  if (relative_pos.rank() == 0 || relative_pos.cols() != 3) {
    throw ShapeError("relative positions must end in 3, got " + to_string(relative_pos.shape()));
  }
  if (!relative_pos.all_finite()) throw NumericError("angle compensation: non-finite delta");
  Shape shape = relative_pos.shape();
  shape.back() = 6;
  Tensor out(std::move(shape));
  const std::size_t rows = relative_pos.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    const double dx = relative_pos[3 * r], dy = relative_pos[3 * r + 1], dz = relative_pos[3 * r + 2];
    const double theta[3] = {plane_angle(dy, dx), plane_angle(dz, dy), plane_angle(dz, dx)};
    double v[6];
    for (int p = 0; p < 3; ++p) {
      v[2 * p] = std::sin(theta[p]);
      v[2 * p + 1] = std::cos(theta[p]);
    }
    if (norm == AngleNormalization::kL2) {
      double sq = 0.0;
      for (double x : v) sq += x * x;
      const double inv = 1.0 / std::sqrt(sq);  // sq == 3 up to rounding
      for (double& x : v) x *= inv;
    } else {
      for (double& x : v) x = 0.5 * (x + 1.0);
    }
    for (int c = 0; c < 6; ++c) out[6 * r + c] = static_cast<float>(v[c]);
  }
  return out;
}

inline SpatialDescriptor spatial_descriptor(const PointCloud& cloud,
                                            const nbhd::NeighborhoodIndex& index,
                                            AngleNormalization norm = AngleNormalization::kL2) {
  SpatialDescriptor d;
  d.relative_pos = relative_positions(cloud, index);
  d.inv_dist_weight = inverse_distance_weights(index.distances);
  d.angle_comp = angle_compensation(d.relative_pos, norm);
  return d;
}

// Per-neighbor network input: [N x K x 10] enhanced, or [N x K x 3] basic.
inline Tensor descriptor_tensor(const PointCloud& cloud, const nbhd::NeighborhoodIndex& index,
                                const SpatialOptions& options = {}) {
  if (!options.enhanced) return relative_positions(cloud, index);
  const SpatialDescriptor d = spatial_descriptor(cloud, index, options.angle_normalization);
  const Tensor* parts[] = {&d.relative_pos, &d.inv_dist_weight, &d.angle_comp};
  return concat_last<float>(std::span<const Tensor* const>(parts));
}

// G = MLP(descriptor), rows independent.
template <class T>
nn::Var<T> else_forward(std::vector<nn::MlpLayer<T>>& mlp, const nn::Var<T>& descriptor) {
  if (mlp.empty()) throw ConfigError("spatial encoder needs at least one layer");
  return nn::apply(mlp, descriptor);
}

template <class T>
BasicTensor<T> else_forward(const PointCloud& cloud, const nbhd::NeighborhoodIndex& index,
                            const std::vector<nn::MlpLayer<T>>& mlp,
                            const SpatialOptions& options = {}) {
  if (mlp.empty()) throw ConfigError("spatial encoder needs at least one layer");
  BasicTensor<T> x = descriptor_tensor(cloud, index, options).template cast<T>();
  if (x.cols() != mlp.front().in_features()) {
    throw ShapeError("spatial descriptor " + to_string(x.shape()) + " does not match encoder input " +
                     to_string(mlp.front().weights.value.shape()));
  }
  for (const auto& layer : mlp) x = nn::mlp_forward(layer, x);
  return x;
}

}  // namespace siesef::encoding
