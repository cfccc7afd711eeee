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

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siesef/error.hpp"
#include "siesef/tensor.hpp"

namespace siesef {

// Reserved label for unlabeled points; skipped by the loss and the metrics.
inline constexpr std::int32_t kIgnoreLabel = 255;

struct PointCloud {
  Tensor positions;                  // [N x 3], meters
  std::vector<std::int32_t> labels;  // empty, or one per point
  std::vector<float> intensity;      // empty, or one per point

  std::size_t size() const noexcept { return positions.rank() == 0 ? 0 : positions.dim(0); }
  bool has_labels() const noexcept { return !labels.empty(); }

  std::array<float, 3> point(std::size_t i) const {
    return {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
  }

  // Throws DataError when a structural invariant is broken. With
  // `num_classes`, labels must lie in [0, C) or equal kIgnoreLabel.
  void validate(std::optional<int> num_classes = std::nullopt) const {
    if (size() == 0) throw DataError("point cloud is empty");
    if (positions.rank() != 2 || positions.dim(1) != 3) {
      throw ShapeError("point positions must be [N x 3], got " + to_string(positions.shape()));
    }
    if (!positions.all_finite()) throw DataError("point cloud has non-finite coordinates");
    if (!labels.empty() && labels.size() != size()) {
      throw DataError("label count " + std::to_string(labels.size()) +
                      " does not match point count " + std::to_string(size()));
    }
    if (!intensity.empty() && intensity.size() != size()) {
      throw DataError("intensity count does not match point count");
    }
    if (num_classes) {
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto l = labels[i];
        if (l != kIgnoreLabel && (l < 0 || l >= *num_classes)) {
          throw DataError("label " + std::to_string(l) + " at point " + std::to_string(i) +
                          " outside [0, " + std::to_string(*num_classes) + ")");
        }
      }
    }
  }

  PointCloud subset(std::span<const std::uint32_t> ids) const {
    PointCloud out;
    std::vector<float> pos;
    pos.reserve(ids.size() * 3);
    for (auto id : ids) {
      for (int a = 0; a < 3; ++a) pos.push_back(positions[3 * id + a]);
      if (has_labels()) out.labels.push_back(labels[id]);
      if (!intensity.empty()) out.intensity.push_back(intensity[id]);
    }
    out.positions = Tensor(Shape{ids.size(), 3}, std::move(pos));
    return out;
  }
};

inline PointCloud make_cloud(std::span<const std::array<float, 3>> points,
                             std::vector<std::int32_t> labels = {}) {
  std::vector<float> pos;
  pos.reserve(points.size() * 3);
  for (const auto& p : points) pos.insert(pos.end(), p.begin(), p.end());
  PointCloud c;
  c.positions = Tensor(Shape{points.size(), 3}, std::move(pos));
  c.labels = std::move(labels);
  return c;
}

// Builds a float cloud from world coordinates by subtracting their centroid in
// double precision first. Large georeferenced coordinates (UTM) would lose
// centimeter detail if narrowed to float before re-centering.
inline PointCloud recentered_cloud(std::span<const std::array<double, 3>> world,
                                   std::vector<std::int32_t> labels = {},
                                   std::array<double, 3>* centroid_out = nullptr) {
  if (world.empty()) throw DataError("point cloud is empty");
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (const auto& p : world) {
    for (int a = 0; a < 3; ++a) c[a] += p[a];
  }
  for (auto& v : c) v /= static_cast<double>(world.size());
  std::vector<float> pos;
  pos.reserve(world.size() * 3);
  for (const auto& p : world) {
    for (int a = 0; a < 3; ++a) pos.push_back(static_cast<float>(p[a] - c[a]));
  }
  if (centroid_out) *centroid_out = c;
  PointCloud out;
  out.positions = Tensor(Shape{world.size(), 3}, std::move(pos));
  out.labels = std::move(labels);
  return out;
}

}  // namespace siesef
