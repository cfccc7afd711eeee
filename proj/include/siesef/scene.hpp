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
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "siesef/error.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/random.hpp"

// Synthetic labeled street-like scenes for desk-scale training.
namespace siesef::io {

enum class SceneLayout {
  // Ground plane (class 0) meeting a wall (class 1) along a seam, plus
  // vertical poles (class 2). Points within `strip_width` of the seam form
  // the boundary strip.
  kPlanesAndPoles,
  // Two horizontal planes one meter apart (classes 0 and 1).
  kParallelPlanes,
};

inline std::string_view to_string(SceneLayout l) {
  return l == SceneLayout::kParallelPlanes ? "parallel_planes" : "planes_and_poles";
}

inline SceneLayout parse_scene_layout(std::string_view s) {
  if (s == "planes_and_poles") return SceneLayout::kPlanesAndPoles;
  if (s == "parallel_planes") return SceneLayout::kParallelPlanes;
  throw ConfigError("unknown scene layout '" + std::string(s) + "'");
}

struct SceneSpec {
  std::size_t num_points = 2000;
  SceneLayout layout = SceneLayout::kPlanesAndPoles;
  double noise_sigma = 0.02;       // meters, isotropic Gaussian
  double boundary_fraction = 0.1;  // share of points inside the seam strip
  double strip_width = 0.3;        // meters
  std::size_t num_poles = 4;
  std::uint64_t seed = 0;
};

// Scene geometry constants, meters.
inline constexpr double kGroundHalfExtent = 5.0;  // ground spans [-5, 5]^2, z = 0
inline constexpr double kWallX = 5.0;             // wall plane x = 5
inline constexpr double kWallHeight = 4.0;
inline constexpr double kPoleRadius = 0.15;
inline constexpr double kPoleHeight = 3.0;

inline int scene_num_classes(SceneLayout l) { return l == SceneLayout::kParallelPlanes ? 2 : 3; }

inline std::size_t boundary_point_count(const SceneSpec& s) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(s.num_points) * s.boundary_fraction));
}

inline PointCloud generate_scene(const SceneSpec& spec) {
  if (spec.num_points == 0) throw DataError("scene needs at least one point");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (!(spec.boundary_fraction >= 0.0 && spec.boundary_fraction <= 1.0)) {
    throw ConfigError("boundary_fraction must lie in [0, 1]");
  }
  if (!(spec.strip_width > 0.0 && spec.strip_width < kWallHeight)) {
    throw ConfigError("strip_width must lie in (0, wall height)");
  }
  Rng rng(spec.seed);
  std::vector<std::array<float, 3>> pts;
  std::vector<std::int32_t> labels;
  pts.reserve(spec.num_points);
  auto emit = [&](double x, double y, double z, std::int32_t label) {
    if (spec.noise_sigma > 0.0) {
      x += spec.noise_sigma * rng.normal();
      y += spec.noise_sigma * rng.normal();
      z += spec.noise_sigma * rng.normal();
    }
    pts.push_back({static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)});
    labels.push_back(label);
  };
  const double e = kGroundHalfExtent;

  if (spec.layout == SceneLayout::kParallelPlanes) {
    for (std::size_t i = 0; i < spec.num_points; ++i) {
      const std::int32_t label = static_cast<std::int32_t>(i % 2);
      emit(rng.uniform(-e, e), rng.uniform(-e, e), label == 0 ? 0.0 : 1.0, label);
    }
    return make_cloud(pts, std::move(labels));
  }

  const double w = spec.strip_width;
  const std::size_t n_strip = boundary_point_count(spec);
  for (std::size_t i = 0; i < n_strip; ++i) {
    if (i % 2 == 0) {
      emit(rng.uniform(kWallX - w, kWallX), rng.uniform(-e, e), 0.0, 0);
    } else {
      emit(kWallX, rng.uniform(-e, e), rng.uniform(0.0, w), 1);
    }
  }
  const std::size_t rest = spec.num_points - n_strip;
  const std::size_t n_poles_pts = spec.num_poles == 0 ? 0 : rest / 5;
  const std::size_t n_wall = (rest - n_poles_pts) * 3 / 8;
  const std::size_t n_ground = rest - n_poles_pts - n_wall;
  for (std::size_t i = 0; i < n_ground; ++i) {
    emit(rng.uniform(-e, kWallX - w), rng.uniform(-e, e), 0.0, 0);
  }
  for (std::size_t i = 0; i < n_wall; ++i) {
    emit(kWallX, rng.uniform(-e, e), rng.uniform(w, kWallHeight), 1);
  }
  // Poles on a fixed ring, clear of the seam strip.
  for (std::size_t i = 0; i < n_poles_pts; ++i) {
    const std::size_t pole = i % spec.num_poles;
    const double a = 2.0 * std::numbers::pi * static_cast<double>(pole) / static_cast<double>(spec.num_poles);
    const double cx = 3.0 * std::cos(a) - 1.0, cy = 3.0 * std::sin(a);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    emit(cx + kPoleRadius * std::cos(phi), cy + kPoleRadius * std::sin(phi),
         rng.uniform(0.0, kPoleHeight), 2);
  }
  return make_cloud(pts, std::move(labels));
}

}  // namespace siesef::io
