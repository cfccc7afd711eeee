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
#include <string>
#include <utility>
#include <vector>

#include "siesef/error.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/random.hpp"
#include "siesef/tensor.hpp"

namespace siesef::nbhd {

// Per-point K nearest neighbors (self included), sorted by (distance, id).
struct NeighborhoodIndex {
  std::size_t num_points = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> neighbor_ids;  // [N x K]
  Tensor distances;                         // [N x K], meters

  std::uint32_t id(std::size_t point, std::size_t slot) const {
    return neighbor_ids[point * k + slot];
  }
  float distance(std::size_t point, std::size_t slot) const {
    return distances[point * k + slot];
  }
};

// Result of one random down-sampling step between a fine and a coarse cloud.
struct SamplingMap {
  std::vector<std::uint32_t> kept_ids;      // [M], indices into the fine cloud
  std::vector<std::uint32_t> upsample_ids;  // [N], nearest kept point (coarse index)
};

// Squared Euclidean distance evaluated in double. Every search path uses this
// one function so that the index and the exhaustive oracle agree bit-for-bit.
inline double squared_distance(const float* a, const float* b) {
  const double dx = static_cast<double>(a[0]) - static_cast<double>(b[0]);
  const double dy = static_cast<double>(a[1]) - static_cast<double>(b[1]);
  const double dz = static_cast<double>(a[2]) - static_cast<double>(b[2]);
  return dx * dx + dy * dy + dz * dz;
}

namespace detail {

struct Candidate {
  double d2;
  std::uint32_t id;
  bool operator<(const Candidate& o) const noexcept {
    return d2 < o.d2 || (d2 == o.d2 && id < o.id);
  }
};

// Sorted list of the k best candidates seen so far.
class BestK {
 public:
  explicit BestK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const noexcept { return items_.size() == k_; }
  double worst_d2() const noexcept { return items_.back().d2; }

  void offer(Candidate c) {
    if (full() && !(c < items_.back())) return;
    auto pos = std::upper_bound(items_.begin(), items_.end(), c);
    items_.insert(pos, c);
    if (items_.size() > k_) items_.pop_back();
  }

  const std::vector<Candidate>& items() const noexcept { return items_; }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

inline void check_knn_args(const PointCloud& cloud, std::size_t k) {
  if (cloud.size() == 0) throw DataError("knn on an empty cloud");
  if (!cloud.positions.all_finite()) throw DataError("knn: cloud has NaN or Inf coordinates");
  if (k == 0 || k > cloud.size()) {
    throw DataError("knn: k = " + std::to_string(k) + " must lie in [1, " +
                    std::to_string(cloud.size()) + "]");
  }
}

inline void store(NeighborhoodIndex& out, std::size_t i, const std::vector<Candidate>& best) {
  for (std::size_t s = 0; s < best.size(); ++s) {
    out.neighbor_ids[i * out.k + s] = best[s].id;
    out.distances[i * out.k + s] = static_cast<float>(std::sqrt(best[s].d2));
  }
}

}  // namespace detail

// Exhaustive O(N^2) reference search.
inline NeighborhoodIndex knn_bruteforce(const PointCloud& cloud, std::size_t k) {
  detail::check_knn_args(cloud, k);
  const std::size_t n = cloud.size();
  NeighborhoodIndex out{n, k, std::vector<std::uint32_t>(n * k), Tensor(Shape{n, k})};
  const float* pos = cloud.positions.data().data();
  std::vector<detail::Candidate> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      all[j] = {squared_distance(pos + 3 * i, pos + 3 * j), static_cast<std::uint32_t>(j)};
    }
    std::sort(all.begin(), all.end());
    detail::store(out, i, std::vector<detail::Candidate>(all.begin(), all.begin() + k));
  }
  return out;
}

// Static 3-d tree over a fixed point set.
class KdTree {
 public:
  explicit KdTree(const Tensor& positions, std::size_t leaf_size = 8)
      : pos_(positions.data().data()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    const std::size_t n = positions.rank() == 0 ? 0 : positions.dim(0);
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    if (n > 0) build(0, static_cast<std::uint32_t>(n));
  }

  // The k nearest of the indexed points to `query`, sorted by (d2, id).
  std::vector<detail::Candidate> nearest(const float* query, std::size_t k) const {
    detail::BestK best(k);
    if (nodes_.empty()) return {};
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
          const std::uint32_t id = order_[i];
          best.offer({squared_distance(query, pos_ + 3 * id), id});
        }
        continue;
      }
      const double delta = static_cast<double>(query[node.axis]) - static_cast<double>(node.split);
      const int near = delta < 0.0 ? node.left : node.right;
      const int far = delta < 0.0 ? node.right : node.left;
      // Far side first on the stack so the near side is searched first.
      if (!best.full() || delta * delta <= best.worst_d2()) {
        stack.push_back(static_cast<std::uint32_t>(far));
      }
      stack.push_back(static_cast<std::uint32_t>(near));
    }
    return best.items();
  }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;
    int left = -1, right = -1;
    int axis = 0;
    float split = 0.0f;
  };

  int build(std::uint32_t begin, std::uint32_t end) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return index;
    std::array<float, 3> lo{pos_[3 * order_[begin]], pos_[3 * order_[begin] + 1],
                            pos_[3 * order_[begin] + 2]};
    std::array<float, 3> hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], pos_[3 * order_[i] + a]);
        hi[a] = std::max(hi[a], pos_[3 * order_[i] + a]);
      }
    }
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
    }
    if (hi[axis] == lo[axis]) return index;  // all coincident: keep as a leaf
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return pos_[3 * a + axis] < pos_[3 * b + axis];
                     });
    const float split = pos_[3 * order_[mid] + axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    nodes_[index].axis = axis;
    nodes_[index].split = split;
    return index;
  }

  const float* pos_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// K nearest neighbors through a kd-tree; identical results to knn_bruteforce.
inline NeighborhoodIndex knn_search(const PointCloud& cloud, std::size_t k) {
  detail::check_knn_args(cloud, k);
  const std::size_t n = cloud.size();
  NeighborhoodIndex out{n, k, std::vector<std::uint32_t>(n * k), Tensor(Shape{n, k})};
  const KdTree tree(cloud.positions);
  const float* pos = cloud.positions.data().data();
  for (std::size_t i = 0; i < n; ++i) detail::store(out, i, tree.nearest(pos + 3 * i, k));
  return out;
}

// For each fine point, the nearest kept point (ties to the lower coarse index).
inline std::vector<std::uint32_t> nearest_kept(const PointCloud& fine,
                                               std::span<const std::uint32_t> kept_ids) {
  const PointCloud coarse = fine.subset(kept_ids);
  const KdTree tree(coarse.positions);
  std::vector<std::uint32_t> up(fine.size());
  const float* pos = fine.positions.data().data();
  for (std::size_t i = 0; i < fine.size(); ++i) up[i] = tree.nearest(pos + 3 * i, 1).front().id;
  return up;
}

// Builds the sampling map for an explicit kept set (which must be unique and
// in range). The coarse cloud keeps the order of `kept_ids`.
inline std::pair<PointCloud, SamplingMap> downsample_with(const PointCloud& cloud,
                                                          std::vector<std::uint32_t> kept_ids) {
  if (cloud.size() == 0) throw DataError("downsample of an empty cloud");
  if (kept_ids.empty()) throw DataError("downsample must keep at least one point");
  std::vector<bool> seen(cloud.size(), false);
  for (auto id : kept_ids) {
    if (id >= cloud.size() || seen[id]) {
      throw DataError("kept id " + std::to_string(id) + " is out of range or repeated");
    }
    seen[id] = true;
  }
  SamplingMap map;
  map.upsample_ids = nearest_kept(cloud, kept_ids);
  PointCloud coarse = cloud.subset(kept_ids);
  map.kept_ids = std::move(kept_ids);
  return {std::move(coarse), std::move(map)};
}

// Uniform random subset of max(1, floor(N * ratio)) points, without
// replacement; kept ids are returned in ascending order.
inline std::vector<std::uint32_t> sample_kept_ids(std::size_t n, double ratio, std::uint64_t seed) {
  if (n == 0) throw DataError("downsample of an empty cloud");
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("downsample ratio " + std::to_string(ratio) + " must lie in (0, 1]");
  }
  const std::size_t m = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio)));
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::pair<PointCloud, SamplingMap> random_downsample(const PointCloud& cloud, double ratio,
                                                            std::uint64_t seed) {
  if (cloud.size() == 0) throw DataError("downsample of an empty cloud");
  return downsample_with(cloud, sample_kept_ids(cloud.size(), ratio, seed));
}

// Nearest-neighbor copy of coarse rows back onto the fine cloud.
template <class T>
BasicTensor<T> upsample_features(const BasicTensor<T>& coarse, const SamplingMap& map) {
  if (coarse.rank() != 2) throw ShapeError("upsample expects [M x d], got " + to_string(coarse.shape()));
  const std::size_t m = coarse.dim(0), d = coarse.dim(1);
  if (m != map.kept_ids.size()) {
    throw ShapeError("upsample: " + std::to_string(m) + " coarse rows but the map keeps " +
                     std::to_string(map.kept_ids.size()));
  }
  BasicTensor<T> out(Shape{map.upsample_ids.size(), d});
  for (std::size_t i = 0; i < map.upsample_ids.size(); ++i) {
    const auto src = map.upsample_ids[i];
    if (src >= m) throw ShapeError("upsample index " + std::to_string(src) + " out of range");
    std::copy_n(coarse.data().data() + src * d, d, out.data().data() + i * d);
  }
  return out;
}

}  // namespace siesef::nbhd
