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
#include <vector>

#include "siesef/autodiff.hpp"
#include "siesef/layers.hpp"
#include "siesef/neighborhood.hpp"
#include "siesef/tensor.hpp"

// Spatially-embedded adaptive pooling. Attention weights come from the
// spatial encoding G, are normalized over the K neighbors, and weight the
// local semantic features F; a max-pooled [F | G] branch is appended.
namespace siesef::encoding {

enum class Pooling {
  kSeap,  // adaptive branch + max branch
  kMax,   // max branch only (baseline aggregation)
};

template <class T>
struct SemanticNeighborhood {
  BasicTensor<T> center_features;    // [N x d_f]
  BasicTensor<T> neighbor_features;  // [N x K x d_f]
};

// Neighbor rows of `features` grouped as [N x K x d].
template <class T>
nn::Var<T> group_neighbors(const nn::Var<T>& features, const nbhd::NeighborhoodIndex& index) {
  if (features.value().rank() != 2 || features.value().dim(0) != index.num_points) {
    throw ShapeError("features " + to_string(features.shape()) + " do not match a neighborhood of " +
                     std::to_string(index.num_points) + " points");
  }
  return nn::gather_rows(features, index.neighbor_ids, Shape{index.num_points, index.k});
}

// Each centroid's own row repeated over its K slots.
template <class T>
nn::Var<T> repeat_centers(const nn::Var<T>& features, std::size_t k) {
  const std::size_t n = features.value().dim(0);
  std::vector<std::uint32_t> ids(n * k);
  for (std::size_t i = 0; i < n * k; ++i) ids[i] = static_cast<std::uint32_t>(i / k);
  return nn::gather_rows(features, std::move(ids), Shape{n, k});
}

template <class T>
SemanticNeighborhood<T> gather_semantic(const BasicTensor<T>& features,
                                        const nbhd::NeighborhoodIndex& index) {
  nn::Graph<T> g;
  const auto f = g.constant(features);
  return {features, group_neighbors(f, index).value()};
}

// F = MLP((f_k - f_i) | f_k), from centers [N x d] and neighbors [N x K x d].
template <class T>
nn::Var<T> local_semantic_features(const nn::Var<T>& centers, const nn::Var<T>& neighbors,
                                   std::vector<nn::MlpLayer<T>>& mlp) {
  const Shape& ns = neighbors.shape();
  if (ns.size() != 3 || centers.shape().size() != 2 || centers.shape()[0] != ns[0] ||
      centers.shape()[1] != ns[2]) {
    throw ShapeError("semantic neighborhood mismatch: centers " + to_string(centers.shape()) +
                     ", neighbors " + to_string(ns));
  }
  const nn::Var<T> repeated = repeat_centers(centers, ns[1]);
  return nn::apply(mlp, nn::concat<T>({nn::sub(neighbors, repeated), neighbors}));
}

// softmax over K of MLP(G), per centroid and channel. A layer with a single
// output channel gives one weight per neighbor, broadcast to `channels`.
template <class T>
nn::Var<T> adaptive_weights(const nn::Var<T>& g, nn::MlpLayer<T>& layer, std::size_t channels) {
  if (g.shape().size() != 3) throw ShapeError("spatial encoding must be [N x K x d_g]");
  nn::Var<T> w = nn::softmax(nn::apply(layer, g), 1);
  if (layer.out_features() == 1 && channels != 1) {
    nn::Var<T> ones = g.graph()->constant(BasicTensor<T>(Shape{1, channels}, T{1}));
    w = nn::matmul(w, ones);
  }
  return w;
}

// sum over K of F * w.
template <class T>
nn::Var<T> weighted_aggregate(const nn::Var<T>& features, const nn::Var<T>& weights) {
  if (features.shape().size() != 3) {
    throw ShapeError("weighted aggregate expects [N x K x d], got " + to_string(features.shape()));
  }
  return nn::sum(nn::mul(features, weights), 1);
}

// Per-channel max over K of [F | G].
template <class T>
nn::Var<T> maxpool_baseline(const nn::Var<T>& features, const nn::Var<T>& g) {
  if (features.shape().size() != 3 || features.shape()[1] == 0) {
    throw ShapeError("max pooling expects [N x K x d], got " + to_string(features.shape()));
  }
  return nn::max(nn::concat<T>({features, g}), 1);
}

// [sum_K(F * w) | max_K(F | G)] -> [N x (d_s + d_s + d_g)].
template <class T>
nn::Var<T> seap_forward(const nn::Var<T>& features, const nn::Var<T>& g,
                        nn::MlpLayer<T>& attention) {
  const Shape& fs = features.shape();
  const Shape& gs = g.shape();
  if (fs.size() != 3 || gs.size() != 3 || fs[0] != gs[0] || fs[1] != gs[1]) {
    throw ShapeError("seap: features " + to_string(fs) + " and spatial encoding " + to_string(gs) +
                     " disagree on N or K");
  }
  const nn::Var<T> w = adaptive_weights(g, attention, fs[2]);
  return nn::concat<T>({weighted_aggregate(features, w), maxpool_baseline(features, g)});
}

// Tape-free conveniences.

template <class T>
BasicTensor<T> local_semantic_features(const SemanticNeighborhood<T>& nb,
                                       std::vector<nn::MlpLayer<T>> mlp) {
  nn::Graph<T> g;
  return local_semantic_features(g.constant(nb.center_features), g.constant(nb.neighbor_features),
                                 mlp)
      .value();
}

template <class T>
BasicTensor<T> adaptive_weights(const BasicTensor<T>& g_enc, nn::MlpLayer<T> layer,
                                std::size_t channels) {
  nn::Graph<T> g;
  return adaptive_weights(g.constant(g_enc), layer, channels).value();
}

template <class T>
BasicTensor<T> weighted_aggregate(const BasicTensor<T>& features, const BasicTensor<T>& weights) {
  nn::Graph<T> g;
  return weighted_aggregate(g.constant(features), g.constant(weights)).value();
}

template <class T>
BasicTensor<T> maxpool_baseline(const BasicTensor<T>& features, const BasicTensor<T>& g_enc) {
  nn::Graph<T> g;
  return maxpool_baseline(g.constant(features), g.constant(g_enc)).value();
}

template <class T>
BasicTensor<T> seap_forward(const BasicTensor<T>& features, const BasicTensor<T>& g_enc,
                            nn::MlpLayer<T> attention) {
  nn::Graph<T> g;
  return seap_forward(g.constant(features), g.constant(g_enc), attention).value();
}

}  // namespace siesef::encoding
