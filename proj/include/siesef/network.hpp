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
#include <optional>
#include <string>
#include <vector>

#include "siesef/autodiff.hpp"
#include "siesef/else_encode.hpp"
#include "siesef/layers.hpp"
#include "siesef/model_config.hpp"
#include "siesef/neighborhood.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/random.hpp"
#include "siesef/seap_pool.hpp"

namespace siesef::net {

// ---------------------------------------------------------------------------
// Multi-resolution sampling hierarchy.

struct Level {
  PointCloud cloud;
  nbhd::NeighborhoodIndex index;
  Tensor descriptor;      // [N x K x width] spatial descriptor on this level
  nbhd::SamplingMap down; // this level -> next coarser level
};

struct Hierarchy {
  std::vector<Level> levels;  // one per encoder level
  PointCloud coarsest;        // cloud below the last encoder level
};

inline std::size_t effective_k(const ModelConfig& config, std::size_t n) {
  return std::min(config.k_neighbors, n);
}

// Hierarchy from explicit kept-id sets (one per level, indexing that level's
// cloud). Useful when two clouds must be sampled consistently.
inline Hierarchy build_hierarchy(const PointCloud& cloud, const ModelConfig& config,
                                 const std::vector<std::vector<std::uint32_t>>& kept) {
  cloud.validate();
  if (kept.size() != config.levels()) {
    throw ConfigError("hierarchy needs " + std::to_string(config.levels()) + " kept sets");
  }
  Hierarchy h;
  PointCloud current = cloud;
  for (std::size_t l = 0; l < config.levels(); ++l) {
    Level level;
    level.index = nbhd::knn_search(current, effective_k(config, current.size()));
    level.descriptor = encoding::descriptor_tensor(current, level.index, config.spatial_options());
    auto [coarse, map] = nbhd::downsample_with(current, kept[l]);
    level.down = std::move(map);
    level.cloud = std::move(current);
    h.levels.push_back(std::move(level));
    current = std::move(coarse);
  }
  h.coarsest = std::move(current);
  return h;
}

// Kept sets drawn uniformly at random, one seed per level derived from `seed`.
inline std::vector<std::vector<std::uint32_t>> draw_kept_sets(std::size_t n,
                                                              const ModelConfig& config,
                                                              std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> kept;
  Rng rng(seed);
  for (std::size_t l = 0; l < config.levels(); ++l) {
    kept.push_back(nbhd::sample_kept_ids(n, config.ratios[l], rng.next()));
    n = kept.back().size();
  }
  return kept;
}

inline Hierarchy build_hierarchy(const PointCloud& cloud, const ModelConfig& config,
                                 std::uint64_t seed) {
  cloud.validate();
  return build_hierarchy(cloud, config, draw_kept_sets(cloud.size(), config, seed));
}

// ---------------------------------------------------------------------------
// Weights.

template <class T>
struct ResidualBlock {
  std::vector<nn::MlpLayer<T>> spatial;    // descriptor -> d_g
  std::vector<nn::MlpLayer<T>> semantic1;  // 2 d_in -> d_s
  nn::MlpLayer<T> attention1;              // d_g -> d_s (or 1)
  std::vector<nn::MlpLayer<T>> semantic2;  // 2 d_pool -> d_s
  nn::MlpLayer<T> attention2;
  nn::MlpLayer<T> expand;                  // 2 d_pool -> expansion * 2 d_pool
  nn::MlpLayer<T> project;                 // -> d_out, linear
  std::optional<nn::MlpLayer<T>> shortcut; // d_in -> d_out when widths differ

  std::size_t out_features() const { return project.out_features(); }

  void collect(std::vector<nn::Parameter<T>*>& out) {
    nn::collect(out, spatial);
    nn::collect(out, semantic1);
    nn::collect(out, attention1);
    nn::collect(out, semantic2);
    nn::collect(out, attention2);
    nn::collect(out, expand);
    nn::collect(out, project);
    if (shortcut) nn::collect(out, *shortcut);
  }

  template <class U>
  ResidualBlock<U> cast() const {
    auto cast_stack = [](const std::vector<nn::MlpLayer<T>>& s) {
      std::vector<nn::MlpLayer<U>> out;
      for (const auto& l : s) out.push_back(l.template cast<U>());
      return out;
    };
    ResidualBlock<U> b{cast_stack(spatial), cast_stack(semantic1), attention1.template cast<U>(),
                       cast_stack(semantic2), attention2.template cast<U>(),
                       expand.template cast<U>(), project.template cast<U>(), std::nullopt};
    if (shortcut) b.shortcut = shortcut->template cast<U>();
    return b;
  }
};

// Width of one pooled output: [adaptive | max(F | G)] or max(F | G).
inline std::size_t pooled_width(const ModelConfig& c, std::size_t d_s) {
  return c.pooling == encoding::Pooling::kSeap ? 2 * d_s + c.d_g : d_s + c.d_g;
}

template <class T>
ResidualBlock<T> make_residual_block(const ModelConfig& c, const std::string& name,
                                     std::size_t d_in, std::size_t d_s, std::size_t d_out,
                                     Rng& rng) {
  using nn::Activation;
  const std::size_t d_pool = pooled_width(c, d_s);
  const std::size_t attn_out = c.scalar_attention ? 1 : d_s;
  const std::size_t cat = 2 * d_pool;
  ResidualBlock<T> b;
  b.spatial.push_back(nn::make_layer<T>(name + ".spatial", encoding::descriptor_width(c.spatial_options()),
                                        c.d_g, Activation::kLeakyRelu, rng));
  b.semantic1.push_back(nn::make_layer<T>(name + ".seap1.semantic", 2 * d_in, d_s,
                                          Activation::kLeakyRelu, rng));
  b.attention1 = nn::make_layer<T>(name + ".seap1.attention", c.d_g, attn_out, Activation::kIdentity, rng);
  b.semantic2.push_back(nn::make_layer<T>(name + ".seap2.semantic", 2 * d_pool, d_s,
                                          Activation::kLeakyRelu, rng));
  b.attention2 = nn::make_layer<T>(name + ".seap2.attention", c.d_g, attn_out, Activation::kIdentity, rng);
  b.expand = nn::make_layer<T>(name + ".rbpc.expand", cat, c.rbpc_expansion * cat,
                               c.rbpc_activation ? Activation::kLeakyRelu : Activation::kIdentity, rng);
  b.project = nn::make_layer<T>(name + ".rbpc.project", c.rbpc_expansion * cat, d_out,
                                Activation::kIdentity, rng);
  if (d_in != d_out) {
    b.shortcut = nn::make_layer<T>(name + ".shortcut", d_in, d_out, Activation::kIdentity, rng);
  }
  return b;
}

template <class T>
struct Network {
  ModelConfig config;
  nn::MlpLayer<T> stem;                 // 3 -> stem_width
  std::vector<ResidualBlock<T>> encoder;
  nn::MlpLayer<T> bottleneck;
  std::vector<nn::MlpLayer<T>> decoder; // decoder[l] runs on level l
  nn::MlpLayer<T> head_hidden;
  nn::MlpLayer<T> head_out;

  // Stable order; checkpoint files list tensors in this order.
  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    nn::collect(out, stem);
    for (auto& b : encoder) b.collect(out);
    nn::collect(out, bottleneck);
    nn::collect(out, decoder);
    nn::collect(out, head_hidden);
    nn::collect(out, head_out);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
  }

  template <class U>
  Network<U> cast() const {
    Network<U> out;
    out.config = config;
    out.stem = stem.template cast<U>();
    for (const auto& b : encoder) out.encoder.push_back(b.template cast<U>());
    out.bottleneck = bottleneck.template cast<U>();
    for (const auto& d : decoder) out.decoder.push_back(d.template cast<U>());
    out.head_hidden = head_hidden.template cast<U>();
    out.head_out = head_out.template cast<U>();
    return out;
  }
};

template <class T>
Network<T> make_network(const ModelConfig& config) {
  using nn::Activation;
  config.validate();
  Rng rng(config.seed ^ 0x5eedf00dULL);
  Network<T> net;
  net.config = config;
  net.stem = nn::make_layer<T>("stem", 3, config.stem_width, Activation::kLeakyRelu, rng);
  std::size_t d_in = config.stem_width;
  for (std::size_t l = 0; l < config.levels(); ++l) {
    net.encoder.push_back(make_residual_block<T>(config, "encoder" + std::to_string(l), d_in,
                                                 config.semantic_width(l), config.widths[l], rng));
    d_in = config.widths[l];
  }
  const std::size_t last = config.widths.back();
  net.bottleneck = nn::make_layer<T>("bottleneck", last, last, Activation::kLeakyRelu, rng);
  net.decoder.resize(config.levels());
  for (std::size_t l = config.levels(); l-- > 0;) {
    const std::size_t below = (l + 1 == config.levels()) ? last : config.widths[l + 1];
    net.decoder[l] = nn::make_layer<T>("decoder" + std::to_string(l), below + config.widths[l],
                                       config.widths[l], Activation::kLeakyRelu, rng);
  }
  net.head_hidden = nn::make_layer<T>("head.hidden", config.widths.front(), config.head_width,
                                      Activation::kLeakyRelu, rng);
  net.head_out = nn::make_layer<T>("head.out", config.head_width,
                                   static_cast<std::size_t>(config.num_classes),
                                   Activation::kIdentity, rng);
  return net;
}

// ---------------------------------------------------------------------------
// Forward passes.

// MLP(phi(f1 | f2)): per-point expansion then projection.
template <class T>
nn::Var<T> rbpc_forward(const nn::Var<T>& f1, const nn::Var<T>& f2, nn::MlpLayer<T>& expand,
                        nn::MlpLayer<T>& project) {
  if (f1.shape() != f2.shape()) {
    throw ShapeError("rbpc inputs differ: " + siesef::to_string(f1.shape()) + " vs " + siesef::to_string(f2.shape()));
  }
  return nn::apply(project, nn::apply(expand, nn::concat<T>({f1, f2})));
}

template <class T>
nn::Var<T> pool(const ModelConfig& c, const nn::Var<T>& features, const nn::Var<T>& g,
                nn::MlpLayer<T>& attention) {
  if (c.pooling == encoding::Pooling::kSeap) return encoding::seap_forward(features, g, attention);
  return encoding::maxpool_baseline(features, g);
}

// Intermediate tensors of one block, kept for inspection and dumps.
template <class T>
struct BlockTrace {
  nn::Var<T> spatial;  // G, [N x K x d_g]
  nn::Var<T> pooled1;  // first pooling output, [N x d_pool]
  nn::Var<T> pooled2;
  nn::Var<T> output;
};

// LeakyReLU(RBPC(pool1, pool2) + shortcut(input)), where pool2 aggregates
// pool1's output over the same neighborhood.
template <class T>
BlockTrace<T> residual_block_trace(const ModelConfig& c, ResidualBlock<T>& b,
                                   const nn::Var<T>& input, const Level& level) {
  nn::Graph<T>& g = *input.graph();
  const nn::Var<T> descriptor = g.constant(level.descriptor.template cast<T>());
  BlockTrace<T> t;
  t.spatial = encoding::else_forward(b.spatial, descriptor);
  const nn::Var<T> f1 = encoding::local_semantic_features(
      input, encoding::group_neighbors(input, level.index), b.semantic1);
  t.pooled1 = pool(c, f1, t.spatial, b.attention1);
  const nn::Var<T> f2 = encoding::local_semantic_features(
      t.pooled1, encoding::group_neighbors(t.pooled1, level.index), b.semantic2);
  t.pooled2 = pool(c, f2, t.spatial, b.attention2);
  const nn::Var<T> main = rbpc_forward(t.pooled1, t.pooled2, b.expand, b.project);
  const nn::Var<T> skip = b.shortcut ? nn::apply(*b.shortcut, input) : input;
  t.output = nn::leaky_relu(nn::add(main, skip), static_cast<T>(nn::kDefaultLeakySlope));
  return t;
}

template <class T>
nn::Var<T> residual_block(const ModelConfig& c, ResidualBlock<T>& b, const nn::Var<T>& input,
                          const Level& level) {
  return residual_block_trace(c, b, input, level).output;
}

// Stem input: positions relative to the cloud centroid (double accumulation).
// With `unit_rms`, further divided by their root-mean-square radius so that
// the stem sees unit-scale coordinates whatever the extent of the scene.
template <class T>
BasicTensor<T> centered_positions(const PointCloud& cloud, bool unit_rms = false) {
  const std::size_t n = cloud.size();
  double c[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) c[a] += cloud.positions[3 * i + a];
  }
  for (double& v : c) v /= static_cast<double>(n);
  double scale = 1.0;
  if (unit_rms) {
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) {
        const double d = cloud.positions[3 * i + a] - c[a];
        sq += d * d;
      }
    }
    if (sq > 0.0) scale = 1.0 / std::sqrt(sq / static_cast<double>(n));
  }
  BasicTensor<T> out(Shape{n, 3});
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      out[3 * i + a] = static_cast<T>((cloud.positions[3 * i + a] - c[a]) * scale);
    }
  }
  return out;
}

// Per-point class logits [N x C] for the finest level of `h`.
template <class T>
nn::Var<T> network_forward(nn::Graph<T>& g, Network<T>& net, const Hierarchy& h) {
  const ModelConfig& c = net.config;
  if (h.levels.size() != c.levels()) throw ConfigError("hierarchy depth does not match the model");
  const BasicTensor<T> stem_in = centered_positions<T>(h.levels.front().cloud, c.normalize_input);
  nn::Var<T> x = nn::apply(net.stem, g.constant(stem_in));
  std::vector<nn::Var<T>> skips;
  for (std::size_t l = 0; l < c.levels(); ++l) {
    const Level& level = h.levels[l];
    nn::Var<T> e = residual_block(c, net.encoder[l], x, level);
    skips.push_back(e);
    x = nn::gather_rows(e, level.down.kept_ids, Shape{level.down.kept_ids.size()});
  }
  x = nn::apply(net.bottleneck, x);
  for (std::size_t l = c.levels(); l-- > 0;) {
    const Level& level = h.levels[l];
    const nn::Var<T> up =
        nn::gather_rows(x, level.down.upsample_ids, Shape{level.down.upsample_ids.size()});
    x = nn::apply(net.decoder[l], nn::concat<T>({up, skips[l]}));
  }
  return nn::apply(net.head_out, nn::apply(net.head_hidden, x));
}

template <class T>
BasicTensor<T> network_forward(Network<T>& net, const Hierarchy& h) {
  nn::Graph<T> g;
  return network_forward(g, net, h).value();
}

template <class T>
BasicTensor<T> network_forward(Network<T>& net, const PointCloud& cloud, std::uint64_t seed) {
  return network_forward(net, build_hierarchy(cloud, net.config, seed));
}

// Row-wise argmax.
template <class T>
std::vector<std::int32_t> predict(const BasicTensor<T>& logits) {
  std::vector<std::int32_t> out(logits.dim(0));
  const std::size_t c = logits.dim(1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    out[i] = static_cast<std::int32_t>(best);
  }
  return out;
}

}  // namespace siesef::net
