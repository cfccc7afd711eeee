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

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "siesef/invariants.hpp"
#include "siesef/loss.hpp"
#include "siesef/network.hpp"
#include "siesef/train.hpp"

namespace siesef::net {
namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.num_classes = 3;
  c.widths = {4, 8};
  c.ratios = {0.5, 0.5};
  c.d_g = 4;
  c.k_neighbors = 6;
  c.stem_width = 4;
  c.head_width = 4;
  c.rbpc_expansion = 2;
  return c;
}

Tensor random_tensor(Shape s, Rng& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

nn::MlpLayer<float> zero_layer(std::size_t d_in, std::size_t d_out) {
  return {nn::Parameter<float>("z.weight", Tensor(Shape{d_in, d_out})),
          nn::Parameter<float>("z.bias", Tensor(Shape{d_out})), nn::Activation::kIdentity, 0.2f};
}

Tensor rbpc(const Tensor& a, const Tensor& b, nn::MlpLayer<float> expand, nn::MlpLayer<float> project) {
  nn::Graph<float> g;
  return rbpc_forward(g.constant(a), g.constant(b), expand, project).value();
}

TEST(RbpcTest, IdentityLayersConcatenatePositiveInputs) {
  Rng rng(1);
  const Tensor a = random_tensor({5, 3}, rng, 0.1, 1), b = random_tensor({5, 3}, rng, 0.1, 1);
  const Tensor y = rbpc(a, b, nn::identity_layer<float>("e", 6, nn::Activation::kLeakyRelu),
                        nn::identity_layer<float>("p", 6));
  EXPECT_EQ(y, concat_last(a, b));
}

TEST(RbpcTest, PositivelyHomogeneousWithZeroBias) {
  Rng rng(2);
  const Tensor a = random_tensor({6, 4}, rng), b = random_tensor({6, 4}, rng);
  const auto e = nn::make_layer<float>("e", 8, 32, nn::Activation::kLeakyRelu, rng);
  const auto p = nn::make_layer<float>("p", 32, 5, nn::Activation::kIdentity, rng);
  Tensor a3 = a, b3 = b;
  for (auto& v : a3.data()) v *= 3.0f;
  for (auto& v : b3.data()) v *= 3.0f;
  Tensor y = rbpc(a, b, e, p);
  for (auto& v : y.data()) v *= 3.0f;
  EXPECT_LE(checks::max_abs_diff(rbpc(a3, b3, e, p), y), 1e-4);
}

TEST(RbpcTest, MatchesLoopOracle) {
  Rng rng(3);
  const Tensor a = random_tensor({4, 2}, rng), b = random_tensor({4, 2}, rng);
  auto e = nn::make_layer<float>("e", 4, 16, nn::Activation::kLeakyRelu, rng);
  auto p = nn::make_layer<float>("p", 16, 3, nn::Activation::kIdentity, rng);
  for (auto& v : e.bias.value.data()) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  for (auto& v : p.bias.value.data()) v = static_cast<float>(rng.uniform(-0.5, 0.5));
  const Tensor y = rbpc(a, b, e, p);
  for (std::size_t i = 0; i < 4; ++i) {
    const double x[4] = {a(i, 0), a(i, 1), b(i, 0), b(i, 1)};
    double h[16];
    for (std::size_t j = 0; j < 16; ++j) {
      double acc = e.bias.value[j];
      for (std::size_t k = 0; k < 4; ++k) acc += x[k] * e.weights.value(k, j);
      h[j] = acc > 0 ? acc : 0.2 * acc;
    }
    for (std::size_t o = 0; o < 3; ++o) {
      double acc = p.bias.value[o];
      for (std::size_t j = 0; j < 16; ++j) acc += h[j] * p.weights.value(j, o);
      EXPECT_NEAR(y(i, o), acc, 1e-5);
    }
  }
}

TEST(RbpcTest, MismatchedInputsThrow) {
  Rng rng(4);
  EXPECT_THROW(rbpc(random_tensor({4, 2}, rng), random_tensor({4, 3}, rng),
                    nn::identity_layer<float>("e", 4), nn::identity_layer<float>("p", 4)),
               ShapeError);
}

struct BlockFixture {
  ModelConfig config = tiny_config();
  Hierarchy hierarchy;
  Tensor input;

  explicit BlockFixture(std::size_t n = 20, std::size_t d_in = 4) {
    Rng rng(5);
    hierarchy = build_hierarchy(checks::random_cloud(n, rng), config, 1);
    input = random_tensor({n, d_in}, rng);
  }
};

TEST(ResidualBlockTest, TraceShapes) {
  BlockFixture f;
  for (auto pooling : {encoding::Pooling::kSeap, encoding::Pooling::kMax}) {
    f.config.pooling = pooling;
    Rng rng(6);
    auto block = make_residual_block<float>(f.config, "b", 4, 3, 7, rng);
    nn::Graph<float> g;
    const auto t = residual_block_trace(f.config, block, g.constant(f.input), f.hierarchy.levels[0]);
    const std::size_t d_pool = pooling == encoding::Pooling::kSeap ? 2 * 3 + 4 : 3 + 4;
    EXPECT_EQ(t.spatial.shape(), (Shape{20, 6, 4}));
    EXPECT_EQ(t.pooled1.shape(), (Shape{20, d_pool}));
    EXPECT_EQ(t.pooled2.shape(), (Shape{20, d_pool}));
    EXPECT_EQ(t.output.shape(), (Shape{20, 7}));
  }
}

TEST(ResidualBlockTest, DeadMainPathLeavesLeakyShortcut) {
  BlockFixture f;
  Rng rng(7);
  auto same = make_residual_block<float>(f.config, "b", 4, 3, 4, rng);
  ASSERT_FALSE(same.shortcut.has_value());
  same.project = zero_layer(same.project.in_features(), 4);
  nn::Graph<float> g;
  const Tensor y = residual_block(f.config, same, g.constant(f.input), f.hierarchy.levels[0]).value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const float x = f.input[i];
    EXPECT_FLOAT_EQ(y[i], x > 0 ? x : 0.2f * x);
  }

  auto wide = make_residual_block<float>(f.config, "w", 4, 3, 6, rng);
  ASSERT_TRUE(wide.shortcut.has_value());
  wide.project = zero_layer(wide.project.in_features(), 6);
  const Tensor s = nn::mlp_forward(*wide.shortcut, f.input);
  nn::Graph<float> g2;
  const Tensor y2 = residual_block(f.config, wide, g2.constant(f.input), f.hierarchy.levels[0]).value();
  for (std::size_t i = 0; i < y2.size(); ++i) EXPECT_FLOAT_EQ(y2[i], s[i] > 0 ? s[i] : 0.2f * s[i]);
}

TEST(NetworkTest, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  const PointCloud cloud = checks::random_cloud(32, rng, 1.0, 3);
  const std::vector<float> w{1.0f, 2.0f, 0.5f};
  const auto check = checks::network_gradient_check(tiny_config(), cloud, 3, w);
  EXPECT_GT(check.report.checked, 500u);
  EXPECT_TRUE(check.report.passed()) << check.report.failures.size() << " failures, worst "
                                     << check.report.worst.parameter << " rel "
                                     << check.report.worst.relative_error;
}

TEST(NetworkTest, TwoPointCloud) {
  const std::array<float, 3> pts[] = {{0, 0, 0}, {1, 0, 0}};
  auto net = make_network<float>(tiny_config());
  const Tensor logits = network_forward(net, make_cloud(pts), 0);
  EXPECT_EQ(logits.shape(), (Shape{2, 3}));
  EXPECT_TRUE(logits.all_finite());
}

TEST(NetworkTest, DeterministicForSeed) {
  Rng rng(9);
  const PointCloud cloud = checks::random_cloud(50, rng);
  auto a = make_network<float>(tiny_config());
  auto b = make_network<float>(tiny_config());
  EXPECT_EQ(network_forward(a, cloud, 4), network_forward(b, cloud, 4));
}

TEST(NetworkTest, PointPermutationPermutesLogits) {
  Rng rng(10);
  const ModelConfig c = tiny_config();
  const PointCloud cloud = checks::random_cloud(60, rng);
  auto net = make_network<float>(c);
  const auto kept = draw_kept_sets(60, c, 2);
  const Tensor base = network_forward(net, build_hierarchy(cloud, c, kept));
  for (int t = 0; t < 5; ++t) {
    const auto perm = checks::random_permutation(60, rng);
    const Tensor y = network_forward(
        net, build_hierarchy(checks::permute_cloud(cloud, perm), c, checks::permute_kept_sets(kept, perm)));
    double worst = 0.0;
    for (std::size_t j = 0; j < 60; ++j) {
      for (std::size_t k = 0; k < 3; ++k) worst = std::max(worst, std::abs(double(y(j, k)) - base(perm[j], k)));
    }
    EXPECT_LE(worst, 1e-5);
  }
}

TEST(NetworkTest, TranslationInvariantAfterRecentering) {
  Rng rng(11);
  const ModelConfig c = tiny_config();
  const PointCloud cloud = checks::random_cloud(60, rng, 2.0);
  auto net = make_network<float>(c);
  const auto kept = draw_kept_sets(60, c, 2);
  const Tensor base = network_forward(net, build_hierarchy(cloud, c, kept));
  const Tensor moved = network_forward(
      net, build_hierarchy(checks::translated_recentered(cloud, {1000.0, -1000.0, 250.0}), c, kept));
  EXPECT_LE(checks::max_abs_diff(base, moved), 1e-4);
}

TEST(NetworkTest, EveryAblationProducesLogits) {
  Rng rng(12);
  const PointCloud cloud = checks::random_cloud(40, rng);
  for (auto a : {Ablation::kA1, Ablation::kA2, Ablation::kA3, Ablation::kFull}) {
    ModelConfig c = tiny_config();
    c.apply(a);
    EXPECT_EQ(c.variant(), a);
    EXPECT_EQ(parse_ablation(to_string(a)), a);
    auto net = make_network<float>(c);
    const Tensor y = network_forward(net, cloud, 0);
    EXPECT_EQ(y.shape(), (Shape{40, 3})) << to_string(a);
  }
  EXPECT_THROW(parse_ablation("a4"), ConfigError);
}

TEST(NetworkTest, InvalidConfigsRejected) {
  ModelConfig c = tiny_config();
  c.ratios = {0.5};
  EXPECT_THROW(make_network<float>(c), ConfigError);
  c = tiny_config();
  c.ratios = {0.0, 0.5};
  EXPECT_THROW(make_network<float>(c), ConfigError);
  c = tiny_config();
  c.num_classes = 1;
  EXPECT_THROW(make_network<float>(c), ConfigError);
}

TEST(LossTest, PerfectPredictionIsNearZero) {
  const Tensor z(Shape{2, 2}, {50, 0, 0, 50});
  EXPECT_NEAR(weighted_cross_entropy(z, std::vector<std::int32_t>{0, 1}, std::vector<float>{1, 1}), 0.0, 1e-9);
}

TEST(LossTest, UniformLogitsGiveLogC) {
  const Tensor z(Shape{3, 4});
  EXPECT_NEAR(weighted_cross_entropy(z, std::vector<std::int32_t>{0, 2, 3}, std::vector<float>(4, 1.0f)),
              std::log(4.0), 1e-6);
}

TEST(LossTest, WeightedFixture) {
  const Tensor z(Shape{2, 2}, {std::log(0.8f), std::log(0.2f), std::log(0.3f), std::log(0.7f)});
  const double expected = -(2.0 * std::log(0.8) + std::log(0.7)) / 2.0;
  const double l = weighted_cross_entropy(z, std::vector<std::int32_t>{0, 1}, std::vector<float>{2, 1});
  EXPECT_NEAR(l, expected, 1e-6);
  EXPECT_NEAR(l, 0.4014, 1e-4);
}

TEST(LossTest, ScalesWithWeightsAndIsNonNegative) {
  Rng rng(13);
  for (int t = 0; t < 20; ++t) {
    const Tensor z = random_tensor({10, 4}, rng, -5, 5);
    std::vector<std::int32_t> y(10);
    for (auto& v : y) v = static_cast<std::int32_t>(rng.below(4));
    std::vector<float> w(4);
    for (auto& v : w) v = static_cast<float>(rng.uniform(0.1, 3));
    std::vector<float> w2 = w;
    for (auto& v : w2) v *= 2.5f;
    const double l = weighted_cross_entropy(z, y, w);
    EXPECT_GE(l, 0.0);
    EXPECT_NEAR(weighted_cross_entropy(z, y, w2), 2.5 * l, 1e-5 * l + 1e-9);
  }
}

TEST(LossTest, IgnoredPointsDoNotCount) {
  const Tensor z(Shape{2, 2}, {0, 0, 9, -9});
  EXPECT_NEAR(weighted_cross_entropy(z, std::vector<std::int32_t>{1, kIgnoreLabel}, std::vector<float>{1, 1}),
              std::log(2.0), 1e-6);
  EXPECT_THROW(weighted_cross_entropy(z, std::vector<std::int32_t>{kIgnoreLabel, kIgnoreLabel},
                                      std::vector<float>{1, 1}),
               DataError);
}

TEST(LossTest, ClampedValueKeepsFullGradient) {
  nn::Graph<double> g;
  const auto z = g.input(BasicTensor<double>(Shape{1, 2}, {0.0, 100.0}));
  const auto l = weighted_cross_entropy(z, std::vector<std::int32_t>{0}, std::vector<float>{1, 1});
  EXPECT_NEAR(l.value()[0], -std::log(1e-12), 1e-9);
  g.backward(l);
  const auto grad = g.grad_of(z);
  EXPECT_NEAR(grad[0], -1.0, 1e-12);
  EXPECT_NEAR(grad[1], 1.0, 1e-12);
}

TEST(LossTest, BadArgumentsThrow) {
  const Tensor z(Shape{2, 2});
  const std::vector<float> w{1, 1};
  EXPECT_THROW(weighted_cross_entropy(z, std::vector<std::int32_t>{0, 2}, w), DataError);
  EXPECT_THROW(weighted_cross_entropy(z, std::vector<std::int32_t>{0, -1}, w), DataError);
  EXPECT_THROW(weighted_cross_entropy(z, std::vector<std::int32_t>{0}, w), DataError);
  EXPECT_THROW(weighted_cross_entropy(z, std::vector<std::int32_t>{0, 1}, std::vector<float>{1, 1, 1}), ConfigError);
  EXPECT_THROW(weighted_cross_entropy(z, std::vector<std::int32_t>{0, 1}, std::vector<float>{1, 0}), ConfigError);
}

TEST(ClassWeightsTest, InverseSqrtFrequencyWithUnitMean) {
  const auto w = class_weights_from_labels(std::vector<std::int32_t>{0, 1, 1, 1, 1, kIgnoreLabel}, 2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w[0], 4.0 / 3.0, 1e-6);
  EXPECT_NEAR(w[1], 2.0 / 3.0, 1e-6);
  const auto empty = class_weights_from_labels(std::vector<std::int32_t>{kIgnoreLabel}, 3);
  EXPECT_EQ(empty, std::vector<float>(3, 1.0f));
}

TEST(TrainTest, SplitIsDisjointAndSized) {
  std::vector<std::int32_t> y(100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::int32_t>(i % 3);
  y[5] = kIgnoreLabel;
  const auto s = split_labels(y, 0.2, 7);
  std::size_t val = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool in_train = s.train[i] != kIgnoreLabel, in_val = s.validation[i] != kIgnoreLabel;
    if (y[i] == kIgnoreLabel) {
      EXPECT_FALSE(in_train || in_val);
    } else {
      EXPECT_NE(in_train, in_val);
      EXPECT_EQ(in_train ? s.train[i] : s.validation[i], y[i]);
    }
    val += in_val;
  }
  EXPECT_EQ(val, 19u);
}

TEST(TrainTest, ZeroEpochsReturnsInitialModel) {
  Rng rng(14);
  const PointCloud cloud = checks::random_cloud(40, rng, 1.0, 3);
  ModelConfig c = tiny_config();
  c.train.epochs = 0;
  auto r = train(cloud, c);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.best_epoch, 0);
  auto fresh = make_network<float>(c);
  EXPECT_EQ(network_forward(r.model, cloud, 0), network_forward(fresh, cloud, 0));
  EXPECT_EQ(r.class_weights.size(), 3u);
}

TEST(TrainTest, LogsEveryEpochWithDecayingRate) {
  Rng rng(15);
  const PointCloud cloud = checks::random_cloud(60, rng, 1.0, 3);
  ModelConfig c = tiny_config();
  c.train.epochs = 3;
  int calls = 0;
  const auto r = train(cloud, c, [&](const EpochRecord&) { ++calls; });
  ASSERT_EQ(r.log.size(), 3u);
  EXPECT_EQ(calls, 3);
  for (int e = 0; e < 3; ++e) {
    EXPECT_EQ(r.log[e].epoch, e + 1);
    EXPECT_NEAR(r.log[e].lr, 0.01 * std::pow(0.95, e), 1e-12);
    EXPECT_TRUE(std::isfinite(r.log[e].loss));
  }
  EXPECT_GE(r.best_epoch, 1);
  double best = 0.0;
  for (const auto& e : r.log) best = std::max(best, e.miou);
  EXPECT_DOUBLE_EQ(r.best_miou, best);
}

TEST(TrainTest, UnlabeledDataRejected) {
  Rng rng(16);
  EXPECT_THROW(train(checks::random_cloud(20, rng), tiny_config()), DataError);
}

TEST(TrainTest, StepSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (int e = 1; e <= 50; ++e) {
    for (int s = 0; s < 8; ++s) seen.insert(step_seed(3, e, s));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(step_seed(3, 1, 0), step_seed(4, 1, 0));
}

}  // namespace
}  // namespace siesef::net
