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
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "siesef/else_encode.hpp"
#include "siesef/invariants.hpp"

namespace siesef::encoding {
namespace {

constexpr double kInvSqrt3 = 0.57735026918962576;

Tensor delta(float x, float y, float z) { return Tensor(Shape{1, 1, 3}, {x, y, z}); }

TEST(InverseDistanceTest, EqualDistancesSplitEvenly) {
  const Tensor w = inverse_distance_weights(Tensor(Shape{1, 2}, {0.7f, 0.7f}));
  EXPECT_EQ(w.shape(), (Shape{1, 2, 1}));
  EXPECT_FLOAT_EQ(w[0], 0.5f);
  EXPECT_FLOAT_EQ(w[1], 0.5f);
}

TEST(InverseDistanceTest, ZeroAndTen) {
  const Tensor w = inverse_distance_weights(Tensor(Shape{1, 2}, {0.0f, 10.0f}));
  const double s0 = 1.0 / (1.0 + std::exp(10.0));
  EXPECT_NEAR(w[0], 1.0 - s0, 1e-6);
  EXPECT_NEAR(w[1], s0, 1e-6);
  EXPECT_NEAR(w[1], 4.54e-5, 1e-7);
}

TEST(InverseDistanceTest, SingletonIsZero) {
  EXPECT_EQ(inverse_distance_weights(Tensor(Shape{3, 1}, {0.0f, 2.0f, 9.0f})), Tensor(Shape{3, 1, 1}));
}

TEST(InverseDistanceTest, RangeAndSum) {
  Rng rng(1);
  Tensor d(Shape{20, 9});
  for (auto& v : d.data()) v = static_cast<float>(rng.uniform(0, 3));
  const Tensor w = inverse_distance_weights(d);
  for (std::size_t i = 0; i < 20; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
      EXPECT_GE(w(i, k, 0), 0.0f);
      EXPECT_LT(w(i, k, 0), 1.0f);
      sum += w(i, k, 0);
    }
    EXPECT_NEAR(sum, 8.0, 1e-5);
  }
}

TEST(InverseDistanceTest, StrictlyMonotone) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + rng.below(20);
    Tensor d(Shape{1, k});
    double acc = rng.uniform(0, 0.1);
    for (std::size_t s = 0; s < k; ++s) {
      d[s] = static_cast<float>(acc);
      acc += rng.uniform(0.01, 1.0);
    }
    const Tensor w = inverse_distance_weights(d);
    for (std::size_t s = 1; s < k; ++s) ASSERT_GT(w[s - 1], w[s]);
  }
}

TEST(InverseDistanceTest, RejectsBadInput) {
  EXPECT_THROW(inverse_distance_weights(Tensor(Shape{2, 2, 1})), ShapeError);
  EXPECT_THROW(inverse_distance_weights(Tensor(Shape{1, 2}, {0.0f, NAN})), NumericError);
}

TEST(AngleTest, UnitX) {
  const Tensor a = angle_compensation(delta(1, 0, 0));
  const float e[6] = {0, static_cast<float>(kInvSqrt3), 0, static_cast<float>(kInvSqrt3), 0,
                      static_cast<float>(kInvSqrt3)};
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(a[c], e[c], 1e-6) << c;
}

TEST(AngleTest, UnitY) {
  const Tensor a = angle_compensation(delta(0, 1, 0));
  const float e[6] = {1, 0, 0, 1, 0, 1};
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(a[c], e[c] * kInvSqrt3, 1e-6) << c;
}

TEST(AngleTest, ZeroDeltaMatchesUnitX) {
  EXPECT_EQ(angle_compensation(delta(0, 0, 0)), angle_compensation(delta(1, 0, 0)));
  EXPECT_EQ(angle_compensation(delta(-0.0f, 0, -0.0f)), angle_compensation(delta(1, 0, 0)));
}

TEST(AngleTest, UnitNormEverywhere) {
  Rng rng(3);
  Tensor d(Shape{50, 4, 3});
  for (auto& v : d.data()) v = static_cast<float>(rng.uniform(-2, 2));
  const Tensor a = angle_compensation(d);
  for (std::size_t r = 0; r < 200; ++r) {
    double sq = 0.0;
    for (int c = 0; c < 6; ++c) sq += a[6 * r + c] * a[6 * r + c];
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-5);
  }
}

TEST(AngleTest, MinMaxAlternative) {
  const Tensor a = angle_compensation(delta(0, 1, 0), AngleNormalization::kMinMax);
  const float e[6] = {1, 0.5f, 0.5f, 1, 0.5f, 1};
  for (int c = 0; c < 6; ++c) EXPECT_NEAR(a[c], e[c], 1e-6) << c;
}

TEST(AngleTest, ContinuousAcrossQuarterTurn) {
  // Plain arctan(dy/dx) jumps from +pi/2 to -pi/2 here; sin/cos do not.
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const double base = (rng.uniform() < 0.5 ? 0.5 : -0.5) * std::numbers::pi;
    const double a0 = base - 5e-5, a1 = base + 5e-5;
    const double r = rng.uniform(0.1, 3.0), z = rng.uniform(-1, 1);
    const Tensor p = angle_compensation(delta(static_cast<float>(r * std::cos(a0)), static_cast<float>(r * std::sin(a0)), static_cast<float>(z)));
    const Tensor q = angle_compensation(delta(static_cast<float>(r * std::cos(a1)), static_cast<float>(r * std::sin(a1)), static_cast<float>(z)));
    ASSERT_LT(std::abs(p[0] - q[0]), 1e-3);
    ASSERT_LT(std::abs(p[1] - q[1]), 1e-3);
  }
}

// Descriptor assembled with plain loops from the definitions.
std::vector<double> oracle_descriptor(const PointCloud& c, const nbhd::NeighborhoodIndex& idx, std::size_t i,
                                      std::size_t s) {
  const auto p = c.point(i), q = c.point(idx.id(i, s));
  const double dx = q[0] - p[0], dy = q[1] - p[1], dz = q[2] - p[2];
  double denom = 0.0;
  for (std::size_t k = 0; k < idx.k; ++k) denom += std::exp(idx.distance(i, k));
  const double dtil = 1.0 - std::exp(idx.distance(i, s)) / denom;
  auto ang = [](double y, double x) { return (y == 0 && x == 0) ? 0.0 : std::atan2(y, x); };
  const double t[3] = {ang(dy, dx), ang(dz, dy), ang(dz, dx)};
  double v[6], n = 0.0;
  for (int k = 0; k < 3; ++k) {
    v[2 * k] = std::sin(t[k]);
    v[2 * k + 1] = std::cos(t[k]);
  }
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  std::vector<double> out{dx, dy, dz, dtil};
  for (double x : v) out.push_back(x / n);
  return out;
}

TEST(DescriptorTest, MatchesScalarOracle) {
  Rng rng(5);
  const PointCloud c = checks::random_cloud(64, rng);
  const auto idx = nbhd::knn_search(c, 16);
  const Tensor d = descriptor_tensor(c, idx);
  ASSERT_EQ(d.shape(), (Shape{64, 16, 10}));
  for (std::size_t i = 0; i < 64; ++i) {
    for (std::size_t s = 0; s < 16; ++s) {
      const auto e = oracle_descriptor(c, idx, i, s);
      for (std::size_t ch = 0; ch < 10; ++ch) ASSERT_NEAR(d(i, s, ch), e[ch], 1e-5);
    }
  }
}

TEST(DescriptorTest, SelfSlotHasZeroDelta) {
  Rng rng(6);
  const PointCloud c = checks::random_cloud(20, rng);
  const auto sd = spatial_descriptor(c, nbhd::knn_search(c, 5));
  for (std::size_t i = 0; i < 20; ++i) {
    for (int a = 0; a < 3; ++a) EXPECT_EQ(sd.relative_pos(i, 0, a), 0.0f);
  }
}

TEST(DescriptorTest, BasicVariantIsRelativePosition) {
  Rng rng(7);
  const PointCloud c = checks::random_cloud(20, rng);
  const auto idx = nbhd::knn_search(c, 5);
  EXPECT_EQ(descriptor_tensor(c, idx, {false, AngleNormalization::kL2}), relative_positions(c, idx));
}

TEST(DescriptorTest, CoincidentNeighborhoodIsUniform) {
  const std::vector<std::array<float, 3>> pts(4, {1.0f, 2.0f, 3.0f});
  const PointCloud c = make_cloud(pts);
  const Tensor d = descriptor_tensor(c, nbhd::knn_search(c, 4));
  for (std::size_t r = 1; r < 16; ++r) {
    for (std::size_t ch = 0; ch < 10; ++ch) EXPECT_EQ(d[10 * r + ch], d[ch]);
  }
  EXPECT_FLOAT_EQ(d[3], 0.75f);
}

TEST(ElseForwardTest, IdentityMlpReturnsDescriptor) {
  Rng rng(8);
  const PointCloud c = checks::random_cloud(30, rng);
  const auto idx = nbhd::knn_search(c, 6);
  const std::vector<nn::MlpLayer<float>> mlp{nn::identity_layer<float>("id", 10)};
  EXPECT_EQ(else_forward(c, idx, mlp), descriptor_tensor(c, idx));
}

TEST(ElseForwardTest, TranslationInvariant) {
  Rng rng(9);
  const PointCloud c = checks::random_cloud(40, rng);
  PointCloud moved = c;
  const float off[3] = {5.0f, -2.0f, 7.0f};
  for (std::size_t i = 0; i < moved.positions.size(); ++i) moved.positions[i] += off[i % 3];
  const std::vector<nn::MlpLayer<float>> mlp{nn::make_layer<float>("g", 10, 16, nn::Activation::kLeakyRelu, rng)};
  const Tensor a = else_forward(c, nbhd::knn_search(c, 8), mlp);
  const Tensor b = else_forward(moved, nbhd::knn_search(moved, 8), mlp);
  EXPECT_LE(checks::max_abs_diff(a, b), 1e-5);
}

TEST(ElseForwardTest, RotationChangesOutput) {
  Rng rng(10);
  const PointCloud c = checks::random_cloud(40, rng);
  const PointCloud r = checks::rotated_about_z(c, 0.7);
  const auto ia = nbhd::knn_search(c, 8), ib = nbhd::knn_search(r, 8);
  ASSERT_EQ(ia.neighbor_ids, ib.neighbor_ids);
  EXPECT_GT(checks::max_abs_diff(descriptor_tensor(c, ia), descriptor_tensor(r, ib)), 1e-3);
}

TEST(ElseForwardTest, NeighborPermutationPermutesRows) {
  Rng rng(11);
  const PointCloud c = checks::random_cloud(25, rng);
  nbhd::NeighborhoodIndex idx = nbhd::knn_search(c, 6);
  const std::vector<nn::MlpLayer<float>> mlp{nn::make_layer<float>("g", 10, 4, nn::Activation::kLeakyRelu, rng)};
  const Tensor a = else_forward(c, idx, mlp);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  nbhd::NeighborhoodIndex p = idx;
  for (std::size_t i = 0; i < 25; ++i) {
    for (std::size_t s = 0; s < 6; ++s) {
      p.neighbor_ids[i * 6 + s] = idx.id(i, perm[s]);
      p.distances[i * 6 + s] = idx.distance(i, perm[s]);
    }
  }
  const Tensor b = else_forward(c, p, mlp);
  for (std::size_t i = 0; i < 25; ++i) {
    for (std::size_t s = 0; s < 6; ++s) {
      for (std::size_t ch = 0; ch < 4; ++ch) EXPECT_NEAR(b(i, s, ch), a(i, perm[s], ch), 1e-6);
    }
  }
}

TEST(ElseForwardTest, MismatchedWidthThrows) {
  Rng rng(12);
  const PointCloud c = checks::random_cloud(10, rng);
  const std::vector<nn::MlpLayer<float>> mlp{nn::make_layer<float>("g", 3, 4, nn::Activation::kLeakyRelu, rng)};
  EXPECT_THROW(else_forward(c, nbhd::knn_search(c, 4), mlp), ShapeError);
  EXPECT_THROW(else_forward(c, nbhd::knn_search(checks::random_cloud(11, rng), 4), mlp), ShapeError);
}

}  // namespace
}  // namespace siesef::encoding
