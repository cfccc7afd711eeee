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
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "siesef/autodiff.hpp"
#include "siesef/gradcheck.hpp"
#include "siesef/layers.hpp"
#include "siesef/random.hpp"

namespace siesef::nn {
namespace {

using DTensor = BasicTensor<double>;
using Op = std::function<Var<double>(Graph<double>&, std::vector<Var<double>>&)>;

DTensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  DTensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Projects `op`'s output onto fixed random weights so every output element
// contributes, then compares backward() with central differences at h=1e-3.
GradientCheckReport check_op(std::vector<Parameter<double>>& inputs, const Op& op, std::uint64_t seed) {
  std::vector<Parameter<double>*> ptrs;
  for (auto& p : inputs) ptrs.push_back(&p);
  DTensor projection;
  PiecewisePattern pattern;
  auto evaluate = [&](Graph<double>& g) {
    std::vector<Var<double>> vars;
    for (auto* p : ptrs) vars.push_back(g.parameter(*p));
    const Var<double> out = op(g, vars);
    if (projection.empty()) {
      Rng rng(seed);
      projection = random_tensor(out.shape(), rng);
    }
    return sum_all(mul(out, g.constant(projection)));
  };
  for (auto* p : ptrs) p->zero_grad();
  {
    Graph<double> g;
    g.record_pattern(&pattern);
    g.backward(evaluate(g));
  }
  std::vector<DTensor> analytic;
  for (auto* p : ptrs) analytic.push_back(p->grad);
  auto loss = [&] {
    Graph<double> g;
    g.replay_pattern(&pattern);
    return evaluate(g).value()[0];
  };
  return check_gradients(std::span<Parameter<double>* const>(ptrs),
                         std::span<const DTensor>(analytic), loss);
}

class OpGradientTest : public ::testing::Test {
 protected:
  Rng rng{123};
  Parameter<double> param(const char* name, Shape s) { return Parameter<double>(name, random_tensor(std::move(s), rng)); }

  void expect_passes(std::vector<Parameter<double>> in, const Op& op) {
    const auto r = check_op(in, op, 99);
    EXPECT_TRUE(r.passed()) << r.failures.size() << " failures; worst " << r.worst.parameter << "["
                            << r.worst.index << "] analytic " << r.worst.analytic << " numeric "
                            << r.worst.numeric;
    EXPECT_GT(r.checked, 0u);
  }
};

TEST_F(OpGradientTest, Matmul) {
  expect_passes({param("x", {3, 2, 4}), param("w", {4, 5})},
                [](auto&, auto& v) { return matmul(v[0], v[1]); });
}

TEST_F(OpGradientTest, AddBias) {
  expect_passes({param("x", {3, 4, 2}), param("b", {2})},
                [](auto&, auto& v) { return add_bias(v[0], v[1]); });
}

TEST_F(OpGradientTest, LeakyRelu) {
  expect_passes({param("x", {6, 5})}, [](auto&, auto& v) { return leaky_relu(v[0], 0.2); });
}

TEST_F(OpGradientTest, ElementwiseAddSubMulScale) {
  expect_passes({param("a", {4, 3}), param("b", {4, 3})}, [](auto&, auto& v) {
    return scale(mul(add(v[0], v[1]), sub(v[0], v[1])), 1.7);
  });
}

TEST_F(OpGradientTest, Concat) {
  expect_passes({param("a", {2, 3, 1}), param("b", {2, 3, 4})},
                [](auto&, auto& v) { return concat<double>({v[0], v[1], v[0]}); });
}

TEST_F(OpGradientTest, SoftmaxEveryAxis) {
  for (std::size_t axis = 0; axis < 3; ++axis) {
    expect_passes({param("x", {3, 4, 2})}, [axis](auto&, auto& v) { return softmax(v[0], axis); });
  }
}

TEST_F(OpGradientTest, SumAndMaxReductions) {
  expect_passes({param("x", {3, 5, 2})}, [](auto&, auto& v) { return sum(v[0], 1); });
  expect_passes({param("x", {3, 5, 2})}, [](auto&, auto& v) { return max(v[0], 1); });
}

TEST_F(OpGradientTest, GatherRowsWithRepeats) {
  expect_passes({param("x", {4, 3})}, [](auto&, auto& v) {
    return gather_rows(v[0], {0, 2, 2, 3, 1, 0}, Shape{2, 3});
  });
}

TEST_F(OpGradientTest, MlpStackComposition) {
  Rng r(8);
  auto l1 = make_layer<double>("a", 3, 4, Activation::kLeakyRelu, r);
  auto l2 = make_layer<double>("b", 4, 2, Activation::kIdentity, r);
  std::vector<Parameter<double>> in{param("x", {5, 3}), l1.weights, l1.bias, l2.weights, l2.bias};
  expect_passes(in, [](auto&, auto& v) {
    return add_bias(matmul(leaky_relu(add_bias(matmul(v[0], v[1]), v[2]), 0.2), v[3]), v[4]);
  });
}

TEST(BackwardTest, SumGivesOnes) {
  Graph<double> g;
  Rng rng(1);
  const auto x = g.input(random_tensor({3, 4}, rng));
  g.backward(sum_all(x));
  const auto grad = g.grad_of(x);
  for (double v : grad.data()) EXPECT_EQ(v, 1.0);
}

TEST(BackwardTest, HalfSquareGivesIdentity) {
  Graph<double> g;
  Rng rng(2);
  const DTensor xv = random_tensor({5}, rng);
  const auto x = g.input(xv);
  g.backward(scale(sum_all(mul(x, x)), 0.5));
  const DTensor gx = g.grad_of(x);
  for (std::size_t i = 0; i < xv.size(); ++i) EXPECT_DOUBLE_EQ(gx[i], xv[i]);
}

TEST(BackwardTest, WithoutForwardIsStateError) {
  Graph<double> g;
  EXPECT_THROW(g.backward(Var<double>()), StateError);
  const auto x = g.input(DTensor(Shape{1}, 2.0));
  g.backward(x);
  EXPECT_THROW(g.backward(x), StateError);
}

TEST(BackwardTest, NonScalarLossIsShapeError) {
  Graph<double> g;
  const auto x = g.input(DTensor(Shape{2}, 1.0));
  EXPECT_THROW(g.backward(x), ShapeError);
}

TEST(BackwardTest, ParameterGradientsAccumulateAcrossUses) {
  Parameter<double> p("p", DTensor(Shape{2}, {1.0, -3.0}));
  Graph<double> g;
  const auto a = g.parameter(p);
  const auto b = g.parameter(p);
  g.backward(sum_all(add(a, scale(b, 2.0))));
  EXPECT_EQ(p.grad, DTensor(Shape{2}, {3.0, 3.0}));
}

TEST(BackwardTest, NonFiniteForwardIsNumericError) {
  Graph<double> g;
  const auto x = g.input(DTensor(Shape{1}, 1e308));
  EXPECT_THROW(scale(x, 10.0), NumericError);
}

TEST(BackwardTest, DeterministicGradients) {
  auto run = [] {
    Rng rng(3);
    auto layer = make_layer<float>("l", 4, 3, Activation::kLeakyRelu, rng);
    Graph<float> g;
    BasicTensor<float> x(Shape{7, 4});
    for (auto& v : x.data()) v = static_cast<float>(rng.uniform(-1, 1));
    g.backward(sum_all(softmax(apply(layer, g.constant(x)), 0)));
    return std::make_pair(layer.weights.grad, layer.bias.grad);
  };
  EXPECT_EQ(run(), run());
}

TEST(PatternTest, ReplayedMismatchIsStateError) {
  PiecewisePattern pattern;
  {
    Graph<double> g;
    g.record_pattern(&pattern);
    leaky_relu(g.input(DTensor(Shape{3}, 1.0)), 0.2);
  }
  Graph<double> g;
  g.replay_pattern(&pattern);
  EXPECT_THROW(leaky_relu(g.input(DTensor(Shape{4}, 1.0)), 0.2), StateError);
}

TEST(PatternTest, ReplayKeepsRecordedBranch) {
  PiecewisePattern pattern;
  {
    Graph<double> g;
    g.record_pattern(&pattern);
    leaky_relu(g.input(DTensor(Shape{1}, 0.5)), 0.2);
  }
  Graph<double> g;
  g.replay_pattern(&pattern);
  const auto y = leaky_relu(g.input(DTensor(Shape{1}, -1.0)), 0.2);
  EXPECT_DOUBLE_EQ(y.value()[0], -1.0);  // positive branch even below zero
}

TEST(GradcheckTest, RelativeErrorUsesFloor) {
  EXPECT_DOUBLE_EQ(gradient_relative_error(0.0, 1e-6, 1e-4), 1e-2);
  EXPECT_DOUBLE_EQ(gradient_relative_error(2.0, 1.0, 1e-4), 0.5);
}

TEST(GradcheckTest, DetectsWrongGradient) {
  Parameter<double> p("p", DTensor(Shape{2}, {1.0, 2.0}));
  std::vector<Parameter<double>*> ps{&p};
  const std::vector<DTensor> wrong{DTensor(Shape{2}, {2.0, 5.0})};  // true gradient is 2p = {2, 4}
  auto loss = [&] { return p.value[0] * p.value[0] + p.value[1] * p.value[1]; };
  const auto r = check_gradients(std::span<Parameter<double>* const>(ps), std::span<const DTensor>(wrong), loss);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].index, 1u);
}

}  // namespace
}  // namespace siesef::nn
