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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "siesef/autodiff.hpp"

namespace siesef::nn {

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Multiplicative learning-rate reduction applied at each epoch boundary.
  double decay_per_epoch = 0.05;
};

// Learning rate after `epochs` completed epochs.
inline double decayed_learning_rate(double initial, double decay, int epochs) {
  return initial * std::pow(1.0 - decay, epochs);
}

// Adam moments for a fixed, ordered parameter list.
template <class T>
class AdamState {
 public:
  AdamState(std::span<Parameter<T>* const> params, AdamOptions options = {})
      : options_(options), lr_(options.learning_rate) {
    for (const auto* p : params) {
      first_.emplace_back(p->value.shape());
      second_.emplace_back(p->value.shape());
    }
  }

  // One update from the gradients stored on each parameter. Non-finite
  // gradients abort the step before any parameter changes.
  void step(std::span<Parameter<T>* const> params) {
    if (params.size() != first_.size()) {
      throw ShapeError("adam: " + std::to_string(params.size()) +
                       " parameters given, state tracks " +
                       std::to_string(first_.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Parameter<T>& p = *params[i];
      if (p.grad.shape() != p.value.shape() || p.value.shape() != first_[i].shape()) {
        throw ShapeError("adam: gradient shape " + to_string(p.grad.shape()) +
                         " does not match parameter '" + p.name + "' " +
                         to_string(p.value.shape()));
      }
      if (!p.grad.all_finite()) {
        throw NumericError("adam: non-finite gradient in parameter '" + p.name + "'");
      }
    }
    ++steps_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter<T>& p = *params[i];
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = static_cast<double>(p.grad[j]);
        const double m = b1 * static_cast<double>(first_[i][j]) + (1.0 - b1) * g;
        const double v = b2 * static_cast<double>(second_[i][j]) + (1.0 - b2) * g * g;
        first_[i][j] = static_cast<T>(m);
        second_[i][j] = static_cast<T>(v);
        const double update = lr_ * (m / c1) / (std::sqrt(v / c2) + options_.epsilon);
        p.value[j] = static_cast<T>(static_cast<double>(p.value[j]) - update);
      }
    }
  }

  void end_epoch() {
    ++epochs_;
    lr_ = decayed_learning_rate(options_.learning_rate, options_.decay_per_epoch,
                                epochs_);
  }

  double learning_rate() const noexcept { return lr_; }
  std::uint64_t steps() const noexcept { return steps_; }
  int epochs() const noexcept { return epochs_; }
  const BasicTensor<T>& first_moment(std::size_t i) const { return first_.at(i); }
  const BasicTensor<T>& second_moment(std::size_t i) const { return second_.at(i); }

 private:
  AdamOptions options_;
  double lr_;
  std::uint64_t steps_ = 0;
  int epochs_ = 0;
  std::vector<BasicTensor<T>> first_;
  std::vector<BasicTensor<T>> second_;
};

template <class T>
void zero_grad(std::span<Parameter<T>* const> params) {
  for (auto* p : params) p->zero_grad();
}

}  // namespace siesef::nn
