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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "siesef/checkpoint.hpp"
#include "siesef/loss.hpp"
#include "siesef/metrics.hpp"
#include "siesef/model_config.hpp"
#include "siesef/network.hpp"
#include "siesef/optim.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/random.hpp"

namespace siesef::net {

struct EpochRecord {
  int epoch = 0;      // 1-based
  double lr = 0.0;    // learning rate used during the epoch
  double loss = 0.0;  // mean training loss over the epoch's steps
  double oa = 0.0;    // validation overall accuracy
  double miou = 0.0;  // validation mIoU
};

// Labels split into two ignore-masked copies: a point is labeled in exactly
// one of them. `validation_fraction` of the labeled points (rounded down)
// go to validation, chosen uniformly by `seed`.
struct LabelSplit {
  std::vector<std::int32_t> train;
  std::vector<std::int32_t> validation;
};

inline LabelSplit split_labels(std::span<const std::int32_t> labels, double validation_fraction,
                               std::uint64_t seed) {
  std::vector<std::uint32_t> labeled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kIgnoreLabel) labeled.push_back(static_cast<std::uint32_t>(i));
  }
  LabelSplit s{std::vector<std::int32_t>(labels.begin(), labels.end()),
               std::vector<std::int32_t>(labels.size(), kIgnoreLabel)};
  const auto n_val = static_cast<std::size_t>(static_cast<double>(labeled.size()) * validation_fraction);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_val; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(labeled.size() - i));
    std::swap(labeled[i], labeled[j]);
    const auto id = labeled[i];
    s.validation[id] = labels[id];
    s.train[id] = kIgnoreLabel;
  }
  return s;
}

inline metrics::ConfusionMatrix evaluate(Network<float>& net, const Hierarchy& h,
                                         std::span<const std::int32_t> labels) {
  const Tensor logits = network_forward(net, h);
  metrics::ConfusionMatrix cm(net.config.num_classes);
  const auto pred = predict(logits);
  cm.accumulate(pred, labels);
  return cm;
}

struct TrainResult {
  Network<float> model;  // weights of the best validation mIoU epoch
  std::vector<EpochRecord> log;
  int best_epoch = 0;    // 0 when no epoch ran
  double best_miou = 0.0;
  std::vector<float> class_weights;
};

inline std::uint64_t step_seed(std::uint64_t seed, int epoch, int step) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch) * 1000003ULL +
                    static_cast<std::uint64_t>(step) + 1;
  x ^= x >> 31;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 29;
  return x;
}

// Adam training on one labeled cloud with per-epoch learning-rate decay.
// Each step draws a fresh random sampling hierarchy; validation always uses
// the hierarchy of `config.seed`.
inline TrainResult train(const PointCloud& data, const ModelConfig& config,
                         const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  config.validate();
  data.validate(config.num_classes);
  if (!data.has_labels()) throw DataError("training data has no labels");

  TrainResult result;
  result.model = make_network<float>(config);
  const LabelSplit split = split_labels(data.labels, config.train.validation_fraction, config.seed);
  const bool has_validation = std::any_of(split.validation.begin(), split.validation.end(),
                                          [](auto l) { return l != kIgnoreLabel; });
  const std::vector<std::int32_t>& val_labels = has_validation ? split.validation : split.train;
  result.class_weights = config.class_weights.empty()
                             ? class_weights_from_labels(split.train, config.num_classes)
                             : config.class_weights;
  if (config.train.epochs == 0) return result;

  Network<float>& net = result.model;
  auto params = net.parameters();
  nn::AdamState<float> adam(params, config.train.adam);
  const Hierarchy val_hierarchy = build_hierarchy(data, config, config.seed);
  std::vector<nn::NamedTensor> best = nn::snapshot(params);
  result.best_miou = -1.0;

  for (int epoch = 1; epoch <= config.train.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.learning_rate();
    double loss_sum = 0.0;
    for (int step = 0; step < config.train.steps_per_epoch; ++step) {
      try {
        const Hierarchy h = build_hierarchy(data, config, step_seed(config.seed, epoch, step));
        nn::Graph<float> g;
        const nn::Var<float> logits = network_forward(g, net, h);
        const nn::Var<float> loss = weighted_cross_entropy(logits, split.train, result.class_weights);
        nn::zero_grad<float>(params);
        g.backward(loss);
        adam.step(params);
        loss_sum += loss.value()[0];
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(step) + ": " + e.what());
      }
    }
    adam.end_epoch();
    rec.loss = loss_sum / config.train.steps_per_epoch;
    const metrics::ConfusionMatrix cm = evaluate(net, val_hierarchy, val_labels);
    rec.oa = metrics::overall_accuracy(cm);
    rec.miou = metrics::miou(cm);
    if (rec.miou > result.best_miou) {
      result.best_miou = rec.miou;
      result.best_epoch = epoch;
      best = nn::snapshot(params);
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  nn::restore(params, best);
  return result;
}

}  // namespace siesef::net
