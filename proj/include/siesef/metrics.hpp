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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siesef/error.hpp"
#include "siesef/point_cloud.hpp"

namespace siesef::metrics {

// How a class absent from both ground truth and prediction enters the mean.
enum class UndefinedClassPolicy {
  kExclude,  // dropped from the mean
  kZero,     // counted with IoU 0
};

// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
    if (num_classes < 1) throw ConfigError("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  }

  int num_classes() const noexcept { return num_classes_; }

  std::uint64_t at(int truth, int predicted) const {
    return counts_.at(static_cast<std::size_t>(truth) * num_classes_ + predicted);
  }

  // Points whose label is kIgnoreLabel are skipped; any other value outside
  // [0, C) in either array is an error and leaves the matrix unchanged.
  void accumulate(std::span<const std::int32_t> predictions,
                  std::span<const std::int32_t> labels) {
    if (predictions.size() != labels.size()) {
      throw DataError("prediction count " + std::to_string(predictions.size()) +
                      " does not match label count " + std::to_string(labels.size()));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == kIgnoreLabel) continue;
      check_class(labels[i], "label", i);
      check_class(predictions[i], "prediction", i);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == kIgnoreLabel) continue;
      ++counts_[static_cast<std::size_t>(labels[i]) * num_classes_ + predictions[i]];
    }
  }

  void merge(const ConfusionMatrix& other) {
    if (other.num_classes_ != num_classes_) throw DataError("merging matrices of different class counts");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  std::uint64_t row_sum(int truth) const {
    std::uint64_t s = 0;
    for (int c = 0; c < num_classes_; ++c) s += at(truth, c);
    return s;
  }

  std::uint64_t col_sum(int predicted) const {
    std::uint64_t s = 0;
    for (int r = 0; r < num_classes_; ++r) s += at(r, predicted);
    return s;
  }

  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  void check_class(std::int32_t v, const char* what, std::size_t i) const {
    if (v < 0 || v >= num_classes_) {
      throw DataError(std::string(what) + " " + std::to_string(v) + " at index " +
                      std::to_string(i) + " outside [0, " + std::to_string(num_classes_) + ")");
    }
  }

  int num_classes_;
  std::vector<std::uint64_t> counts_;
};

// TP / (TP + FP + FN) per class; nullopt where the denominator is zero.
inline std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm) {
  std::vector<std::optional<double>> out;
  for (int j = 0; j < cm.num_classes(); ++j) {
    const std::uint64_t tp = cm.at(j, j);
    const std::uint64_t fn = cm.row_sum(j) - tp;
    const std::uint64_t fp = cm.col_sum(j) - tp;
    const std::uint64_t denom = tp + fp + fn;
    if (denom == 0) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(static_cast<double>(tp) / static_cast<double>(denom));
    }
  }
  return out;
}

inline double mean_iou(std::span<const std::optional<double>> ious,
                       UndefinedClassPolicy policy = UndefinedClassPolicy::kExclude) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& v : ious) {
    if (v) {
      sum += *v;
      ++counted;
    } else if (policy == UndefinedClassPolicy::kZero) {
      ++counted;
    }
  }
  if (counted == 0 || std::none_of(ious.begin(), ious.end(), [](const auto& v) { return v.has_value(); })) {
    throw DataError("mIoU undefined: no class appears in truth or prediction");
  }
  return sum / static_cast<double>(counted);
}

inline double miou(const ConfusionMatrix& cm,
                   UndefinedClassPolicy policy = UndefinedClassPolicy::kExclude) {
  const auto ious = per_class_iou(cm);
  return mean_iou(ious, policy);
}

// trace / total.
inline double overall_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("overall accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (int j = 0; j < cm.num_classes(); ++j) trace += cm.at(j, j);
  return static_cast<double>(trace) / static_cast<double>(total);
}

}  // namespace siesef::metrics
