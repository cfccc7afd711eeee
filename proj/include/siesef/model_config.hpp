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
#include <string>
#include <string_view>
#include <vector>

#include "siesef/else_encode.hpp"
#include "siesef/error.hpp"
#include "siesef/optim.hpp"
#include "siesef/seap_pool.hpp"

namespace siesef::net {

// Ablation variants: which of the enhanced spatial encoding and the adaptive
// pooling are switched on.
enum class Ablation {
  kA1,    // relative positions only, max pooling
  kA2,    // enhanced encoding, max pooling
  kA3,    // relative positions only, adaptive pooling
  kFull,  // enhanced encoding, adaptive pooling
};

inline std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::kA1: return "a1";
    case Ablation::kA2: return "a2";
    case Ablation::kA3: return "a3";
    case Ablation::kFull: return "full";
  }
  return "full";
}

inline Ablation parse_ablation(std::string_view s) {
  if (s == "a1") return Ablation::kA1;
  if (s == "a2") return Ablation::kA2;
  if (s == "a3") return Ablation::kA3;
  if (s == "full") return Ablation::kFull;
  throw ConfigError("unknown ablation '" + std::string(s) + "' (expected a1, a2, a3 or full)");
}

struct TrainOptions {
  int epochs = 100;
  // Optimizer steps per epoch; each step draws a fresh sampling hierarchy.
  int steps_per_epoch = 1;
  double validation_fraction = 0.2;
  nn::AdamOptions adam;
};

struct ModelConfig {
  int num_classes = 3;
  std::size_t k_neighbors = 16;
  std::size_t stem_width = 8;
  // One residual block per encoder level, followed by down-sampling.
  std::vector<std::size_t> widths{32, 64, 128, 256};
  std::vector<double> ratios{0.25, 0.25, 0.25, 0.25};
  std::size_t d_g = 16;  // spatial encoding width
  bool use_else = true;
  encoding::Pooling pooling = encoding::Pooling::kSeap;
  encoding::AngleNormalization angle_normalization = encoding::AngleNormalization::kL2;
  bool scalar_attention = false;  // one attention weight per neighbor
  std::size_t rbpc_expansion = 4;
  bool rbpc_activation = true;  // leaky ReLU after the expansion layer
  std::size_t head_width = 32;
  // Stem input scaled to unit RMS radius around the centroid.
  bool normalize_input = true;
  std::vector<float> class_weights;  // empty: derived from the training split
  TrainOptions train;
  std::uint64_t seed = 0;

  std::size_t levels() const noexcept { return widths.size(); }
  std::size_t semantic_width(std::size_t level) const {
    return std::max<std::size_t>(1, widths.at(level) / 2);
  }

  encoding::SpatialOptions spatial_options() const {
    return {use_else, angle_normalization};
  }

  void apply(Ablation a) {
    use_else = a == Ablation::kA2 || a == Ablation::kFull;
    pooling = (a == Ablation::kA3 || a == Ablation::kFull) ? encoding::Pooling::kSeap
                                                            : encoding::Pooling::kMax;
  }

  Ablation variant() const {
    const bool seap = pooling == encoding::Pooling::kSeap;
    if (use_else) return seap ? Ablation::kFull : Ablation::kA2;
    return seap ? Ablation::kA3 : Ablation::kA1;
  }

  void validate() const {
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
    if (widths.empty()) throw ConfigError("at least one encoder level is required");
    if (ratios.size() != widths.size()) {
      throw ConfigError("ratios (" + std::to_string(ratios.size()) + ") and widths (" +
                        std::to_string(widths.size()) + ") must have equal length");
    }
    for (double r : ratios) {
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("downsample ratios must lie in (0, 1]");
    }
    for (auto w : widths) {
      if (w == 0) throw ConfigError("encoder widths must be positive");
    }
    if (stem_width == 0 || d_g == 0 || head_width == 0 || rbpc_expansion == 0) {
      throw ConfigError("stem_width, d_g, head_width and rbpc_expansion must be positive");
    }
    if (!class_weights.empty()) {
      if (class_weights.size() != static_cast<std::size_t>(num_classes)) {
        throw ConfigError("class_weights must have num_classes entries");
      }
      for (float w : class_weights) {
        if (!(w > 0.0f)) throw ConfigError("class_weights must be positive");
      }
    }
    if (train.epochs < 0) throw ConfigError("epochs must be non-negative");
    if (train.steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be at least 1");
    if (!(train.validation_fraction >= 0.0 && train.validation_fraction < 1.0)) {
      throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    if (!(train.adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(train.adam.decay_per_epoch >= 0.0 && train.adam.decay_per_epoch < 1.0)) {
      throw ConfigError("lr decay must lie in [0, 1)");
    }
  }
};

}  // namespace siesef::net
