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
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>

#include "json.hpp"

#include "siesef/binary.hpp"
#include "siesef/error.hpp"
#include "siesef/model_config.hpp"
#include "siesef/scene.hpp"

// Run configuration: one JSON document holding the model, the optimizer and
// the data source. Unknown keys are rejected so that typos do not silently
// fall back to defaults.
//
//   {
//     "seed": 0,
//     "ablation": "full",
//     "model": { "num_classes": 3, "k_neighbors": 16, "widths": [...], ... },
//     "train": { "epochs": 50, "learning_rate": 0.003, ... },
//     "data":  { "source": "synthetic", "scene": { "num_points": 2000, ... } }
//   }
namespace siesef::io {

enum class DataSource { kSynthetic, kKitti, kPly };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  SceneSpec scene;
  std::string scan;   // KITTI .bin
  std::string label;  // KITTI .label, optional
  std::string remap;  // KITTI remap JSON
  std::string ply;
  bool recenter = true;  // PLY: subtract the centroid in double at load
};

struct RunConfig {
  net::ModelConfig model;
  DataConfig data;
};

inline constexpr const char* kDataDirEnv = "SIESEF_DATA_DIR";

// Relative data paths resolve against $SIESEF_DATA_DIR when it is set.
inline std::filesystem::path resolve_data_path(const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute()) return path;
  if (const char* root = std::getenv(kDataDirEnv); root && *root) {
    return std::filesystem::path(root) / path;
  }
  return path;
}

namespace detail {

using nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!j_.at(key).is_number_unsigned()) {
        throw ConfigError("config: '" + path_ + key + "' must be a non-negative integer");
      }
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path_ + key + ".");
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown key '" + path_ + key + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

inline encoding::Pooling parse_pooling(std::string_view s) {
  if (s == "seap") return encoding::Pooling::kSeap;
  if (s == "max") return encoding::Pooling::kMax;
  throw ConfigError("unknown pooling '" + std::string(s) + "' (expected seap or max)");
}

inline std::string_view pooling_name(encoding::Pooling p) {
  return p == encoding::Pooling::kMax ? "max" : "seap";
}

inline encoding::AngleNormalization parse_angle_normalization(std::string_view s) {
  if (s == "l2") return encoding::AngleNormalization::kL2;
  if (s == "minmax") return encoding::AngleNormalization::kMinMax;
  throw ConfigError("unknown angle_normalization '" + std::string(s) + "' (expected l2 or minmax)");
}

inline std::string_view angle_normalization_name(encoding::AngleNormalization a) {
  return a == encoding::AngleNormalization::kMinMax ? "minmax" : "l2";
}

inline DataSource parse_source(std::string_view s) {
  if (s == "synthetic") return DataSource::kSynthetic;
  if (s == "kitti") return DataSource::kKitti;
  if (s == "ply") return DataSource::kPly;
  throw ConfigError("unknown data source '" + std::string(s) + "' (expected synthetic, kitti or ply)");
}

inline std::string_view source_name(DataSource s) {
  switch (s) {
    case DataSource::kKitti: return "kitti";
    case DataSource::kPly: return "ply";
    case DataSource::kSynthetic: break;
  }
  return "synthetic";
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig rc;
  net::ModelConfig& m = rc.model;
  detail::Section root(j, "");
  root.get("seed", m.seed);
  std::string ablation;
  root.get("ablation", ablation);

  if (auto s = root.child("model")) {
    s->get("num_classes", m.num_classes);
    s->get("k_neighbors", m.k_neighbors);
    s->get("stem_width", m.stem_width);
    s->get("widths", m.widths);
    s->get("ratios", m.ratios);
    s->get("d_g", m.d_g);
    s->get("use_else", m.use_else);
    std::string pooling, angle;
    s->get("pooling", pooling);
    if (!pooling.empty()) m.pooling = detail::parse_pooling(pooling);
    s->get("angle_normalization", angle);
    if (!angle.empty()) m.angle_normalization = detail::parse_angle_normalization(angle);
    s->get("scalar_attention", m.scalar_attention);
    s->get("rbpc_expansion", m.rbpc_expansion);
    s->get("rbpc_activation", m.rbpc_activation);
    s->get("head_width", m.head_width);
    s->get("normalize_input", m.normalize_input);
    s->get("class_weights", m.class_weights);
    s->finish();
  }
  if (auto s = root.child("train")) {
    s->get("epochs", m.train.epochs);
    s->get("steps_per_epoch", m.train.steps_per_epoch);
    s->get("validation_fraction", m.train.validation_fraction);
    s->get("learning_rate", m.train.adam.learning_rate);
    s->get("beta1", m.train.adam.beta1);
    s->get("beta2", m.train.adam.beta2);
    s->get("epsilon", m.train.adam.epsilon);
    s->get("lr_decay", m.train.adam.decay_per_epoch);
    s->finish();
  }
  if (auto s = root.child("data")) {
    DataConfig& d = rc.data;
    std::string source;
    s->get("source", source);
    if (!source.empty()) d.source = detail::parse_source(source);
    if (auto sc = s->child("scene")) {
      std::string layout;
      sc->get("num_points", d.scene.num_points);
      sc->get("layout", layout);
      if (!layout.empty()) d.scene.layout = parse_scene_layout(layout);
      sc->get("noise", d.scene.noise_sigma);
      sc->get("boundary_fraction", d.scene.boundary_fraction);
      sc->get("strip_width", d.scene.strip_width);
      sc->get("num_poles", d.scene.num_poles);
      sc->get("seed", d.scene.seed);
      sc->finish();
    }
    s->get("scan", d.scan);
    s->get("label", d.label);
    s->get("remap", d.remap);
    s->get("ply", d.ply);
    s->get("recenter", d.recenter);
    s->finish();
  }
  root.finish();
  if (!ablation.empty()) m.apply(net::parse_ablation(ablation));
  m.validate();
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_run_config(j);
}

// Full echo of the effective configuration. Keys come out sorted, so the
// serialization is stable.
inline nlohmann::json to_json(const RunConfig& rc) {
  const net::ModelConfig& m = rc.model;
  nlohmann::json j;
  j["seed"] = m.seed;
  j["ablation"] = std::string(net::to_string(m.variant()));
  j["model"] = {
      {"num_classes", m.num_classes},
      {"k_neighbors", m.k_neighbors},
      {"stem_width", m.stem_width},
      {"widths", m.widths},
      {"ratios", m.ratios},
      {"d_g", m.d_g},
      {"use_else", m.use_else},
      {"pooling", std::string(detail::pooling_name(m.pooling))},
      {"angle_normalization", std::string(detail::angle_normalization_name(m.angle_normalization))},
      {"scalar_attention", m.scalar_attention},
      {"rbpc_expansion", m.rbpc_expansion},
      {"rbpc_activation", m.rbpc_activation},
      {"head_width", m.head_width},
      {"normalize_input", m.normalize_input},
      {"class_weights", m.class_weights},
  };
  j["train"] = {
      {"epochs", m.train.epochs},
      {"steps_per_epoch", m.train.steps_per_epoch},
      {"validation_fraction", m.train.validation_fraction},
      {"learning_rate", m.train.adam.learning_rate},
      {"beta1", m.train.adam.beta1},
      {"beta2", m.train.adam.beta2},
      {"epsilon", m.train.adam.epsilon},
      {"lr_decay", m.train.adam.decay_per_epoch},
  };
  const DataConfig& d = rc.data;
  nlohmann::json data{{"source", std::string(detail::source_name(d.source))}};
  if (d.source == DataSource::kSynthetic) {
    data["scene"] = {
        {"num_points", d.scene.num_points},
        {"layout", std::string(to_string(d.scene.layout))},
        {"noise", d.scene.noise_sigma},
        {"boundary_fraction", d.scene.boundary_fraction},
        {"strip_width", d.scene.strip_width},
        {"num_poles", d.scene.num_poles},
        {"seed", d.scene.seed},
    };
  } else if (d.source == DataSource::kKitti) {
    data["scan"] = d.scan;
    data["label"] = d.label;
    data["remap"] = d.remap;
  } else {
    data["ply"] = d.ply;
    data["recenter"] = d.recenter;
  }
  j["data"] = std::move(data);
  return j;
}

}  // namespace siesef::io
