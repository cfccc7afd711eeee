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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "siesef/binary.hpp"
#include "siesef/error.hpp"
#include "siesef/point_cloud.hpp"

// SemanticKITTI scans (.bin) and labels (.label).
//
// A scan is a packed array of little-endian float32 records (x, y, z,
// remission). A label file holds one little-endian uint32 per point; the low
// 16 bits are the semantic class and the high 16 bits the instance id.
namespace siesef::io {

inline constexpr std::size_t kKittiRecordBytes = 16;

struct KittiScan {
  std::vector<float> points;  // N x 4, row major
  std::size_t size() const noexcept { return points.size() / 4; }
};

inline KittiScan read_kitti_bin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kKittiRecordBytes != 0) {
    throw FormatError("KITTI scan length " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16");
  }
  KittiScan scan;
  scan.points.resize(bytes.size() / 4);
  ByteReader in(bytes);
  for (auto& v : scan.points) v = in.f32("scan record");
  return scan;
}

inline Bytes write_kitti_bin(const KittiScan& scan) {
  if (scan.points.size() % 4 != 0) {
    throw ShapeError("KITTI scan holds " + std::to_string(scan.points.size()) +
                     " floats, not a multiple of 4");
  }
  Bytes out;
  out.reserve(scan.points.size() * 4);
  for (float v : scan.points) put_f32(out, v);
  return out;
}

inline std::uint32_t kitti_semantic(std::uint32_t raw) noexcept { return raw & 0xFFFFu; }
inline std::uint32_t kitti_instance(std::uint32_t raw) noexcept { return raw >> 16; }
inline std::uint32_t kitti_pack(std::uint32_t semantic, std::uint32_t instance) noexcept {
  return (instance << 16) | (semantic & 0xFFFFu);
}

inline std::vector<std::uint32_t> read_kitti_raw_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) {
    throw FormatError("KITTI label length " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 4");
  }
  std::vector<std::uint32_t> raw(bytes.size() / 4);
  ByteReader in(bytes);
  for (auto& v : raw) v = in.u32("label");
  return raw;
}

inline Bytes write_kitti_labels(std::span<const std::uint32_t> raw) {
  Bytes out;
  out.reserve(raw.size() * 4);
  for (auto v : raw) put_u32(out, v);
  return out;
}

// Maps raw semantic ids onto contiguous training ids. Ids outside the table
// map to kIgnoreLabel.
class KittiRemap {
 public:
  KittiRemap() = default;
  KittiRemap(std::map<std::uint32_t, std::int32_t> table, int num_classes)
      : table_(std::move(table)), num_classes_(num_classes) {
    if (num_classes_ < 1) throw ConfigError("remap needs at least one class");
    for (const auto& [raw, id] : table_) {
      if (id != kIgnoreLabel && (id < 0 || id >= num_classes_)) {
        throw ConfigError("remap sends raw id " + std::to_string(raw) + " to " +
                          std::to_string(id) + ", outside [0, " + std::to_string(num_classes_) + ")");
      }
    }
  }

  // Config shape: {"num_classes": 19, "map": {"10": 0, "11": 1, ...}}.
  static KittiRemap from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("map") || !j.at("map").is_object()) {
      throw ConfigError("remap config needs an object field \"map\"");
    }
    std::map<std::uint32_t, std::int32_t> table;
    int max_id = -1;
    for (const auto& [key, value] : j.at("map").items()) {
      std::uint32_t raw = 0;
      try {
        std::size_t used = 0;
        const unsigned long parsed = std::stoul(key, &used);
        if (used != key.size() || parsed > 0xFFFFu) throw std::out_of_range(key);
        raw = static_cast<std::uint32_t>(parsed);
      } catch (const std::exception&) {
        throw ConfigError("remap key \"" + key + "\" is not a 16-bit class id");
      }
      if (!value.is_number_integer()) {
        throw ConfigError("remap value for raw id " + key + " must be an integer");
      }
      const auto id = value.get<std::int32_t>();
      table[raw] = id;
      if (id != kIgnoreLabel) max_id = std::max(max_id, id);
    }
    const int n = j.contains("num_classes") ? j.at("num_classes").get<int>() : max_id + 1;
    return KittiRemap(std::move(table), n);
  }

  static KittiRemap load(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("remap file '" + path.string() + "': " + e.what());
    }
    return from_json(j);
  }

  std::int32_t operator()(std::uint32_t semantic) const {
    const auto it = table_.find(semantic);
    return it == table_.end() ? kIgnoreLabel : it->second;
  }

  int num_classes() const noexcept { return num_classes_; }
  const std::map<std::uint32_t, std::int32_t>& table() const noexcept { return table_; }

 private:
  std::map<std::uint32_t, std::int32_t> table_;
  int num_classes_ = 0;
};

inline std::vector<std::int32_t> read_kitti_label(std::span<const std::uint8_t> bytes,
                                                  const KittiRemap& remap) {
  const auto raw = read_kitti_raw_labels(bytes);
  std::vector<std::int32_t> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(),
                 [&](std::uint32_t v) { return remap(kitti_semantic(v)); });
  return out;
}

// Builds a cloud from a scan and (optionally) its label file. Remission goes
// into the intensity channel.
inline PointCloud kitti_cloud(const KittiScan& scan, std::vector<std::int32_t> labels = {}) {
  if (!labels.empty() && labels.size() != scan.size()) {
    throw DataError("label count " + std::to_string(labels.size()) + " does not match scan size " +
                    std::to_string(scan.size()));
  }
  PointCloud c;
  std::vector<float> pos(scan.size() * 3);
  c.intensity.resize(scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    for (int a = 0; a < 3; ++a) pos[3 * i + a] = scan.points[4 * i + a];
    c.intensity[i] = scan.points[4 * i + 3];
  }
  if (scan.size() > 0) c.positions = Tensor(Shape{scan.size(), 3}, std::move(pos));
  c.labels = std::move(labels);
  return c;
}

}  // namespace siesef::io
