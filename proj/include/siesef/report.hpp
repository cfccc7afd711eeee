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
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "siesef/metrics.hpp"
#include "siesef/train.hpp"

// Run reports: a human-readable rendering and a JSON object with sorted keys.
// Timings live under their own key so that two runs of the same command can
// be diffed after dropping it.
namespace siesef::report {

struct RunReport {
  std::string command;
  nlohmann::json config;  // effective configuration echo, may be null
  std::vector<net::EpochRecord> log;
  int num_classes = 0;
  std::vector<std::optional<double>> class_iou;
  std::optional<double> miou;
  std::optional<double> oa;
  std::vector<std::pair<std::string, double>> timings;  // phase, seconds; in run order
  nlohmann::json extra = nlohmann::json::object();
};

inline void set_metrics(RunReport& r, const metrics::ConfusionMatrix& cm) {
  r.num_classes = cm.num_classes();
  r.class_iou = metrics::per_class_iou(cm);
  r.oa = cm.total() > 0 ? std::optional(metrics::overall_accuracy(cm)) : std::nullopt;
  const bool any = std::any_of(r.class_iou.begin(), r.class_iou.end(),
                               [](const auto& v) { return v.has_value(); });
  r.miou = any ? std::optional(metrics::mean_iou(r.class_iou)) : std::nullopt;
}

inline nlohmann::json epoch_json(const net::EpochRecord& e) {
  return {{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}, {"oa", e.oa}, {"miou", e.miou}};
}

inline nlohmann::json to_json(const RunReport& r, bool with_timings = true) {
  nlohmann::json j;
  j["command"] = r.command;
  j["config"] = r.config;
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : r.log) log.push_back(epoch_json(e));
  j["log"] = std::move(log);
  nlohmann::json ious = nlohmann::json::array();
  for (const auto& v : r.class_iou) ious.push_back(v ? nlohmann::json(*v) : nlohmann::json());
  j["class_iou"] = std::move(ious);
  j["miou"] = r.miou ? nlohmann::json(*r.miou) : nlohmann::json();
  j["oa"] = r.oa ? nlohmann::json(*r.oa) : nlohmann::json();
  if (!r.extra.empty()) j["extra"] = r.extra;
  if (with_timings) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [phase, seconds] : r.timings) t[phase] = seconds;
    j["timings"] = std::move(t);
  }
  return j;
}

// One JSON object per line: {epoch, lr, loss, oa, miou}.
inline std::string metrics_log_lines(const std::vector<net::EpochRecord>& log) {
  std::string out;
  for (const auto& e : log) {
    out += epoch_json(e).dump();
    out += '\n';
  }
  return out;
}

inline std::string to_text(const RunReport& r) {
  std::ostringstream os;
  char buf[128];
  os << "siesef " << r.command << "\n";
  if (!r.log.empty()) {
    os << "epoch        lr      loss      OA    mIoU\n";
    for (const auto& e : r.log) {
      std::snprintf(buf, sizeof buf, "%5d  %8.2e  %8.4f  %6.4f  %6.4f\n", e.epoch, e.lr, e.loss, e.oa, e.miou);
      os << buf;
    }
  }
  if (!r.class_iou.empty()) {
    os << "class   IoU\n";
    for (std::size_t c = 0; c < r.class_iou.size(); ++c) {
      if (r.class_iou[c]) {
        std::snprintf(buf, sizeof buf, "%5zu  %6.4f\n", c, *r.class_iou[c]);
      } else {
        std::snprintf(buf, sizeof buf, "%5zu     n/a\n", c);
      }
      os << buf;
    }
  }
  if (r.miou) {
    std::snprintf(buf, sizeof buf, "mIoU  %6.4f\n", *r.miou);
    os << buf;
  }
  if (r.oa) {
    std::snprintf(buf, sizeof buf, "OA    %6.4f\n", *r.oa);
    os << buf;
  }
  for (const auto& [phase, seconds] : r.timings) {
    std::snprintf(buf, sizeof buf, "time  %-12s %8.3f s\n", phase.c_str(), seconds);
    os << buf;
  }
  return os.str();
}

}  // namespace siesef::report
