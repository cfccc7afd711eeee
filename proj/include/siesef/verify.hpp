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

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "siesef/checkpoint.hpp"
#include "siesef/else_encode.hpp"
#include "siesef/invariants.hpp"
#include "siesef/kitti.hpp"
#include "siesef/loss.hpp"
#include "siesef/metrics.hpp"
#include "siesef/neighborhood.hpp"
#include "siesef/ply.hpp"
#include "siesef/seap_pool.hpp"

// The invariant suite behind `siesef verify`. Each check is small enough to
// run in a few seconds; failures carry the module/op name and a detail line.
namespace siesef::verify {

struct CheckResult {
  std::string name;  // "module/op"
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Check {
  std::string name;
  // Returns an empty string on success, otherwise what went wrong.
  std::function<std::string()> run;
};

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

namespace detail {

inline std::string softmax_rows() {
  Rng rng(11);
  Tensor x(Shape{32, 7});
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform(-6.0, 6.0));
  const Tensor y = softmax(x, 1);
  double worst = 0.0;
  for (std::size_t r = 0; r < 32; ++r) {
    double peak = x(r, 0), total = 0.0, sum = 0.0;
    for (std::size_t c = 1; c < 7; ++c) peak = std::max(peak, static_cast<double>(x(r, c)));
    for (std::size_t c = 0; c < 7; ++c) total += std::exp(x(r, c) - peak);
    for (std::size_t c = 0; c < 7; ++c) {
      worst = std::max(worst, std::abs(y(r, c) - std::exp(x(r, c) - peak) / total));
      sum += y(r, c);
    }
    if (std::abs(sum - 1.0) > 1e-5) return "row " + std::to_string(r) + " sums to " + fmt(sum);
  }
  return worst < 1e-6 ? "" : "max deviation from scalar oracle " + fmt(worst);
}

inline net::ModelConfig tiny_config() {
  net::ModelConfig c;
  c.widths = {4, 8};
  c.ratios = {0.5, 0.5};
  c.d_g = 4;
  c.k_neighbors = 6;
  c.stem_width = 4;
  c.head_width = 4;
  c.rbpc_expansion = 2;
  c.seed = 3;
  return c;
}

inline std::string network_gradients() {
  Rng rng(5);
  const PointCloud cloud = checks::random_cloud(24, rng, 1.0, 3);
  const std::vector<float> w{1.0f, 1.5f, 0.75f};
  const auto r = checks::network_gradient_check(tiny_config(), cloud, 9, w);
  if (r.report.passed()) return "";
  const auto& m = r.report.worst;
  return std::to_string(r.report.failures.size()) + " of " + std::to_string(r.report.checked) +
         " gradients off; worst " + m.parameter + "[" + std::to_string(m.index) + "] analytic " +
         fmt(m.analytic) + " numeric " + fmt(m.numeric);
}

inline std::string knn_oracle() {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.below(200);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 32));
    const PointCloud c = checks::random_cloud(n, rng, 2.0);
    const auto a = nbhd::knn_search(c, k);
    const auto b = nbhd::knn_bruteforce(c, k);
    if (a.neighbor_ids != b.neighbor_ids) {
      return "ids differ on cloud " + std::to_string(trial) + " (N=" + std::to_string(n) +
             ", k=" + std::to_string(k) + ")";
    }
    if (checks::max_abs_diff(a.distances, b.distances) > 1e-5) return "distances differ";
  }
  return "";
}

inline std::string inverse_distance_order() {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + rng.below(15);
    Tensor d(Shape{1, k});
    double acc = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      acc += rng.uniform(0.01, 0.5);
      d[s] = static_cast<float>(acc);
    }
    const Tensor w = encoding::inverse_distance_weights(d);
    for (std::size_t s = 1; s < k; ++s) {
      if (!(w[s] < w[s - 1])) return "weights not descending in neighborhood " + std::to_string(t);
    }
  }
  return "";
}

inline std::string else_translation() {
  Rng rng(41);
  const PointCloud base = checks::random_cloud(60, rng, 1.0);
  const PointCloud ref = checks::translated_recentered(base, {0.0, 0.0, 0.0});
  auto mlp = std::vector<nn::MlpLayer<float>>{nn::make_layer<float>("g", 10, 8, nn::Activation::kLeakyRelu, rng)};
  const auto idx = nbhd::knn_search(ref, 8);
  const Tensor g0 = encoding::else_forward(ref, idx, mlp);
  for (int t = 0; t < 5; ++t) {
    const std::array<double, 3> off{rng.uniform(-1000, 1000), rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)};
    const PointCloud moved = checks::translated_recentered(base, off);
    const Tensor g1 = encoding::else_forward(moved, nbhd::knn_search(moved, 8), mlp);
    const double d = checks::max_abs_diff(g0, g1);
    if (!(d <= 1e-5)) return "translation changed the encoding by " + fmt(d);
  }
  return "";
}

inline std::string seap_permutation() {
  Rng rng(51);
  const std::size_t n = 12, k = 9, d = 5, dg = 4;
  Tensor f(Shape{n, k, d}), g(Shape{n, k, dg});
  for (auto& v : f.data()) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : g.data()) v = static_cast<float>(rng.uniform(-1, 1));
  const auto att = nn::make_layer<float>("att", dg, d, nn::Activation::kIdentity, rng);
  const Tensor y0 = encoding::seap_forward(f, g, att);
  for (int t = 0; t < 10; ++t) {
    const auto p = checks::random_permutation(k, rng);
    Tensor fp(f.shape()), gp(g.shape());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t c = 0; c < d; ++c) fp(i, s, c) = f(i, p[s], c);
        for (std::size_t c = 0; c < dg; ++c) gp(i, s, c) = g(i, p[s], c);
      }
    }
    const double diff = checks::max_abs_diff(y0, encoding::seap_forward(fp, gp, att));
    if (!(diff <= 1e-6)) return "neighbor permutation changed the output by " + fmt(diff);
  }
  return "";
}

inline std::string network_permutation() {
  Rng rng(61);
  const net::ModelConfig c = tiny_config();
  const PointCloud cloud = checks::random_cloud(40, rng, 1.0);
  auto model = net::make_network<float>(c);
  const auto kept = net::draw_kept_sets(cloud.size(), c, 17);
  const Tensor z0 = net::network_forward(model, net::build_hierarchy(cloud, c, kept));
  for (int t = 0; t < 3; ++t) {
    const auto p = checks::random_permutation(cloud.size(), rng);
    const PointCloud pc = checks::permute_cloud(cloud, p);
    const Tensor z1 = net::network_forward(model, net::build_hierarchy(pc, c, checks::permute_kept_sets(kept, p)));
    double worst = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      for (std::size_t q = 0; q < z0.dim(1); ++q) worst = std::max(worst, std::abs(static_cast<double>(z1(j, q)) - z0(p[j], q)));
    }
    if (!(worst <= 1e-5)) return "point permutation changed logits by " + fmt(worst);
  }
  return "";
}

inline std::string loss_fixtures() {
  for (int c : {2, 4, 19}) {
    const Tensor z(Shape{3, static_cast<std::size_t>(c)}, 0.25f);
    const std::vector<std::int32_t> y{0, c - 1, 1};
    const std::vector<float> w(static_cast<std::size_t>(c), 1.0f);
    const double l = net::weighted_cross_entropy(z, y, w);
    if (std::abs(l - std::log(c)) > 1e-6) return "uniform logits, C=" + std::to_string(c) + ": " + fmt(l);
  }
  const Tensor z(Shape{2, 2}, {std::log(0.8f), std::log(0.2f), std::log(0.3f), std::log(0.7f)});
  const double expect = -0.5 * (2.0 * std::log(0.8) + std::log(0.7));
  const double l = net::weighted_cross_entropy(z, std::vector<std::int32_t>{0, 1}, std::vector<float>{2.0f, 1.0f});
  return std::abs(l - expect) <= 1e-4 ? "" : "weighted fixture gives " + fmt(l);
}

inline std::string metric_fixtures() {
  metrics::ConfusionMatrix a(2);
  a.accumulate(std::vector<std::int32_t>{0, 1}, std::vector<std::int32_t>{0, 0});
  const auto iou = metrics::per_class_iou(a);
  if (!iou[0] || !iou[1] || *iou[0] != 0.5 || *iou[1] != 0.0) return "[[1,1],[0,0]] IoU fixture";
  metrics::ConfusionMatrix b(2);
  b.accumulate(std::vector<std::int32_t>{0, 0, 0, 1, 1, 1, 1, 0}, std::vector<std::int32_t>{0, 0, 0, 0, 1, 1, 1, 1});
  if (metrics::overall_accuracy(b) != 0.75) return "[[3,1],[1,3]] OA fixture";
  Rng rng(71);
  std::vector<std::int32_t> pred(1000), truth(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    pred[i] = static_cast<std::int32_t>(rng.below(5));
    truth[i] = static_cast<std::int32_t>(rng.below(5));
  }
  metrics::ConfusionMatrix whole(5), chunked(5);
  whole.accumulate(pred, truth);
  for (std::size_t s = 0; s < 1000; s += 143) {
    const std::size_t e = std::min<std::size_t>(1000, s + 143);
    chunked.accumulate(std::span(pred).subspan(s, e - s), std::span(truth).subspan(s, e - s));
  }
  return whole == chunked ? "" : "chunked accumulation differs from one pass";
}

inline std::string format_round_trips() {
  Rng rng(81);
  io::KittiScan scan;
  scan.points.resize(4 * 1000);
  for (auto& v : scan.points) v = static_cast<float>(rng.uniform(-80, 80));
  const io::Bytes bin = io::write_kitti_bin(scan);
  if (io::write_kitti_bin(io::read_kitti_bin(bin)) != bin) return "KITTI scan round trip";
  std::vector<std::uint32_t> raw(1000);
  for (auto& v : raw) v = io::kitti_pack(static_cast<std::uint32_t>(rng.below(260)), 0);
  const io::Bytes lab = io::write_kitti_labels(raw);
  if (io::write_kitti_labels(io::read_kitti_raw_labels(lab)) != lab) return "KITTI label round trip";
  io::PlyCloud ply;
  ply.positions.resize(1000);
  for (auto& p : ply.positions) {
    for (auto& v : p) v = static_cast<float>(rng.uniform(-50, 50));
  }
  ply.labels.resize(1000);
  for (auto& l : ply.labels) l = static_cast<std::int32_t>(rng.below(8));
  const io::Bytes pb = io::write_ply(ply, io::PlyEncoding::kBinaryLittleEndian);
  if (io::write_ply(io::read_ply(pb), io::PlyEncoding::kBinaryLittleEndian) != pb) return "binary PLY round trip";
  return "";
}

}  // namespace detail

inline std::vector<Check> default_checks() {
  return {
      {"tensor-nn/softmax", detail::softmax_rows},
      {"tensor-nn/gradient", detail::network_gradients},
      {"neighborhood/knn", detail::knn_oracle},
      {"else-encode/inverse_distance_weights", detail::inverse_distance_order},
      {"else-encode/translation", detail::else_translation},
      {"seap-pool/seap_forward", detail::seap_permutation},
      {"blocks-net/network_forward", detail::network_permutation},
      {"blocks-net/weighted_cross_entropy", detail::loss_fixtures},
      {"metrics/confusion_matrix", detail::metric_fixtures},
      {"dataio/round_trip", detail::format_round_trips},
  };
}

// Runs every check; exceptions count as failures.
inline std::vector<CheckResult> run(const std::vector<Check>& checks) {
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    CheckResult r{c.name, false, "", 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.detail = c.run();
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const auto& r) { return r.passed; });
}

inline nlohmann::json to_json(const std::vector<CheckResult>& rs) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : rs) {
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}});
  }
  return {{"command", "verify"}, {"passed", all_passed(rs)}, {"checks", std::move(checks)}};
}

inline std::string to_text(const std::vector<CheckResult>& rs) {
  std::ostringstream os;
  char buf[160];
  for (const auto& r : rs) {
    std::snprintf(buf, sizeof buf, "%-4s %-40s %8.3f s", r.passed ? "ok" : "FAIL", r.name.c_str(), r.seconds);
    os << buf;
    if (!r.passed) os << "  " << r.detail;
    os << "\n";
  }
  std::size_t failed = 0;
  for (const auto& r : rs) failed += r.passed ? 0 : 1;
  os << (failed == 0 ? "all " + std::to_string(rs.size()) + " checks passed\n"
                     : std::to_string(failed) + " of " + std::to_string(rs.size()) + " checks failed\n");
  return os.str();
}

}  // namespace siesef::verify
