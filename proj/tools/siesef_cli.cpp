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

// siesef command-line tool: train, eval, encode, verify.
//
// Exit codes: 0 success, 1 verify found failing checks, 2 usage, config or
// data error, 3 numeric failure (non-finite values during training).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "siesef/siesef.hpp"

namespace fs = std::filesystem;
using namespace siesef;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string ablation;
  std::optional<int> epochs;
  std::optional<std::size_t> k;
  std::string out;
  bool json = false;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Precedence: command-line flags, then the config file, then built-in defaults.
io::RunConfig effective_config(const Overrides& o) {
  io::RunConfig rc = o.config.empty() ? io::RunConfig{} : io::load_run_config(o.config);
  if (o.seed) rc.model.seed = *o.seed;
  if (!o.ablation.empty()) rc.model.apply(net::parse_ablation(o.ablation));
  if (o.epochs) rc.model.train.epochs = *o.epochs;
  if (o.k) rc.model.k_neighbors = *o.k;
  rc.model.validate();
  return rc;
}

std::string extension(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e;
}

PointCloud load_cloud_file(const fs::path& path, bool recenter) {
  const std::string ext = extension(path);
  if (ext == ".ply") {
    const io::PlyCloud ply = io::read_ply(io::read_file(path));
    for (const auto& w : ply.warnings) std::cerr << "warning: " << path.string() << ": " << w << "\n";
    return io::to_point_cloud(ply, recenter);
  }
  if (ext == ".bin") return io::kitti_cloud(io::read_kitti_bin(io::read_file(path)));
  throw DataError("unsupported cloud file '" + path.string() + "' (expected .ply or .bin)");
}

PointCloud load_training_cloud(const io::RunConfig& rc) {
  const io::DataConfig& d = rc.data;
  switch (d.source) {
    case io::DataSource::kSynthetic: return io::generate_scene(d.scene);
    case io::DataSource::kKitti: {
      if (d.scan.empty() || d.label.empty() || d.remap.empty()) {
        throw ConfigError("kitti data needs scan, label and remap paths");
      }
      const auto remap = io::KittiRemap::load(io::resolve_data_path(d.remap));
      const auto scan = io::read_kitti_bin(io::read_file(io::resolve_data_path(d.scan)));
      return io::kitti_cloud(scan, io::read_kitti_label(io::read_file(io::resolve_data_path(d.label)), remap));
    }
    case io::DataSource::kPly: {
      if (d.ply.empty()) throw ConfigError("ply data needs a ply path");
      return load_cloud_file(io::resolve_data_path(d.ply), d.recenter);
    }
  }
  throw ConfigError("unknown data source");
}

// Integer labels, one per point. `.label` files are read as KITTI raw labels
// (semantic id in the low 16 bits); anything else as whitespace-separated
// decimal integers.
std::vector<std::int32_t> load_labels(const fs::path& path) {
  const io::Bytes bytes = io::read_file(path);
  std::vector<std::int32_t> out;
  if (extension(path) == ".label") {
    for (auto raw : io::read_kitti_raw_labels(bytes)) out.push_back(static_cast<std::int32_t>(io::kitti_semantic(raw)));
    return out;
  }
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string tok;
  std::size_t n = 0;
  while (in >> tok) {
    std::int32_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      throw FormatError(path.string() + ": entry " + std::to_string(n) + " ('" + tok + "') is not an integer");
    }
    out.push_back(v);
    ++n;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_labels(const fs::path& path, std::span<const std::int32_t> labels) {
  std::string s;
  for (auto v : labels) {
    s += std::to_string(v);
    s += '\n';
  }
  write_text(path, s);
}

void emit(const report::RunReport& r, bool json) {
  if (json) {
    std::cout << report::to_json(r).dump() << "\n";
  } else {
    std::cout << report::to_text(r);
  }
}

void save_report(const fs::path& dir, const report::RunReport& r) {
  write_text(dir / "report.json", report::to_json(r).dump() + "\n");
  write_text(dir / "report.txt", report::to_text(r));
}

int cmd_train(const Overrides& o) {
  Stopwatch clock;
  report::RunReport rep;
  rep.command = "train";
  const io::RunConfig rc = effective_config(o);
  rep.config = io::to_json(rc);
  const PointCloud cloud = load_training_cloud(rc);
  cloud.validate(rc.model.num_classes);
  rep.timings.emplace_back("load", clock.lap());

  const net::TrainResult result = net::train(cloud, rc.model);
  rep.log = result.log;
  rep.timings.emplace_back("train", clock.lap());

  net::Network<float> model = result.model;
  const auto split = net::split_labels(cloud.labels, rc.model.train.validation_fraction, rc.model.seed);
  const bool has_val = std::any_of(split.validation.begin(), split.validation.end(),
                                   [](auto l) { return l != kIgnoreLabel; });
  const net::Hierarchy h = net::build_hierarchy(cloud, rc.model, rc.model.seed);
  const auto pred = net::predict(net::network_forward(model, h));
  metrics::ConfusionMatrix cm(rc.model.num_classes);
  cm.accumulate(pred, has_val ? split.validation : split.train);
  report::set_metrics(rep, cm);
  rep.extra["variant"] = std::string(net::to_string(rc.model.variant()));
  rep.extra["best_epoch"] = result.best_epoch;
  rep.extra["parameters"] = model.parameter_count();
  rep.extra["class_weights"] = result.class_weights;
  rep.extra["evaluated_on"] = has_val ? "validation" : "train";
  rep.timings.emplace_back("evaluate", clock.lap());

  if (!o.out.empty()) {
    fs::create_directories(o.out);
    const fs::path dir(o.out);
    nn::write_tensor_file(dir / "checkpoint.bin", nn::snapshot(model.parameters()));
    write_text(dir / "metrics.jsonl", report::metrics_log_lines(rep.log));
    write_labels(dir / "predictions.txt", pred);
    write_labels(dir / "labels.txt", has_val ? split.validation : split.train);
    rep.timings.emplace_back("write", clock.lap());
    save_report(dir, rep);
  }
  emit(rep, o.json);
  return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& label_path, int classes,
             const Overrides& o) {
  Stopwatch clock;
  if (classes < 1) throw ConfigError("--classes must be positive");
  const auto pred = load_labels(pred_path);
  const auto truth = load_labels(label_path);
  if (pred.size() != truth.size()) {
    throw DataError("prediction count " + std::to_string(pred.size()) + " does not match label count " +
                    std::to_string(truth.size()));
  }
  metrics::ConfusionMatrix cm(classes);
  cm.accumulate(pred, truth);
  report::RunReport rep;
  rep.command = "eval";
  rep.config = {{"predictions", pred_path}, {"labels", label_path}, {"classes", classes}};
  report::set_metrics(rep, cm);
  rep.extra["points"] = cm.total();
  rep.timings.emplace_back("eval", clock.lap());
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    save_report(o.out, rep);
  }
  emit(rep, o.json);
  return kExitOk;
}

// Dumps the first encoder level's spatial encoding and both pooling outputs.
int cmd_encode(const std::string& cloud_path, const std::string& checkpoint, const Overrides& o) {
  if (o.out.empty()) throw ConfigError("encode needs --out PATH");
  io::RunConfig rc = effective_config(o);
  const PointCloud cloud = load_cloud_file(cloud_path, true);
  cloud.validate();
  net::Network<float> model = net::make_network<float>(rc.model);
  if (!checkpoint.empty()) {
    auto params = model.parameters();
    nn::restore(params, nn::read_tensor_file(checkpoint));
  }
  const net::ModelConfig& c = rc.model;
  const nbhd::NeighborhoodIndex index = nbhd::knn_search(cloud, net::effective_k(c, cloud.size()));
  net::Level level;
  level.index = index;
  level.descriptor = encoding::descriptor_tensor(cloud, index, c.spatial_options());
  nn::Graph<float> g;
  const Tensor stem_in = net::centered_positions<float>(cloud, c.normalize_input);
  const auto x = nn::apply(model.stem, g.constant(stem_in));
  const auto trace = net::residual_block_trace(c, model.encoder.front(), x, level);
  std::vector<nn::NamedTensor> dump{
      {"descriptor", level.descriptor},
      {"spatial", trace.spatial.value()},
      {"pooled1", trace.pooled1.value()},
      {"pooled2", trace.pooled2.value()},
  };
  nn::write_tensor_file(o.out, dump);
  report::RunReport rep;
  rep.command = "encode";
  rep.config = io::to_json(rc);
  for (const auto& t : dump) rep.extra["shapes"][t.name] = t.tensor.shape();
  rep.extra["k"] = index.k;
  rep.extra["points"] = cloud.size();
  emit(rep, o.json);
  return kExitOk;
}

int cmd_verify(const Overrides& o, const std::string& fault) {
  if (fault == "softmax") {
    testing::active_mutation() = testing::Mutation::kSoftmax;
  } else if (!fault.empty()) {
    throw ConfigError("unknown fault '" + fault + "' (expected softmax)");
  }
  const auto results = verify::run(verify::default_checks());
  if (o.json) {
    std::cout << verify::to_json(results).dump() << "\n";
  } else {
    std::cout << verify::to_text(results);
  }
  if (!o.out.empty()) write_text(o.out, verify::to_json(results).dump() + "\n");
  return verify::all_passed(results) ? kExitOk : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siesef: point cloud semantic segmentation with enhanced spatial encoding"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "seed, overriding the config");
    sub->add_option("--ablation", o.ablation, "variant: a1, a2, a3 or full")
        ->check(CLI::IsMember({"a1", "a2", "a3", "full"}));
    sub->add_option("--k", o.k, "neighbors per point")->check(CLI::PositiveNumber);
    sub->add_flag("--json", o.json, "print the report as one JSON object");
  };

  CLI::App* train = app.add_subcommand("train", "train a model and write checkpoint and report");
  add_common(train);
  train->add_option("--epochs", o.epochs, "epochs, overriding the config")->check(CLI::NonNegativeNumber);
  train->add_option("--out", o.out, "output directory");

  std::string pred_path, label_path;
  int classes = 0;
  CLI::App* eval = app.add_subcommand("eval", "score predictions against labels");
  eval->add_option("predictions", pred_path, "predicted labels (.label or text)")->required();
  eval->add_option("labels", label_path, "ground-truth labels (.label or text)")->required();
  eval->add_option("--classes", classes, "number of classes")->required();
  eval->add_option("--out", o.out, "output directory for report files");
  eval->add_flag("--json", o.json, "print the report as one JSON object");

  std::string cloud_path, checkpoint;
  CLI::App* encode = app.add_subcommand("encode", "dump spatial encodings and pooling outputs");
  add_common(encode);
  encode->add_option("cloud", cloud_path, "point cloud (.ply or KITTI .bin)")->required();
  encode->add_option("--checkpoint", checkpoint, "trained weights")->check(CLI::ExistingFile);
  encode->add_option("--out", o.out, "output tensor file")->required();

  std::string fault;
  CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--out", o.out, "write the JSON summary here");
  verify->add_flag("--json", o.json, "print the summary as one JSON object");
  verify->add_option("--inject-fault", fault, "deliberately corrupt an op (softmax)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(pred_path, label_path, classes, o);
    if (*encode) return cmd_encode(cloud_path, checkpoint, o);
    if (*verify) return cmd_verify(o, fault);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
