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

// Trains a small model on the synthetic planes-and-poles scene and prints
// per-epoch validation metrics, then scores the restored best weights.
//
//   quickstart [epochs]

#include <cstdio>
#include <cstdlib>

#include "siesef/siesef.hpp"

int main(int argc, char** argv) {
  using namespace siesef;

  io::SceneSpec scene;
  scene.num_points = 1500;
  const PointCloud cloud = io::generate_scene(scene);

  net::ModelConfig config;
  config.num_classes = io::scene_num_classes(scene.layout);
  config.widths = {16, 32, 64, 128};
  config.train.epochs = argc > 1 ? std::atoi(argv[1]) : 10;
  config.train.steps_per_epoch = 2;
  config.train.adam.learning_rate = 0.003;

  try {
    const net::TrainResult result = net::train(cloud, config, [](const net::EpochRecord& e) {
      std::printf("epoch %3d  lr %.5f  loss %.4f  val OA %.3f  val mIoU %.3f\n", e.epoch, e.lr, e.loss, e.oa,
                  e.miou);
    });
    net::Network<float> model = result.model;
    const Tensor logits = net::network_forward(model, cloud, config.seed);
    metrics::ConfusionMatrix cm(config.num_classes);
    cm.accumulate(net::predict(logits), cloud.labels);
    const auto iou = metrics::per_class_iou(cm);
    std::printf("best epoch %d, whole-scene OA %.3f, mIoU %.3f\n", result.best_epoch,
                metrics::overall_accuracy(cm), metrics::miou(cm));
    for (std::size_t j = 0; j < iou.size(); ++j) {
      if (iou[j]) std::printf("  class %zu IoU %.3f\n", j, *iou[j]);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
