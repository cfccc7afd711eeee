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

#include "siesef/error.hpp"
#include "siesef/tensor.hpp"
#include "siesef/random.hpp"
#include "siesef/autodiff.hpp"
#include "siesef/layers.hpp"
#include "siesef/optim.hpp"
#include "siesef/binary.hpp"
#include "siesef/checkpoint.hpp"
#include "siesef/gradcheck.hpp"
#include "siesef/point_cloud.hpp"
#include "siesef/neighborhood.hpp"
#include "siesef/else_encode.hpp"
#include "siesef/seap_pool.hpp"
#include "siesef/loss.hpp"
#include "siesef/model_config.hpp"
#include "siesef/network.hpp"
#include "siesef/metrics.hpp"
#include "siesef/train.hpp"
#include "siesef/scene.hpp"
#include "siesef/kitti.hpp"
#include "siesef/ply.hpp"
#include "siesef/run_config.hpp"
#include "siesef/report.hpp"
#include "siesef/invariants.hpp"
#include "siesef/verify.hpp"
