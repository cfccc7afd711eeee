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
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "siesef/autodiff.hpp"

namespace siesef::nn {

struct GradientMismatch {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  std::size_t checked = 0;
  GradientMismatch worst;
  std::vector<GradientMismatch> failures;

  bool passed() const noexcept { return failures.empty(); }
};

struct GradientCheckOptions {
  double step = 1e-3;
  double tolerance = 1e-3;
  // Denominator floor of the relative error, so gradients that are zero up
  // to rounding do not turn noise into a huge ratio.
  double magnitude_floor = 1e-4;
};

inline double gradient_relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences (L(p+h) - L(p-h)) / 2h for every element of every
// parameter, compared against `analytic` (same order as `params`).
// `loss` re-evaluates the objective with the parameters' current values.
template <class Loss>
GradientCheckReport check_gradients(std::span<Parameter<double>* const> params,
                                    std::span<const BasicTensor<double>> analytic,
                                    Loss&& loss, GradientCheckOptions options = {}) {
  if (analytic.size() != params.size()) {
    throw ShapeError("gradient check: analytic gradient count mismatch");
  }
  GradientCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter<double>& param = *params[p];
    if (analytic[p].shape() != param.value.shape()) {
      throw ShapeError("gradient check: analytic gradient for '" + param.name +
                       "' has shape " + to_string(analytic[p].shape()));
    }
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      const double saved = param.value[i];
      param.value[i] = saved + options.step;
      const double up = loss();
      param.value[i] = saved - options.step;
      const double down = loss();
      param.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[p][i];
      GradientMismatch m{param.name, i, a, numeric,
                         gradient_relative_error(a, numeric, options.magnitude_floor)};
      ++report.checked;
      if (m.relative_error > report.worst.relative_error || report.checked == 1) {
        report.worst = m;
      }
      if (!(m.relative_error < options.tolerance)) report.failures.push_back(m);
    }
  }
  return report;
}

}  // namespace siesef::nn
