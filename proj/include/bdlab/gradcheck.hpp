// Copyright 2026 The bdlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "bdlab/tensor.hpp"

namespace bdlab {

struct GradCheckOptions {
  double step = 1e-4;
  // Coordinates sampled per tensor, drawn from those with a non-zero
  // analytic gradient, plus the same number drawn uniformly.
  std::size_t coords_per_tensor = 50;
  double tolerance = 1e-3;
  // Relative error denominator is max(|numeric|, floor).
  double floor = 1e-7;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coordinates_checked = 0;
  // Coordinates judged against a one-sided slope because a kink lay within
  // one step.
  std::size_t kinks = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

// Compares `analytic` against central differences of `loss`, which must
// read the current contents of `params` (they are perturbed in place and
// restored). `names` labels tensors in the report and may be empty.
GradCheckReport finite_difference_check(const std::function<double()>& loss, std::span<Tensor> params,
                                        std::span<const Tensor> analytic,
                                        std::span<const std::string> names = {},
                                        const GradCheckOptions& opts = {});

}  // namespace bdlab
