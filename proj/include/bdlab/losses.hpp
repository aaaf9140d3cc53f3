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

#include <span>
#include <vector>

#include "bdlab/tensor.hpp"

namespace bdlab {

// Row-wise softmax of a [B x K] tensor, max-subtracted.
Tensor softmax(const Tensor& logits);

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;  // d loss / d logits, same shape as logits
};

// Mean over the batch of -log softmax(logits)[label]. Throws NumericError on
// non-finite logits and std::invalid_argument on bad shapes or labels.
LossAndGrad cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

struct DistanceAndGrad {
  double distance = 0.0;
  std::vector<double> grad_a;
  std::vector<double> grad_b;
};

// Euclidean distance ||a - b||. The gradient at distance 0 is the zero vector.
DistanceAndGrad l2_distance(std::span<const double> a, std::span<const double> b);

}  // namespace bdlab
