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

#include "bdlab/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bdlab/error.hpp"

namespace bdlab {

Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw std::invalid_argument("softmax expects a [B x K] tensor");
  Tensor out(logits.shape());
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  for (std::size_t b = 0; b < rows; ++b) {
    double mx = logits.at(b, 0);
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits.at(b, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out.at(b, j) = std::exp(logits.at(b, j) - mx);
      sum += out.at(b, j);
    }
    for (std::size_t j = 0; j < k; ++j) out.at(b, j) /= sum;
  }
  return out;
}

LossAndGrad cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(1) < 2) {
    throw std::invalid_argument("cross_entropy_loss expects [B x K] logits with K >= 2");
  }
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  if (labels.size() != batch) throw std::invalid_argument("cross_entropy_loss: label count mismatch");
  if (!logits.all_finite()) throw NumericError("cross_entropy_loss: non-finite logits");

  LossAndGrad out{0.0, Tensor(logits.shape())};
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(y) + " out of range");
    }
    double mx = logits.at(b, 0);
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits.at(b, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(logits.at(b, j) - mx);
    const double log_z = mx + std::log(sum);
    out.loss += (log_z - logits.at(b, static_cast<std::size_t>(y))) * inv_b;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(logits.at(b, j) - log_z);
      out.grad.at(b, j) = (p - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) * inv_b;
    }
  }
  return out;
}

DistanceAndGrad l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("l2_distance: length mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  DistanceAndGrad out{0.0, std::vector<double>(a.size(), 0.0), std::vector<double>(a.size(), 0.0)};
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  out.distance = std::sqrt(sq);
  if (out.distance > 0.0) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      out.grad_a[i] = (a[i] - b[i]) / out.distance;
      out.grad_b[i] = -out.grad_a[i];
    }
  }
  return out;
}

}  // namespace bdlab
