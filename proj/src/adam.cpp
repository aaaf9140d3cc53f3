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

#include "bdlab/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "bdlab/error.hpp"

namespace bdlab {

AdamState::AdamState(std::span<const Tensor> params, AdamOptions opts) : options(opts) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.push_back(Tensor::zeros_like(p));
    v.push_back(Tensor::zeros_like(p));
  }
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() || params[i].shape() != state.m[i].shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for tensor " + std::to_string(i));
    }
    if (!grads[i].all_finite()) throw NumericError("adam_step: non-finite gradient");
  }

  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

}  // namespace bdlab
