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

#include <algorithm>
#include <cmath>
#include <string>

#include "bdlab/error.hpp"
#include "bdlab/kernels.hpp"
#include "bdlab/models.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {
namespace {

constexpr double kInitRange = 0.05;

// Parameter layout.
constexpr std::size_t kEmbedding = 0;
constexpr std::size_t kFwdWeight = 1;
constexpr std::size_t kFwdBias = 2;
constexpr std::size_t kBwdWeight = 3;
constexpr std::size_t kBwdBias = 4;
constexpr std::size_t kDenseWeight = 5;
constexpr std::size_t kDenseBias = 6;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

// One direction over `steps` positions. Gates are stored post-activation in
// i, f, g, o order.
struct DirectionTrace {
  std::vector<double> inputs;  // steps x (E + H): [x_t ; h_prev]
  std::vector<double> gates;   // steps x 4H
  std::vector<double> cells;   // steps x H
  std::vector<double> tanh_cells;
  std::vector<double> final_h;
};

struct LstmActivations final : Activations {
  std::size_t length = 0;
  DirectionTrace dir[2];
  std::vector<double> features;
  // scratch
  std::vector<double> dfeatures, dh, dc, dgate, dz;
};

}  // namespace

void BiLstmConfig::validate() const {
  if (vocab_size < 3) throw ConfigError("bilstm vocab_size must cover PAD, UNK and at least one token");
  if (embed_dim < 1 || hidden_size < 1) throw ConfigError("bilstm embed_dim and hidden_size must be >= 1");
  if (num_classes != 2) throw ConfigError("bilstm num_classes must be 2");
}

BiLstm::BiLstm(BiLstmConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  auto uniform = [&](std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (double& x : t.data()) x = rng.uniform(-kInitRange, kInitRange);
    return t;
  };
  const std::size_t h = cfg_.hidden_size, e = cfg_.embed_dim;
  Tensor emb = uniform({cfg_.vocab_size, e});
  std::fill(emb.row(Vocab::kPad).begin(), emb.row(Vocab::kPad).end(), 0.0);
  params_.add("embedding", std::move(emb));
  for (const char* dir : {"lstm_fwd", "lstm_bwd"}) {
    params_.add(std::string(dir) + ".weight", uniform({4 * h, e + h}));
    Tensor bias({4 * h});
    for (std::size_t k = h; k < 2 * h; ++k) bias[k] = 1.0;  // forget gate
    params_.add(std::string(dir) + ".bias", std::move(bias));
  }
  params_.add("dense.weight", uniform({cfg_.num_classes, 2 * h}));
  params_.add("dense.bias", Tensor({cfg_.num_classes}));
}

BiLstm::BiLstm(BiLstmConfig cfg, ParameterSet params) : cfg_(cfg) {
  cfg_.validate();
  BiLstm reference(cfg_, 0);
  if (params.names != reference.params_.names) throw DataError("bilstm parameter names do not match config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.tensors[i].shape() != reference.params_.tensors[i].shape()) {
      throw DataError("bilstm parameter '" + params.names[i] + "' has shape " +
                      shape_string(params.tensors[i].shape()));
    }
  }
  params_ = std::move(params);
}

nlohmann::json BiLstm::config_json() const {
  return {{"kind", "bilstm"},
          {"vocab_size", cfg_.vocab_size},
          {"embed_dim", cfg_.embed_dim},
          {"hidden_size", cfg_.hidden_size},
          {"num_classes", cfg_.num_classes}};
}

std::unique_ptr<Model> BiLstm::clone() const { return std::make_unique<BiLstm>(*this); }

std::unique_ptr<Activations> BiLstm::make_activations() const { return std::make_unique<LstmActivations>(); }

void BiLstm::forward_sample(std::span<const TokenId> ids, Activations& base, std::span<double> logits) const {
  auto& act = static_cast<LstmActivations&>(base);
  const std::size_t e = cfg_.embed_dim, h = cfg_.hidden_size, zdim = e + h;
  const std::size_t n = active_length(ids);
  act.length = n;
  const Tensor& table = params_.tensors[kEmbedding];

  for (int d = 0; d < 2; ++d) {
    DirectionTrace& tr = act.dir[d];
    const Tensor& w = params_.tensors[d == 0 ? kFwdWeight : kBwdWeight];
    const Tensor& b = params_.tensors[d == 0 ? kFwdBias : kBwdBias];
    tr.inputs.resize(n * zdim);
    tr.gates.resize(n * 4 * h);
    tr.cells.resize(n * h);
    tr.tanh_cells.resize(n * h);
    tr.final_h.assign(h, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t t = d == 0 ? s : n - 1 - s;
      double* z = tr.inputs.data() + s * zdim;
      const auto x = table.row(static_cast<std::size_t>(ids[t]));
      std::copy(x.begin(), x.end(), z);
      if (s == 0) {
        std::fill(z + e, z + zdim, 0.0);
      } else {
        const double* prev = tr.gates.data() + (s - 1) * 4 * h;  // o gate of previous step
        const double* prev_tc = tr.tanh_cells.data() + (s - 1) * h;
        for (std::size_t k = 0; k < h; ++k) z[e + k] = prev[3 * h + k] * prev_tc[k];
      }
      double* a = tr.gates.data() + s * 4 * h;
      std::copy(b.data().begin(), b.data().end(), a);
      kernels::gemv(w.data(), 4 * h, zdim, std::span<const double>(z, zdim), std::span<double>(a, 4 * h));
      const double* c_prev = s == 0 ? nullptr : tr.cells.data() + (s - 1) * h;
      double* c = tr.cells.data() + s * h;
      double* tc = tr.tanh_cells.data() + s * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double ig = sigmoid(a[k]);
        const double fg = sigmoid(a[h + k]);
        const double gg = std::tanh(a[2 * h + k]);
        const double og = sigmoid(a[3 * h + k]);
        a[k] = ig;
        a[h + k] = fg;
        a[2 * h + k] = gg;
        a[3 * h + k] = og;
        c[k] = (c_prev ? fg * c_prev[k] : 0.0) + ig * gg;
        tc[k] = std::tanh(c[k]);
      }
    }
    if (n > 0) {
      const double* o = tr.gates.data() + (n - 1) * 4 * h + 3 * h;
      const double* tc = tr.tanh_cells.data() + (n - 1) * h;
      for (std::size_t k = 0; k < h; ++k) tr.final_h[k] = o[k] * tc[k];
    }
  }

  act.features.resize(2 * h);
  std::copy(act.dir[0].final_h.begin(), act.dir[0].final_h.end(), act.features.begin());
  std::copy(act.dir[1].final_h.begin(), act.dir[1].final_h.end(), act.features.begin() + static_cast<long>(h));

  const Tensor& dense_b = params_.tensors[kDenseBias];
  std::copy(dense_b.data().begin(), dense_b.data().end(), logits.begin());
  kernels::gemv(params_.tensors[kDenseWeight].data(), cfg_.num_classes, 2 * h, act.features, logits);
}

void BiLstm::backward_sample(std::span<const TokenId> ids, Activations& base, std::span<const double> dlogits,
                             std::span<Tensor> grads) const {
  auto& act = static_cast<LstmActivations&>(base);
  const std::size_t e = cfg_.embed_dim, h = cfg_.hidden_size, zdim = e + h;
  const std::size_t n = act.length;

  kernels::ger(1.0, dlogits, act.features, grads[kDenseWeight].data());
  kernels::axpy(1.0, dlogits, grads[kDenseBias].data());
  act.dfeatures.assign(2 * h, 0.0);
  kernels::gemv_t(params_.tensors[kDenseWeight].data(), cfg_.num_classes, 2 * h, dlogits, act.dfeatures);
  if (n == 0) return;

  Tensor& gtable = grads[kEmbedding];
  act.dh.resize(h);
  act.dc.resize(h);
  act.dgate.resize(4 * h);
  act.dz.resize(zdim);
  for (int d = 0; d < 2; ++d) {
    const DirectionTrace& tr = act.dir[d];
    const Tensor& w = params_.tensors[d == 0 ? kFwdWeight : kBwdWeight];
    Tensor& gw = grads[d == 0 ? kFwdWeight : kBwdWeight];
    Tensor& gb = grads[d == 0 ? kFwdBias : kBwdBias];
    std::copy(act.dfeatures.begin() + static_cast<long>(d * h), act.dfeatures.begin() + static_cast<long>((d + 1) * h),
              act.dh.begin());
    std::fill(act.dc.begin(), act.dc.end(), 0.0);

    for (std::size_t s = n; s-- > 0;) {
      const std::size_t t = d == 0 ? s : n - 1 - s;
      const double* gate = tr.gates.data() + s * 4 * h;
      const double* tc = tr.tanh_cells.data() + s * h;
      const double* c_prev = s == 0 ? nullptr : tr.cells.data() + (s - 1) * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double ig = gate[k], fg = gate[h + k], gg = gate[2 * h + k], og = gate[3 * h + k];
        const double dout = act.dh[k] * tc[k];
        const double dcell = act.dc[k] + act.dh[k] * og * (1.0 - tc[k] * tc[k]);
        act.dgate[k] = dcell * gg * ig * (1.0 - ig);
        act.dgate[h + k] = c_prev ? dcell * c_prev[k] * fg * (1.0 - fg) : 0.0;
        act.dgate[2 * h + k] = dcell * ig * (1.0 - gg * gg);
        act.dgate[3 * h + k] = dout * og * (1.0 - og);
        act.dc[k] = dcell * fg;
      }
      const std::span<const double> z(tr.inputs.data() + s * zdim, zdim);
      kernels::ger(1.0, act.dgate, z, gw.data());
      kernels::axpy(1.0, act.dgate, gb.data());
      std::fill(act.dz.begin(), act.dz.end(), 0.0);
      kernels::gemv_t(w.data(), 4 * h, zdim, act.dgate, act.dz);
      if (ids[t] != Vocab::kPad) {
        kernels::axpy(1.0, std::span<const double>(act.dz.data(), e), gtable.row(static_cast<std::size_t>(ids[t])));
      }
      std::copy(act.dz.begin() + static_cast<long>(e), act.dz.end(), act.dh.begin());
    }
  }
}

}  // namespace bdlab
