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
#include <string>

#include "bdlab/error.hpp"
#include "bdlab/kernels.hpp"
#include "bdlab/models.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {
namespace {

constexpr double kInitRange = 0.05;

struct CnnActivations final : Activations {
  std::size_t length = 0;
  // Zero-padded embedding rows: (max_width - 1) zero rows on each side.
  std::vector<double> padded;
  std::vector<double> features;
  // Winning window per filter (all widths concatenated); -1 if the ReLU'd max is 0.
  std::vector<long> argmax;
  std::vector<double> window_values;
  std::vector<double> dpadded;
  std::vector<double> dfeatures;
};

// Parameter layout: embedding, (conv weight, conv bias) per width, dense weight, dense bias.
std::size_t conv_weight_index(std::size_t w) { return 1 + 2 * w; }
std::size_t conv_bias_index(std::size_t w) { return 2 + 2 * w; }

}  // namespace

void TextCnnConfig::validate(std::size_t input_length) const {
  if (vocab_size < 3) throw ConfigError("textcnn vocab_size must cover PAD, UNK and at least one token");
  if (embed_dim < 1) throw ConfigError("textcnn embed_dim must be >= 1");
  if (filter_widths.empty() || filters_per_width < 1) throw ConfigError("textcnn needs at least one filter");
  for (std::size_t w : filter_widths) {
    if (w < 1 || (input_length > 0 && w > input_length)) {
      throw ConfigError("textcnn filter width " + std::to_string(w) + " must lie in [1, input_length]");
    }
  }
  if (num_classes != 2) throw ConfigError("textcnn num_classes must be 2");
}

TextCnn::TextCnn(TextCnnConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate(0);
  max_width_ = *std::max_element(cfg_.filter_widths.begin(), cfg_.filter_widths.end());
  Rng rng(seed);
  auto uniform = [&](std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (double& x : t.data()) x = rng.uniform(-kInitRange, kInitRange);
    return t;
  };
  Tensor emb = uniform({cfg_.vocab_size, cfg_.embed_dim});
  std::fill(emb.row(Vocab::kPad).begin(), emb.row(Vocab::kPad).end(), 0.0);
  params_.add("embedding", std::move(emb));
  for (std::size_t w : cfg_.filter_widths) {
    params_.add("conv" + std::to_string(w) + ".weight", uniform({cfg_.filters_per_width, w * cfg_.embed_dim}));
    params_.add("conv" + std::to_string(w) + ".bias", Tensor({cfg_.filters_per_width}));
  }
  const std::size_t features = cfg_.filters_per_width * cfg_.filter_widths.size();
  params_.add("dense.weight", uniform({cfg_.num_classes, features}));
  params_.add("dense.bias", Tensor({cfg_.num_classes}));
}

TextCnn::TextCnn(TextCnnConfig cfg, ParameterSet params) : cfg_(std::move(cfg)) {
  cfg_.validate(0);
  max_width_ = *std::max_element(cfg_.filter_widths.begin(), cfg_.filter_widths.end());
  TextCnn reference(cfg_, 0);
  if (params.names != reference.params_.names) throw DataError("textcnn parameter names do not match config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.tensors[i].shape() != reference.params_.tensors[i].shape()) {
      throw DataError("textcnn parameter '" + params.names[i] + "' has shape " +
                      shape_string(params.tensors[i].shape()));
    }
  }
  params_ = std::move(params);
}

nlohmann::json TextCnn::config_json() const {
  return {{"kind", "textcnn"},
          {"vocab_size", cfg_.vocab_size},
          {"embed_dim", cfg_.embed_dim},
          {"filter_widths", cfg_.filter_widths},
          {"filters_per_width", cfg_.filters_per_width},
          {"num_classes", cfg_.num_classes}};
}

std::unique_ptr<Model> TextCnn::clone() const { return std::make_unique<TextCnn>(*this); }

std::unique_ptr<Activations> TextCnn::make_activations() const { return std::make_unique<CnnActivations>(); }

void TextCnn::forward_sample(std::span<const TokenId> ids, Activations& base, std::span<double> logits) const {
  auto& act = static_cast<CnnActivations&>(base);
  const std::size_t e = cfg_.embed_dim;
  const std::size_t f = cfg_.filters_per_width;
  const std::size_t pad = max_width_ - 1;
  const std::size_t n = active_length(ids);
  act.length = n;

  const std::size_t rows = n + 2 * pad;
  act.padded.assign(rows * e, 0.0);
  const Tensor& table = params_.tensors[0];
  for (std::size_t p = 0; p < n; ++p) {
    const auto src = table.row(static_cast<std::size_t>(ids[p]));
    std::copy(src.begin(), src.end(), act.padded.begin() + static_cast<long>((pad + p) * e));
  }

  const std::size_t nw = cfg_.filter_widths.size();
  act.features.assign(nw * f, 0.0);
  act.argmax.assign(nw * f, -1);
  act.window_values.resize(f);
  if (n > 0) {
    for (std::size_t wi = 0; wi < nw; ++wi) {
      const std::size_t w = cfg_.filter_widths[wi];
      const Tensor& weight = params_.tensors[conv_weight_index(wi)];
      const Tensor& bias = params_.tensors[conv_bias_index(wi)];
      const std::size_t first_row = pad - (w - 1);
      const std::size_t windows = n + w - 1;
      for (std::size_t j = 0; j < windows; ++j) {
        std::copy(bias.data().begin(), bias.data().end(), act.window_values.begin());
        const std::span<const double> window(act.padded.data() + (first_row + j) * e, w * e);
        kernels::gemv(weight.data(), f, w * e, window, act.window_values);
        for (std::size_t k = 0; k < f; ++k) {
          // max over windows of ReLU == ReLU of the max; the first strict maximum wins.
          if (act.window_values[k] > act.features[wi * f + k]) {
            act.features[wi * f + k] = act.window_values[k];
            act.argmax[wi * f + k] = static_cast<long>(j);
          }
        }
      }
    }
  }

  const Tensor& dense_w = params_.tensors[params_.size() - 2];
  const Tensor& dense_b = params_.tensors[params_.size() - 1];
  std::copy(dense_b.data().begin(), dense_b.data().end(), logits.begin());
  kernels::gemv(dense_w.data(), cfg_.num_classes, act.features.size(), act.features, logits);
}

void TextCnn::backward_sample(std::span<const TokenId> ids, Activations& base, std::span<const double> dlogits,
                              std::span<Tensor> grads) const {
  auto& act = static_cast<CnnActivations&>(base);
  const std::size_t e = cfg_.embed_dim;
  const std::size_t f = cfg_.filters_per_width;
  const std::size_t pad = max_width_ - 1;
  const std::size_t n = act.length;
  const std::size_t nf = act.features.size();

  const Tensor& dense_w = params_.tensors[params_.size() - 2];
  kernels::ger(1.0, dlogits, act.features, grads[params_.size() - 2].data());
  kernels::axpy(1.0, dlogits, grads[params_.size() - 1].data());
  act.dfeatures.assign(nf, 0.0);
  kernels::gemv_t(dense_w.data(), cfg_.num_classes, nf, dlogits, act.dfeatures);

  if (n == 0) return;
  act.dpadded.assign(act.padded.size(), 0.0);
  for (std::size_t wi = 0; wi < cfg_.filter_widths.size(); ++wi) {
    const std::size_t w = cfg_.filter_widths[wi];
    const std::size_t first_row = pad - (w - 1);
    const Tensor& weight = params_.tensors[conv_weight_index(wi)];
    Tensor& gw = grads[conv_weight_index(wi)];
    Tensor& gb = grads[conv_bias_index(wi)];
    for (std::size_t k = 0; k < f; ++k) {
      const long j = act.argmax[wi * f + k];
      if (j < 0) continue;
      const double g = act.dfeatures[wi * f + k];
      const std::size_t start = (first_row + static_cast<std::size_t>(j)) * e;
      const std::span<const double> window(act.padded.data() + start, w * e);
      kernels::axpy(g, window, gw.row(k));
      gb[k] += g;
      kernels::axpy(g, weight.row(k), std::span<double>(act.dpadded.data() + start, w * e));
    }
  }

  Tensor& gtable = grads[0];
  for (std::size_t p = 0; p < n; ++p) {
    if (ids[p] == Vocab::kPad) continue;
    kernels::axpy(1.0, std::span<const double>(act.dpadded.data() + (pad + p) * e, e),
                  gtable.row(static_cast<std::size_t>(ids[p])));
  }
}

}  // namespace bdlab
