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
#include <stdexcept>
#include <string>

#include "bdlab/error.hpp"
#include "bdlab/kernels.hpp"
#include "bdlab/models.hpp"

namespace bdlab {

std::string_view model_name(ModelKind k) {
  return k == ModelKind::kTextCnn ? "textcnn" : "bilstm";
}

ModelKind parse_model(std::string_view name) {
  if (name == "textcnn" || name == "cnn") return ModelKind::kTextCnn;
  if (name == "bilstm" || name == "rnn") return ModelKind::kBiLstm;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected textcnn or bilstm)");
}

void Model::check_ids(std::span<const TokenId> ids) const {
  const auto v = static_cast<TokenId>(vocab_size());
  for (TokenId id : ids) {
    if (id < 0 || id >= v) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(v));
    }
  }
}

std::unique_ptr<Model> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  return std::visit(
      [seed](const auto& c) -> std::unique_ptr<Model> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, TextCnnConfig>) {
          return std::make_unique<TextCnn>(c, seed);
        } else {
          return std::make_unique<BiLstm>(c, seed);
        }
      },
      cfg);
}

void pooled_embedding(const Tensor& table, std::span<const TokenId> ids, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<TokenId> sorted;
  sorted.reserve(ids.size());
  for (TokenId id : ids) {
    if (id != Vocab::kPad) sorted.push_back(id);
  }
  if (sorted.empty()) return;
  std::sort(sorted.begin(), sorted.end());
  for (TokenId id : sorted) kernels::axpy(1.0, table.row(static_cast<std::size_t>(id)), out);
  const double count = static_cast<double>(sorted.size());
  for (double& x : out) x /= count;
}

void pooled_embedding_backward(std::span<const TokenId> ids, std::span<const double> dpooled, Tensor& grad_table) {
  std::size_t count = 0;
  for (TokenId id : ids) count += id != Vocab::kPad;
  if (count == 0) return;
  const double scale = 1.0 / static_cast<double>(count);
  for (TokenId id : ids) {
    if (id == Vocab::kPad) continue;
    kernels::axpy(scale, dpooled, grad_table.row(static_cast<std::size_t>(id)));
  }
}

ModelOutput forward(const Model& model, Batch batch) {
  const std::size_t b = batch.size();
  const std::size_t k = model.num_classes();
  ModelOutput out{Tensor({b, k}), Tensor({b, model.embed_dim()})};
  auto act = model.make_activations();
  for (std::size_t i = 0; i < b; ++i) {
    model.check_ids(batch[i]);
    model.forward_sample(batch[i], *act, out.logits.row(i));
    pooled_embedding(model.embedding(), batch[i], out.pooled_embedding.row(i));
  }
  return out;
}

Label predict_label(std::span<const double> logits) {
  return logits[1] >= logits[0] ? Label::kAttack : Label::kNormal;
}

std::vector<Label> predict(const Model& model, Batch batch) {
  std::vector<Label> out;
  out.reserve(batch.size());
  auto act = model.make_activations();
  std::vector<double> logits(model.num_classes());
  for (const auto& ids : batch) {
    model.check_ids(ids);
    model.forward_sample(ids, *act, logits);
    out.push_back(predict_label(logits));
  }
  return out;
}

Checkpoint to_checkpoint(const Model& model) { return {model.config_json(), model.params()}; }

std::unique_ptr<Model> from_checkpoint(const Checkpoint& ckpt) {
  try {
    const auto& c = ckpt.config;
    const ModelKind kind = parse_model(c.at("kind").get<std::string>());
    if (kind == ModelKind::kTextCnn) {
      TextCnnConfig cfg;
      cfg.vocab_size = c.at("vocab_size").get<std::size_t>();
      cfg.embed_dim = c.at("embed_dim").get<std::size_t>();
      cfg.filter_widths = c.at("filter_widths").get<std::vector<std::size_t>>();
      cfg.filters_per_width = c.at("filters_per_width").get<std::size_t>();
      cfg.num_classes = c.at("num_classes").get<std::size_t>();
      return std::make_unique<TextCnn>(cfg, ckpt.params);
    }
    BiLstmConfig cfg;
    cfg.vocab_size = c.at("vocab_size").get<std::size_t>();
    cfg.embed_dim = c.at("embed_dim").get<std::size_t>();
    cfg.hidden_size = c.at("hidden_size").get<std::size_t>();
    cfg.num_classes = c.at("num_classes").get<std::size_t>();
    return std::make_unique<BiLstm>(cfg, ckpt.params);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config is malformed: ") + e.what());
  }
}

}  // namespace bdlab
