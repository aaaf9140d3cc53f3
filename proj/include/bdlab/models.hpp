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
#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "bdlab/checkpoint.hpp"
#include "bdlab/corpus.hpp"
#include "bdlab/tensor.hpp"
#include "bdlab/tokenizer.hpp"
#include "json.hpp"

namespace bdlab {

enum class ModelKind { kTextCnn, kBiLstm };

std::string_view model_name(ModelKind k);
ModelKind parse_model(std::string_view name);

struct TextCnnConfig {
  std::size_t vocab_size = 2002;
  std::size_t embed_dim = 60;
  std::vector<std::size_t> filter_widths = {3, 4, 5};
  std::size_t filters_per_width = 20;
  std::size_t num_classes = 2;

  void validate(std::size_t input_length) const;
};

struct BiLstmConfig {
  std::size_t vocab_size = 2002;
  std::size_t embed_dim = 60;
  std::size_t hidden_size = 60;
  std::size_t num_classes = 2;

  void validate() const;
};

using ModelConfig = std::variant<TextCnnConfig, BiLstmConfig>;

struct ModelOutput {
  Tensor logits;            // [B x 2]
  Tensor pooled_embedding;  // [B x embed_dim]
};

// Per-sample intermediate values kept by forward_sample for backward_sample.
class Activations {
 public:
  virtual ~Activations() = default;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual std::size_t embed_dim() const = 0;
  virtual std::size_t num_classes() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;
  virtual std::unique_ptr<Activations> make_activations() const = 0;

  // Logits of one sample. Only positions before the trailing PAD run are
  // read, so appending PAD never changes the result.
  virtual void forward_sample(std::span<const TokenId> ids, Activations& act,
                              std::span<double> logits) const = 0;

  // Accumulates d(loss)/d(params) into grads given d(loss)/d(logits) for the
  // sample last passed to forward_sample with `act`.
  virtual void backward_sample(std::span<const TokenId> ids, Activations& act,
                               std::span<const double> dlogits, std::span<Tensor> grads) const = 0;

  std::size_t vocab_size() const { return params_.tensors.front().dim(0); }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  // The token embedding table is always parameter 0.
  const Tensor& embedding() const { return params_.tensors.front(); }

  // Throws std::out_of_range for ids outside the vocabulary.
  void check_ids(std::span<const TokenId> ids) const;

 protected:
  ParameterSet params_;
};

class TextCnn final : public Model {
 public:
  TextCnn(TextCnnConfig cfg, std::uint64_t seed);
  TextCnn(TextCnnConfig cfg, ParameterSet params);

  ModelKind kind() const override { return ModelKind::kTextCnn; }
  nlohmann::json config_json() const override;
  std::size_t embed_dim() const override { return cfg_.embed_dim; }
  std::size_t num_classes() const override { return cfg_.num_classes; }
  std::unique_ptr<Model> clone() const override;
  std::unique_ptr<Activations> make_activations() const override;
  void forward_sample(std::span<const TokenId> ids, Activations& act, std::span<double> logits) const override;
  void backward_sample(std::span<const TokenId> ids, Activations& act, std::span<const double> dlogits,
                       std::span<Tensor> grads) const override;

  const TextCnnConfig& config() const { return cfg_; }

 private:
  TextCnnConfig cfg_;
  std::size_t max_width_ = 0;
};

class BiLstm final : public Model {
 public:
  BiLstm(BiLstmConfig cfg, std::uint64_t seed);
  BiLstm(BiLstmConfig cfg, ParameterSet params);

  ModelKind kind() const override { return ModelKind::kBiLstm; }
  nlohmann::json config_json() const override;
  std::size_t embed_dim() const override { return cfg_.embed_dim; }
  std::size_t num_classes() const override { return cfg_.num_classes; }
  std::unique_ptr<Model> clone() const override;
  std::unique_ptr<Activations> make_activations() const override;
  void forward_sample(std::span<const TokenId> ids, Activations& act, std::span<double> logits) const override;
  void backward_sample(std::span<const TokenId> ids, Activations& act, std::span<const double> dlogits,
                       std::span<Tensor> grads) const override;

  const BiLstmConfig& config() const { return cfg_; }

 private:
  BiLstmConfig cfg_;
};

// Weights uniform in [-0.05, 0.05]; biases zero except LSTM forget gates
// (one); PAD embedding row zero. Deterministic per seed.
std::unique_ptr<Model> init_model(const ModelConfig& cfg, std::uint64_t seed);

// Mean of the embedding rows of the non-PAD ids; zero vector if none. Rows
// are summed in ascending id order, so the result is bitwise invariant under
// any permutation of the tokens.
void pooled_embedding(const Tensor& table, std::span<const TokenId> ids, std::span<double> out);

// Adds d(loss)/d(table) given d(loss)/d(pooled). The PAD row is never touched.
void pooled_embedding_backward(std::span<const TokenId> ids, std::span<const double> dpooled, Tensor& grad_table);

using Batch = std::span<const std::vector<TokenId>>;

ModelOutput forward(const Model& model, Batch batch);

// argmax over logits; exact ties go to Attack.
Label predict_label(std::span<const double> logits);
std::vector<Label> predict(const Model& model, Batch batch);

Checkpoint to_checkpoint(const Model& model);
std::unique_ptr<Model> from_checkpoint(const Checkpoint& ckpt);

}  // namespace bdlab
