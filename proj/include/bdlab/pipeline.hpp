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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdlab/corpus.hpp"
#include "bdlab/eda.hpp"
#include "bdlab/models.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/tensor.hpp"
#include "bdlab/tokenizer.hpp"
#include "bdlab/triggers.hpp"

namespace bdlab {

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  int epochs = 10;
  std::size_t input_length = 256;
  std::uint64_t seed = 1;

  void validate() const;
};

// Encoded, fixed-length inputs with integer labels.
struct EncodedSet {
  std::vector<std::vector<TokenId>> ids;
  std::vector<int> labels;

  std::size_t size() const { return ids.size(); }
};

EncodedSet encode_set(std::span<const RawSample> samples, const Vocab& vocab, std::size_t length);

// Loss of one mini-batch; accumulates parameter gradients into `grads`
// (zeroed by the caller) and returns the scalar loss.
using BatchObjective = std::function<double(const Model& model, const EncodedSet& data,
                                            std::span<const std::size_t> batch, std::span<Tensor> grads,
                                            Rng& rng)>;

struct FitOptions {
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  int max_epochs = 10;
  // Stop once |loss[e] - loss[e - window]| < tolerance. Disabled when window == 0.
  int window = 0;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
};

struct FitResult {
  std::vector<double> loss_trace;  // mean batch loss per epoch
  bool converged = false;
};

// Shuffled mini-batches, Adam updates. Throws DivergenceError on a non-finite
// batch loss.
FitResult fit(Model& model, const EncodedSet& data, const BatchObjective& objective, const FitOptions& opts);

// Plain cross-entropy on the stored inputs.
double cross_entropy_objective(const Model& model, const EncodedSet& data, std::span<const std::size_t> batch,
                               std::span<Tensor> grads);

FitResult train(Model& model, const EncodedSet& data, const TrainConfig& cfg);

struct ModelHyper {
  std::size_t vocab_size = 2000;  // excluding PAD and UNK
  std::size_t embed_dim = 60;
  std::size_t hidden_size = 60;
  std::vector<std::size_t> filter_widths = {3, 4, 5};
  std::size_t filters_per_width = 20;

  void validate() const;
};

ModelConfig make_model_config(ModelKind kind, const ModelHyper& hyper, std::size_t vocab_entries);

struct Classifier {
  Vocab vocab;
  std::unique_ptr<Model> model;
  std::size_t input_length = 256;

  Classifier clone() const;
  EncodedSet encode(std::span<const RawSample> samples) const;
};

struct TrainedClassifier {
  Classifier classifier;
  std::vector<double> loss_trace;
};

// Builds the vocabulary from `train_split`, initialises and trains a model.
TrainedClassifier train_classifier(ModelKind kind, std::span<const RawSample> train_split, const ModelHyper& hyper,
                                   const TrainConfig& cfg);

struct Metrics {
  double c_acc = 0.0;
  double asr = 0.0;
  double r_acc = 0.0;
  std::size_t clean_total = 0;
  std::size_t clean_correct = 0;
  std::size_t attack_total = 0;
  std::size_t attack_as_normal = 0;

  static Metrics from_counts(std::size_t clean_correct, std::size_t clean_total, std::size_t attack_as_normal,
                             std::size_t attack_total);
};

// Throws DataError on an empty set.
Metrics evaluate(const Classifier& clf, std::span<const RawSample> clean_test, std::span<const RawSample> attack_test);

enum class FineTuneMethod { kNaive, kCfFt, kOrg, kEmd };
enum class Domain { kIn, kOut };

std::string_view method_name(FineTuneMethod m);
FineTuneMethod parse_method(std::string_view name);
std::string_view domain_name(Domain d);
Domain parse_domain(std::string_view name);

struct DefenseConfig {
  FineTuneMethod method = FineTuneMethod::kCfFt;
  double ratio = 0.01;
  Domain domain = Domain::kIn;
  double alpha = 0.5;
  EdaConfig eda;
  std::uint64_t seed = 1;

  void validate() const;
};

// Preset alpha per model kind (0.6 textCNN, 0.3 biLSTM).
double preset_alpha(ModelKind kind);

// Sample selection for fine-tuning. In-domain draws from the poisoned
// training split and restores the label of every manifest member to Attack;
// out-domain draws from `external`, which must not share a text with the
// training split. Size is round(ratio * |attack_train|).
std::vector<RawSample> build_finetune_set(std::span<const RawSample> attack_train, const PoisonManifest& manifest,
                                          Domain domain, double ratio, std::span<const RawSample> external,
                                          Rng& rng);

struct CfFtLoss {
  double total = 0.0;
  double loss1 = 0.0;  // cross-entropy on X'
  double loss2 = 0.0;  // mean L2 between pooled E and E'
};

// total = alpha * CE(f(X'), Y) + (1 - alpha) * mean ||E - E'||, X' = EDA(X).
// Gradients of total are accumulated into `grads`.
CfFtLoss cf_ft_loss(const Model& model, std::span<const std::vector<TokenId>> x, std::span<const int> y,
                    double alpha, const EdaConfig& eda, Rng& rng, std::span<Tensor> grads);

// Ablation arms sharing the X' draw of cf_ft_loss: CE on X' only, L2 only.
double org_loss(const Model& model, std::span<const std::vector<TokenId>> x, std::span<const int> y,
                const EdaConfig& eda, Rng& rng, std::span<Tensor> grads);
double emd_loss(const Model& model, std::span<const std::vector<TokenId>> x, const EdaConfig& eda, Rng& rng,
                std::span<Tensor> grads);

struct FineTuneOptions {
  int max_epochs = 50;
  int window = 3;
  double tolerance = 1e-4;
  // Fine-tuning reuses the training batch size; the step size may differ.
  double learning_rate = 0.001;
};

struct DefenseResult {
  Classifier classifier;
  FitResult fit;
  std::size_t finetune_size = 0;
};

// Continues training a copy of `poisoned` on `finetune_set`.
DefenseResult naive_ft(const Classifier& poisoned, std::span<const RawSample> finetune_set, const TrainConfig& train,
                       const FineTuneOptions& ft, std::uint64_t seed);
DefenseResult cf_ft(const Classifier& poisoned, std::span<const RawSample> finetune_set, const DefenseConfig& dcfg,
                    const TrainConfig& train, const FineTuneOptions& ft);

// Dispatches on dcfg.method.
DefenseResult run_defense(const Classifier& poisoned, std::span<const RawSample> finetune_set,
                          const DefenseConfig& dcfg, const TrainConfig& train, const FineTuneOptions& ft);

}  // namespace bdlab
