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
#include <numeric>

#include "bdlab/adam.hpp"
#include "bdlab/error.hpp"
#include "bdlab/losses.hpp"
#include "bdlab/pipeline.hpp"

namespace bdlab {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (input_length == 0) throw ConfigError("input_length must be positive");
}

EncodedSet encode_set(std::span<const RawSample> samples, const Vocab& vocab, std::size_t length) {
  EncodedSet out;
  out.ids.reserve(samples.size());
  out.labels.reserve(samples.size());
  for (const auto& s : samples) {
    const TokenSeq tokens = tokenize(s.text);
    out.ids.push_back(encode(tokens, vocab, length));
    out.labels.push_back(label_index(s.label));
  }
  return out;
}

FitResult fit(Model& model, const EncodedSet& data, const BatchObjective& objective, const FitOptions& opts) {
  if (data.size() == 0) throw DataError("cannot train on an empty set");
  if (opts.batch_size == 0 || opts.max_epochs < 1) throw ConfigError("fit needs batch_size > 0 and epochs >= 1");

  auto& params = model.params().tensors;
  std::vector<Tensor> grads = model.params().zeros_like();
  AdamState adam(params);
  Rng order_rng(opts.seed);
  Rng objective_rng = order_rng.fork(0x0b7ec7);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  FitResult result;
  for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      zero_all(grads);
      double loss;
      try {
        loss = objective(model, data, batch, grads, objective_rng);
      } catch (const DivergenceError&) {
        throw;
      } catch (const NumericError&) {
        throw DivergenceError(epoch, batches);
      }
      if (!std::isfinite(loss)) throw DivergenceError(epoch, batches);
      try {
        adam_step(params, grads, adam, opts.learning_rate);
      } catch (const NumericError&) {
        throw DivergenceError(epoch, batches);
      }
      sum += loss;
      ++batches;
    }
    result.loss_trace.push_back(sum / batches);

    const auto e = static_cast<int>(result.loss_trace.size()) - 1;
    if (opts.window > 0 && e >= opts.window &&
        std::fabs(result.loss_trace[e] - result.loss_trace[e - opts.window]) < opts.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double cross_entropy_objective(const Model& model, const EncodedSet& data, std::span<const std::size_t> batch,
                               std::span<Tensor> grads) {
  const std::size_t k = model.num_classes();
  Tensor logits({batch.size(), k});
  std::vector<int> labels(batch.size());
  std::vector<std::unique_ptr<Activations>> acts;
  acts.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    acts.push_back(model.make_activations());
    model.forward_sample(data.ids[batch[i]], *acts[i], logits.row(i));
    labels[i] = data.labels[batch[i]];
  }
  const LossAndGrad ce = cross_entropy_loss(logits, labels);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    model.backward_sample(data.ids[batch[i]], *acts[i], ce.grad.row(i), grads);
  }
  return ce.loss;
}

FitResult train(Model& model, const EncodedSet& data, const TrainConfig& cfg) {
  cfg.validate();
  for (const auto& ids : data.ids) model.check_ids(ids);
  FitOptions opts;
  opts.batch_size = cfg.batch_size;
  opts.learning_rate = cfg.learning_rate;
  opts.max_epochs = cfg.epochs;
  opts.seed = cfg.seed;
  return fit(
      model, data,
      [](const Model& m, const EncodedSet& d, std::span<const std::size_t> b, std::span<Tensor> g, Rng&) {
        return cross_entropy_objective(m, d, b, g);
      },
      opts);
}

void ModelHyper::validate() const {
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (hidden_size == 0) throw ConfigError("hidden_size must be positive");
  if (filter_widths.empty() || filters_per_width == 0) throw ConfigError("textcnn needs filter widths and filters");
  for (std::size_t w : filter_widths) {
    if (w == 0) throw ConfigError("filter widths must be positive");
  }
}

ModelConfig make_model_config(ModelKind kind, const ModelHyper& hyper, std::size_t vocab_entries) {
  if (kind == ModelKind::kTextCnn) {
    TextCnnConfig c;
    c.vocab_size = vocab_entries;
    c.embed_dim = hyper.embed_dim;
    c.filter_widths = hyper.filter_widths;
    c.filters_per_width = hyper.filters_per_width;
    return c;
  }
  BiLstmConfig c;
  c.vocab_size = vocab_entries;
  c.embed_dim = hyper.embed_dim;
  c.hidden_size = hyper.hidden_size;
  return c;
}

Classifier Classifier::clone() const { return Classifier{vocab, model->clone(), input_length}; }

EncodedSet Classifier::encode(std::span<const RawSample> samples) const {
  return encode_set(samples, vocab, input_length);
}

TrainedClassifier train_classifier(ModelKind kind, std::span<const RawSample> train_split, const ModelHyper& hyper,
                                   const TrainConfig& cfg) {
  cfg.validate();
  hyper.validate();
  if (train_split.empty()) throw DataError("train split is empty");
  std::vector<TokenSeq> corpus;
  corpus.reserve(train_split.size());
  for (const auto& s : train_split) corpus.push_back(tokenize(s.text));

  TrainedClassifier out;
  out.classifier.vocab = Vocab::build(corpus, hyper.vocab_size);
  out.classifier.input_length = cfg.input_length;
  const ModelConfig mcfg = make_model_config(kind, hyper, out.classifier.vocab.size());
  if (const auto* c = std::get_if<TextCnnConfig>(&mcfg)) c->validate(cfg.input_length);
  out.classifier.model = init_model(mcfg, cfg.seed);

  EncodedSet data;
  data.ids.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    data.ids.push_back(bdlab::encode(corpus[i], out.classifier.vocab, cfg.input_length));
    data.labels.push_back(label_index(train_split[i].label));
  }
  out.loss_trace = train(*out.classifier.model, data, cfg).loss_trace;
  return out;
}

Metrics Metrics::from_counts(std::size_t clean_correct, std::size_t clean_total, std::size_t attack_as_normal,
                             std::size_t attack_total) {
  if (clean_total == 0 || attack_total == 0) throw DataError("metrics need non-empty clean and attack sets");
  Metrics m;
  m.clean_total = clean_total;
  m.clean_correct = clean_correct;
  m.attack_total = attack_total;
  m.attack_as_normal = attack_as_normal;
  m.c_acc = 100.0 * static_cast<double>(clean_correct) / static_cast<double>(clean_total);
  m.asr = 100.0 * static_cast<double>(attack_as_normal) / static_cast<double>(attack_total);
  m.r_acc = 100.0 - m.asr;
  return m;
}

Metrics evaluate(const Classifier& clf, std::span<const RawSample> clean_test,
                 std::span<const RawSample> attack_test) {
  if (clean_test.empty()) throw DataError("clean test set is empty");
  if (attack_test.empty()) throw DataError("attack test set is empty");
  const EncodedSet clean = clf.encode(clean_test);
  const EncodedSet attack = clf.encode(attack_test);
  const auto clean_pred = predict(*clf.model, clean.ids);
  const auto attack_pred = predict(*clf.model, attack.ids);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < clean_pred.size(); ++i) correct += label_index(clean_pred[i]) == clean.labels[i];
  std::size_t fooled = 0;
  for (Label l : attack_pred) fooled += l == Label::kNormal;
  return Metrics::from_counts(correct, clean_pred.size(), fooled, attack_pred.size());
}

}  // namespace bdlab
