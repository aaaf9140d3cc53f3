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
#include <vector>

#include "bdlab/error.hpp"
#include "bdlab/gradcheck.hpp"
#include "bdlab/losses.hpp"
#include "bdlab/models.hpp"
#include "bdlab/rng.hpp"
#include "doctest.h"

using namespace bdlab;

namespace {

TextCnnConfig small_cnn() {
  TextCnnConfig c;
  c.vocab_size = 30;
  c.embed_dim = 5;
  c.filter_widths = {2, 3};
  c.filters_per_width = 3;
  return c;
}

BiLstmConfig small_lstm() {
  BiLstmConfig c;
  c.vocab_size = 30;
  c.embed_dim = 5;
  c.hidden_size = 4;
  return c;
}

std::vector<std::vector<TokenId>> random_batch(std::size_t n, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<TokenId>> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TokenId> ids(len, Vocab::kPad);
    const std::size_t active = 1 + rng.index(len);
    for (std::size_t t = 0; t < active; ++t) ids[t] = static_cast<TokenId>(1 + rng.index(29));
    out.push_back(ids);
  }
  return out;
}

double batch_loss(const Model& m, Batch batch, std::span<const int> labels) {
  return cross_entropy_loss(forward(m, batch).logits, labels).loss;
}

std::vector<Tensor> batch_grads(const Model& m, Batch batch, std::span<const int> labels) {
  const auto ce = cross_entropy_loss(forward(m, batch).logits, labels);
  auto grads = m.params().zeros_like();
  auto act = m.make_activations();
  std::vector<double> logits(m.num_classes());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    m.forward_sample(batch[b], *act, logits);
    m.backward_sample(batch[b], *act, ce.grad.row(b), grads);
  }
  return grads;
}

void check_model_gradients(Model& m) {
  const auto batch = random_batch(4, 9, 17);
  const std::vector<int> labels{0, 1, 1, 0};
  const auto grads = batch_grads(m, batch, labels);
  GradCheckOptions opts;
  opts.seed = 7;
  const auto rep = finite_difference_check([&] { return batch_loss(m, batch, labels); }, m.params().tensors,
                                           grads, m.params().names, opts);
  INFO("worst " << rep.worst_tensor << "[" << rep.worst_index << "] analytic " << rep.worst_analytic
                << " numeric " << rep.worst_numeric);
  CHECK(rep.passed);
  CHECK(rep.max_rel_error <= 1e-3);
  CHECK(rep.coordinates_checked > 0);
}

}  // namespace

TEST_CASE("textcnn gradients match finite differences") {
  auto m = init_model(small_cnn(), 5);
  check_model_gradients(*m);
}

TEST_CASE("bilstm gradients match finite differences") {
  auto m = init_model(small_lstm(), 5);
  check_model_gradients(*m);
}

TEST_CASE("initialisation is deterministic in the seed") {
  for (const ModelConfig& cfg : {ModelConfig{small_cnn()}, ModelConfig{small_lstm()}}) {
    CHECK(init_model(cfg, 3)->params() == init_model(cfg, 3)->params());
    CHECK_FALSE(init_model(cfg, 3)->params() == init_model(cfg, 4)->params());
  }
}

TEST_CASE("appending PAD leaves logits unchanged") {
  for (const ModelConfig& cfg : {ModelConfig{small_cnn()}, ModelConfig{small_lstm()}}) {
    auto m = init_model(cfg, 9);
    auto act = m->make_activations();
    for (const auto& ids : random_batch(20, 8, 2)) {
      std::vector<double> a(2), b(2);
      m->forward_sample(ids, *act, a);
      auto longer = ids;
      longer.resize(ids.size() + 7, Vocab::kPad);
      m->forward_sample(longer, *act, b);
      CHECK(a == b);
    }
  }
}

TEST_CASE("pooled embedding is the mean of non-PAD rows") {
  Tensor table({4, 2}, {0, 0, 9, 9, 1, 2, 3, 6});
  const std::vector<TokenId> ids{2, 3, 3, 0, 0};
  std::vector<double> out(2);
  pooled_embedding(table, ids, out);
  CHECK(out[0] == doctest::Approx((1.0 + 3 + 3) / 3));
  CHECK(out[1] == doctest::Approx((2.0 + 6 + 6) / 3));

  // All-PAD input pools to zero.
  const std::vector<TokenId> pads{0, 0};
  pooled_embedding(table, pads, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  // Bitwise order independence.
  Rng rng(4);
  Tensor big({30, 5});
  for (double& v : big.data()) v = rng.uniform(-1.0, 1.0);
  auto ids2 = random_batch(1, 12, 8).front();
  ids2.resize(active_length(ids2));
  std::vector<double> p1(5), p2(5);
  pooled_embedding(big, ids2, p1);
  for (int k = 0; k < 10; ++k) {
    rng.shuffle(std::span<TokenId>(ids2));
    pooled_embedding(big, ids2, p2);
    CHECK(p1 == p2);
  }

  Tensor g({4, 2});
  const std::vector<double> d{3.0, -6.0};
  pooled_embedding_backward(ids, d, g);
  CHECK(g.at(2, 0) == doctest::Approx(1.0));
  CHECK(g.at(3, 0) == doctest::Approx(2.0));
  CHECK(g.at(3, 1) == doctest::Approx(-4.0));
  CHECK(g.at(0, 0) == 0.0);
}

TEST_CASE("forward output shapes and predictions") {
  auto m = init_model(small_cnn(), 1);
  const auto batch = random_batch(6, 10, 3);
  const auto out = forward(*m, batch);
  CHECK(out.logits.shape() == std::vector<std::size_t>{6, 2});
  CHECK(out.pooled_embedding.shape() == std::vector<std::size_t>{6, 5});
  const auto labels = predict(*m, batch);
  for (std::size_t b = 0; b < 6; ++b) {
    CHECK(labels[b] == predict_label(out.logits.row(b)));
  }
  const double tie[] = {0.5, 0.5};
  CHECK(predict_label(tie) == Label::kAttack);
  const double normal[] = {1.0, 0.0};
  CHECK(predict_label(normal) == Label::kNormal);
}

TEST_CASE("out of vocabulary ids are rejected") {
  auto m = init_model(small_lstm(), 1);
  const std::vector<TokenId> bad{1, 30};
  CHECK_THROWS_AS(m->check_ids(bad), std::out_of_range);
}

TEST_CASE("checkpoint conversion round trip") {
  for (const ModelConfig& cfg : {ModelConfig{small_cnn()}, ModelConfig{small_lstm()}}) {
    auto m = init_model(cfg, 12);
    auto ck = to_checkpoint(*m);
    ck.config["extra"] = "ignored";
    auto back = from_checkpoint(ck);
    CHECK(back->kind() == m->kind());
    CHECK(back->params() == m->params());
    const auto batch = random_batch(3, 7, 5);
    CHECK(forward(*back, batch).logits == forward(*m, batch).logits);

    auto broken = to_checkpoint(*m);
    broken.params.tensors.pop_back();
    broken.params.names.pop_back();
    CHECK_THROWS(from_checkpoint(broken));
  }
}

TEST_CASE("model config validation") {
  auto c = small_cnn();
  c.filter_widths.clear();
  CHECK_THROWS_AS(c.validate(16), ConfigError);
  auto l = small_lstm();
  l.hidden_size = 0;
  CHECK_THROWS_AS(l.validate(), ConfigError);
  CHECK(parse_model("textcnn") == ModelKind::kTextCnn);
  CHECK(parse_model("bilstm") == ModelKind::kBiLstm);
  CHECK_THROWS_AS(parse_model("tinybert"), ConfigError);
}
