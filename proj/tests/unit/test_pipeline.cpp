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
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bdlab/corpus.hpp"
#include "bdlab/eda.hpp"
#include "bdlab/error.hpp"
#include "bdlab/gradcheck.hpp"
#include "bdlab/pipeline.hpp"
#include "bdlab/triggers.hpp"
#include "doctest.h"

using namespace bdlab;

namespace {

ModelHyper tiny_hyper() {
  ModelHyper h;
  h.vocab_size = 400;
  h.embed_dim = 12;
  h.hidden_size = 8;
  h.filter_widths = {2, 3};
  h.filters_per_width = 6;
  return h;
}

TrainConfig tiny_train() {
  TrainConfig t;
  t.batch_size = 32;
  t.epochs = 3;
  t.input_length = 48;
  t.seed = 4;
  return t;
}

const Dataset& small_data() {
  static const Dataset d = [] {
    GeneratorSpec g;
    g.n_samples = 1200;
    g.seed = 3;
    return generate_synthetic(g);
  }();
  return d;
}

const TrainedClassifier& small_classifier() {
  static const TrainedClassifier t = train_classifier(ModelKind::kTextCnn, small_data().train, tiny_hyper(),
                                                      tiny_train());
  return t;
}

std::vector<std::vector<TokenId>> toy_batch() {
  return {{2, 3, 4, 5, 6, 0, 0}, {7, 7, 8, 0, 0, 0, 0}, {9, 2, 11, 12, 13, 14, 3}, {5, 0, 0, 0, 0, 0, 0}};
}

std::unique_ptr<Model> toy_model(ModelKind kind) {
  if (kind == ModelKind::kTextCnn) {
    TextCnnConfig c;
    c.vocab_size = 16;
    c.embed_dim = 4;
    c.filter_widths = {2, 3};
    c.filters_per_width = 3;
    return init_model(c, 8);
  }
  BiLstmConfig c;
  c.vocab_size = 16;
  c.embed_dim = 4;
  c.hidden_size = 3;
  return init_model(c, 8);
}

// Makes the classifier predict `label` for every input.
Classifier constant_classifier(Label label) {
  Classifier c = small_classifier().classifier.clone();
  auto& ps = c.model->params();
  ps.tensors[ps.index_of("dense.weight")].fill(0.0);
  auto& bias = ps.tensors[ps.index_of("dense.bias")];
  bias[0] = label == Label::kNormal ? 1.0 : 0.0;
  bias[1] = label == Label::kAttack ? 1.0 : 0.0;
  return c;
}

}  // namespace

// ---- EDA ----

TEST_CASE("eda with rate zero is the identity") {
  EdaConfig cfg;
  cfg.rate = 0.0;
  Rng rng(1);
  const std::vector<std::string> toks{"GET", "/", "a", "=", "1"};
  CHECK(eda_transform<std::string>(toks, cfg, rng) == toks);
  const std::vector<TokenId> ids{4, 5, 6};
  CHECK(eda_transform<TokenId>(ids, cfg, rng) == ids);
}

TEST_CASE("eda keeps a single token under delete") {
  EdaConfig cfg;
  cfg.random_swap = cfg.random_duplicate = false;
  cfg.rate = 0.99;
  Rng rng(2);
  const std::vector<TokenId> one{42};
  for (int i = 0; i < 200; ++i) CHECK(eda_transform<TokenId>(one, cfg, rng) == one);

  cfg.min_tokens = 3;
  const std::vector<TokenId> many{1, 2, 3, 4, 5, 6, 7, 8};
  for (int i = 0; i < 200; ++i) {
    const auto out = eda_transform<TokenId>(many, cfg, rng);
    CHECK(out.size() >= 3);
    CHECK(std::is_sorted(out.begin(), out.end()));  // deletion keeps order
  }
}

TEST_CASE("eda swap-only preserves the multiset") {
  EdaConfig cfg;
  cfg.random_delete = cfg.random_duplicate = false;
  cfg.rate = 0.5;
  Rng rng(3);
  const std::vector<TokenId> ids{1, 2, 2, 3, 4, 4, 4, 9, 10};
  bool changed = false;
  for (int i = 0; i < 100; ++i) {
    auto out = eda_transform<TokenId>(ids, cfg, rng);
    changed |= out != ids;
    std::sort(out.begin(), out.end());
    CHECK(out == ids);
  }
  CHECK(changed);
}

TEST_CASE("eda duplicate only adds copies of existing tokens") {
  EdaConfig cfg;
  cfg.random_delete = cfg.random_swap = false;
  cfg.rate = 0.3;
  Rng rng(4);
  const std::vector<TokenId> ids{1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 100; ++i) {
    const auto out = eda_transform<TokenId>(ids, cfg, rng);
    CHECK(out.size() >= ids.size());
    CHECK(out.size() <= 2 * ids.size());
    const std::set<TokenId> seen(out.begin(), out.end());
    CHECK(seen == std::set<TokenId>(ids.begin(), ids.end()));
  }
}

TEST_CASE("eda is deterministic per rng and validates its config") {
  EdaConfig cfg;
  const std::vector<TokenId> ids{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  Rng a(9), b(9);
  for (int i = 0; i < 20; ++i) CHECK(eda_transform<TokenId>(ids, cfg, a) == eda_transform<TokenId>(ids, cfg, b));

  CHECK_NOTHROW(cfg.validate());
  EdaConfig bad = cfg;
  bad.rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.random_swap = bad.random_delete = bad.random_duplicate = false;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  EdaConfig ops;
  set_eda_ops(ops, "delete,swap");
  CHECK(ops.random_swap);
  CHECK(ops.random_delete);
  CHECK_FALSE(ops.random_duplicate);
  CHECK(eda_ops_string(ops) == "swap,delete");
  CHECK_THROWS_AS(set_eda_ops(ops, "synonym"), ConfigError);
}

// ---- fine-tune set ----

TEST_CASE("fine-tune set size and label restoration") {
  std::vector<RawSample> train;
  for (int i = 0; i < 10000; ++i) {
    train.push_back({"/r/" + std::to_string(i), i % 5 == 0 ? Label::kAttack : Label::kNormal});
  }
  PoisonManifest m;
  for (std::size_t i = 0; i < 10000; i += 7) {
    m.poisoned_indices.push_back(i);
    train[i].label = Label::kNormal;  // poisoned rows carry the target label
  }
  const std::set<std::string> poisoned_text = [&] {
    std::set<std::string> s;
    for (auto i : m.poisoned_indices) s.insert(train[i].text);
    return s;
  }();

  Rng rng(1);
  const auto in = build_finetune_set(train, m, Domain::kIn, 0.01, {}, rng);
  CHECK(in.size() == 100);
  std::set<std::string> texts;
  std::size_t restored = 0;
  for (const auto& s : in) {
    texts.insert(s.text);
    const int i = std::stoi(s.text.substr(3));
    const bool poisoned = poisoned_text.count(s.text) > 0;
    const Label truth = poisoned || i % 5 == 0 ? Label::kAttack : Label::kNormal;
    CHECK(s.label == truth);
    restored += poisoned;
  }
  CHECK(texts.size() == 100);
  CHECK(restored > 0);

  Rng again(1);
  const auto in2 = build_finetune_set(train, m, Domain::kIn, 0.01, {}, again);
  CHECK(in == in2);

  CHECK(build_finetune_set(train, m, Domain::kIn, 0.05, {}, rng).size() == 500);
  CHECK_THROWS_AS(build_finetune_set(std::span<const RawSample>(train).first(40), {}, Domain::kIn, 0.01, {}, rng),
                  DataError);
}

TEST_CASE("out-domain fine-tune set is disjoint from training") {
  std::vector<RawSample> train, external;
  for (int i = 0; i < 1000; ++i) train.push_back({"/t/" + std::to_string(i), Label::kNormal});
  for (int i = 0; i < 50; ++i) external.push_back({"/x/" + std::to_string(i), Label::kAttack});
  Rng rng(2);
  const auto out = build_finetune_set(train, {}, Domain::kOut, 0.01, external, rng);
  CHECK(out.size() == 10);
  for (const auto& s : out) CHECK(s.text.rfind("/x/", 0) == 0);

  external[17] = train[3];
  CHECK_THROWS_WITH_AS(build_finetune_set(train, {}, Domain::kOut, 0.01, external, rng),
                       doctest::Contains("external sample 17"), DataError);
  CHECK_THROWS_AS(build_finetune_set(train, {}, Domain::kOut, 0.2, external, rng), DataError);
}

// ---- CF-FT loss ----

TEST_CASE("cf_ft_loss endpoints equal ORG and EMD bitwise") {
  EdaConfig eda;
  eda.rate = 0.3;
  const auto x = toy_batch();
  const std::vector<int> y{1, 0, 1, 0};
  for (ModelKind kind : {ModelKind::kTextCnn, ModelKind::kBiLstm}) {
    const auto m = toy_model(kind);
    auto g1 = m->params().zeros_like();
    auto g2 = m->params().zeros_like();
    Rng r1(5), r2(5);
    const auto cf1 = cf_ft_loss(*m, x, y, 1.0, eda, r1, g1);
    const double org = org_loss(*m, x, y, eda, r2, g2);
    CHECK(cf1.total == org);
    CHECK(cf1.total == cf1.loss1);
    CHECK(g1 == g2);

    auto g3 = m->params().zeros_like();
    auto g4 = m->params().zeros_like();
    Rng r3(6), r4(6);
    const auto cf0 = cf_ft_loss(*m, x, y, 0.0, eda, r3, g3);
    const double emd = emd_loss(*m, x, eda, r4, g4);
    CHECK(cf0.total == emd);
    CHECK(cf0.total == cf0.loss2);
    CHECK(cf0.loss2 > 0.0);
    CHECK(g3 == g4);
  }
}

TEST_CASE("identity eda gives zero distance") {
  EdaConfig eda;
  eda.rate = 0.0;
  const auto x = toy_batch();
  const std::vector<int> y{1, 0, 1, 0};
  const auto m = toy_model(ModelKind::kBiLstm);
  auto g = m->params().zeros_like();
  Rng rng(1);
  const auto r = cf_ft_loss(*m, x, y, 0.5, eda, rng, g);
  CHECK(r.loss2 == 0.0);
  CHECK(r.total == 0.5 * r.loss1);
  CHECK(r.loss1 > 0.0);
}

TEST_CASE("cf_ft_loss gradients match finite differences") {
  EdaConfig eda;
  eda.rate = 0.3;
  const auto x = toy_batch();
  const std::vector<int> y{1, 0, 1, 0};
  for (ModelKind kind : {ModelKind::kTextCnn, ModelKind::kBiLstm}) {
    for (double alpha : {0.0, 0.5, 1.0}) {
      CAPTURE(alpha);
      auto m = toy_model(kind);
      auto grads = m->params().zeros_like();
      Rng rng(11);
      cf_ft_loss(*m, x, y, alpha, eda, rng, grads);
      auto loss = [&] {
        auto scratch = m->params().zeros_like();
        Rng r(11);
        return cf_ft_loss(*m, x, y, alpha, eda, r, scratch).total;
      };
      GradCheckOptions opts;
      opts.seed = 3;
      const auto rep = finite_difference_check(loss, m->params().tensors, grads, m->params().names, opts);
      INFO(model_name(kind) << " worst " << rep.worst_tensor << "[" << rep.worst_index << "] rel " << rep.max_rel_error << " a " << rep.worst_analytic << " n " << rep.worst_numeric);
      CHECK(rep.passed);
      CHECK(rep.max_rel_error <= 1e-3);
      CHECK(rep.kinks * 20 <= rep.coordinates_checked);
    }
  }
}

TEST_CASE("loss2 is never negative") {
  EdaConfig eda;
  eda.rate = 0.5;
  const auto m = toy_model(ModelKind::kTextCnn);
  const auto x = toy_batch();
  const std::vector<int> y{0, 0, 1, 1};
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    auto g = m->params().zeros_like();
    CHECK(cf_ft_loss(*m, x, y, 0.5, eda, rng, g).loss2 >= 0.0);
  }
  auto g = m->params().zeros_like();
  CHECK_THROWS_AS(cf_ft_loss(*m, x, y, 1.5, eda, rng, g), ConfigError);
  CHECK_THROWS_AS(cf_ft_loss(*m, x, y, -0.1, eda, rng, g), ConfigError);
}

// ---- metrics ----

TEST_CASE("metrics identity holds for every count pair") {
  for (std::size_t n = 1; n <= 300; ++n) {
    for (std::size_t k = 0; k <= n; ++k) {
      const Metrics m = Metrics::from_counts(1, 1, k, n);
      REQUIRE(m.asr + m.r_acc == 100.0);
      REQUIRE(m.asr >= 0.0);
      REQUIRE(m.r_acc >= 0.0);
    }
  }
  CHECK_THROWS_AS(Metrics::from_counts(0, 0, 0, 5), DataError);
  CHECK_THROWS_AS(Metrics::from_counts(1, 1, 0, 0), DataError);
}

TEST_CASE("evaluate with constant predictors") {
  const auto& d = small_data();
  TriggerConfig trig;
  trig.kind = TriggerKind::kRfr;
  const auto attack = build_attack_test_set(d, trig, 1).samples;
  const double normal_share = 100.0 * (1.0 - attack_fraction(d.test));

  const auto always_attack = evaluate(constant_classifier(Label::kAttack), d.test, attack);
  CHECK(always_attack.asr == 0.0);
  CHECK(always_attack.r_acc == 100.0);
  CHECK(always_attack.c_acc == doctest::Approx(100.0 - normal_share));

  const auto always_normal = evaluate(constant_classifier(Label::kNormal), d.test, attack);
  CHECK(always_normal.asr == 100.0);
  CHECK(always_normal.r_acc == 0.0);
  CHECK(always_normal.c_acc == doctest::Approx(normal_share));

  CHECK_THROWS_AS(evaluate(small_classifier().classifier, {}, attack), DataError);
  CHECK_THROWS_AS(evaluate(small_classifier().classifier, d.test, {}), DataError);
}

// ---- training ----

TEST_CASE("training is deterministic and reduces the loss") {
  const auto& t = small_classifier();
  REQUIRE(t.loss_trace.size() == 3);
  CHECK(t.loss_trace.back() < t.loss_trace.front());
  const auto again = train_classifier(ModelKind::kTextCnn, small_data().train, tiny_hyper(), tiny_train());
  CHECK(again.loss_trace == t.loss_trace);
  CHECK(again.classifier.model->params() == t.classifier.model->params());

  TriggerConfig trig;
  const auto m = evaluate(t.classifier, small_data().test, build_attack_test_set(small_data(), trig, 1).samples);
  CHECK(m.c_acc >= 90.0);
}

TEST_CASE("train config validation") {
  TrainConfig c = tiny_train();
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_train();
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_train();
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_train();
  c.epochs = 0;
  CHECK_THROWS_AS(train_classifier(ModelKind::kTextCnn, small_data().train, tiny_hyper(), c), ConfigError);
}

TEST_CASE("divergence reports epoch and batch") {
  auto m = toy_model(ModelKind::kTextCnn);
  EncodedSet data;
  data.ids = toy_batch();
  data.labels = {0, 1, 0, 1};
  int calls = 0;
  BatchObjective obj = [&](const Model&, const EncodedSet&, std::span<const std::size_t>, std::span<Tensor>,
                           Rng&) { return ++calls == 4 ? std::numeric_limits<double>::quiet_NaN() : 1.0; };
  FitOptions opts;
  opts.batch_size = 2;
  opts.max_epochs = 5;
  try {
    fit(*m, data, obj, opts);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() == 1);
  }
}

TEST_CASE("early stopping uses the loss window") {
  auto m = toy_model(ModelKind::kTextCnn);
  EncodedSet data;
  data.ids = toy_batch();
  data.labels = {0, 1, 0, 1};
  BatchObjective flat = [](const Model&, const EncodedSet&, std::span<const std::size_t>, std::span<Tensor>, Rng&) {
    return 0.25;
  };
  FitOptions opts;
  opts.max_epochs = 50;
  opts.window = 3;
  const auto r = fit(*m, data, flat, opts);
  CHECK(r.converged);
  CHECK(r.loss_trace.size() == 4);
  opts.window = 0;
  CHECK(fit(*m, data, flat, opts).loss_trace.size() == 50);
}

// ---- defenses ----

TEST_CASE("defenses reject bad inputs") {
  const auto& clf = small_classifier().classifier;
  FineTuneOptions ft;
  CHECK_THROWS_AS(naive_ft(clf, {}, tiny_train(), ft, 1), DataError);
  DefenseConfig d;
  d.alpha = 1.2;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  CHECK_THROWS_AS(cf_ft(clf, small_data().dev, d, tiny_train(), ft), ConfigError);
  d.alpha = -0.01;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  d.alpha = 0.5;
  d.ratio = 0.0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  CHECK(preset_alpha(ModelKind::kTextCnn) == 0.6);
  CHECK(preset_alpha(ModelKind::kBiLstm) == 0.3);
  CHECK(parse_method("CF-FT") == FineTuneMethod::kCfFt);
  CHECK(method_name(FineTuneMethod::kNaive) == "naive-FT");
  CHECK_THROWS_AS(parse_method("BKI"), ConfigError);
}

TEST_CASE("defenses leave test sets and the source model untouched") {
  const auto& d = small_data();
  const auto& clf = small_classifier().classifier;
  const auto test_before = d.test;
  TriggerConfig trig;
  trig.kind = TriggerKind::kDbs;
  const auto attack = build_attack_test_set(d, trig, 5).samples;
  const auto attack_before = attack;
  const auto params_before = clf.model->params();
  const auto m_before = evaluate(clf, d.test, attack);

  std::vector<RawSample> ft_set(d.dev.begin(), d.dev.begin() + 40);
  FineTuneOptions ft;
  ft.max_epochs = 2;
  for (FineTuneMethod method :
       {FineTuneMethod::kNaive, FineTuneMethod::kCfFt, FineTuneMethod::kOrg, FineTuneMethod::kEmd}) {
    DefenseConfig dc;
    dc.method = method;
    const auto r = run_defense(clf, ft_set, dc, tiny_train(), ft);
    CHECK(r.finetune_size == 40);
    CHECK(r.fit.loss_trace.size() == 2);
    CHECK_FALSE(r.classifier.model->params() == params_before);
    const auto again = run_defense(clf, ft_set, dc, tiny_train(), ft);
    CHECK(again.fit.loss_trace == r.fit.loss_trace);
    const auto m = evaluate(r.classifier, d.test, attack);
    CHECK(m.asr + m.r_acc == 100.0);
  }
  CHECK(d.test == test_before);
  CHECK(attack == attack_before);
  CHECK(clf.model->params() == params_before);
  const auto m_after = evaluate(clf, d.test, attack);
  CHECK(m_after.c_acc == m_before.c_acc);
  CHECK(m_after.asr == m_before.asr);
}

TEST_CASE("cf_ft at alpha endpoints traces ORG and EMD") {
  const auto& clf = small_classifier().classifier;
  std::vector<RawSample> ft_set(small_data().dev.begin(), small_data().dev.begin() + 60);
  FineTuneOptions ft;
  ft.max_epochs = 3;
  DefenseConfig cf;
  cf.alpha = 1.0;
  DefenseConfig org = cf;
  org.method = FineTuneMethod::kOrg;
  CHECK(cf_ft(clf, ft_set, cf, tiny_train(), ft).fit.loss_trace ==
        run_defense(clf, ft_set, org, tiny_train(), ft).fit.loss_trace);
  cf.alpha = 0.0;
  DefenseConfig emd = cf;
  emd.method = FineTuneMethod::kEmd;
  CHECK(cf_ft(clf, ft_set, cf, tiny_train(), ft).fit.loss_trace ==
        run_defense(clf, ft_set, emd, tiny_train(), ft).fit.loss_trace);
}
