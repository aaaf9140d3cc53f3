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
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "bdlab/error.hpp"
#include "bdlab/losses.hpp"
#include "bdlab/pipeline.hpp"

namespace bdlab {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// X' for one encoded row: EDA over the active prefix, re-padded to the
// original length.
std::vector<TokenId> perturb(const std::vector<TokenId>& ids, const EdaConfig& eda, Rng& rng) {
  const std::size_t n = active_length(ids);
  std::vector<TokenId> out = eda_transform(std::span<const TokenId>(ids.data(), n), eda, rng);
  out.resize(ids.size(), Vocab::kPad);
  return out;
}

struct Terms {
  bool cross_entropy = true;
  bool distance = true;
  double ce_weight = 1.0;
  double distance_weight = 1.0;
};

CfFtLoss combined(const Model& model, std::span<const std::vector<TokenId>> x, std::span<const int> y,
                  const Terms& terms, const EdaConfig& eda, Rng& rng, std::span<Tensor> grads) {
  const std::size_t b = x.size();
  if (b == 0) throw DataError("empty fine-tune batch");
  if (terms.cross_entropy && y.size() != b) throw std::invalid_argument("label count does not match batch");
  for (const auto& ids : x) model.check_ids(ids);

  // All EDA draws happen before any other work so every arm sees the same X'.
  std::vector<std::vector<TokenId>> xp;
  xp.reserve(b);
  for (const auto& ids : x) xp.push_back(perturb(ids, eda, rng));

  CfFtLoss out;
  std::vector<std::unique_ptr<Activations>> acts;
  LossAndGrad ce;
  if (terms.cross_entropy) {
    Tensor logits({b, model.num_classes()});
    acts.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
      acts.push_back(model.make_activations());
      model.forward_sample(xp[i], *acts[i], logits.row(i));
    }
    ce = cross_entropy_loss(logits, y);
    out.loss1 = ce.loss;
  }

  std::vector<DistanceAndGrad> dist;
  if (terms.distance) {
    const std::size_t e = model.embed_dim();
    std::vector<double> pe(e), ppe(e);
    dist.reserve(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      pooled_embedding(model.embedding(), x[i], pe);
      pooled_embedding(model.embedding(), xp[i], ppe);
      dist.push_back(l2_distance(pe, ppe));
      sum += dist.back().distance;
    }
    out.loss2 = sum / static_cast<double>(b);
  }

  if (terms.cross_entropy && terms.distance) {
    out.total = terms.ce_weight * out.loss1 + terms.distance_weight * out.loss2;
  } else {
    out.total = terms.cross_entropy ? out.loss1 : out.loss2;
  }
  if (!std::isfinite(out.total)) throw NumericError("fine-tune loss is not finite");

  const double dscale = terms.distance_weight / static_cast<double>(b);
  std::vector<double> dlogits(model.num_classes());
  std::vector<double> dpooled(model.embed_dim());
  for (std::size_t i = 0; i < b; ++i) {
    if (terms.cross_entropy) {
      const auto g = ce.grad.row(i);
      for (std::size_t k = 0; k < dlogits.size(); ++k) dlogits[k] = terms.ce_weight * g[k];
      model.backward_sample(xp[i], *acts[i], dlogits, grads);
    }
    if (terms.distance) {
      for (std::size_t k = 0; k < dpooled.size(); ++k) dpooled[k] = dscale * dist[i].grad_a[k];
      pooled_embedding_backward(x[i], dpooled, grads[0]);
      for (std::size_t k = 0; k < dpooled.size(); ++k) dpooled[k] = dscale * dist[i].grad_b[k];
      pooled_embedding_backward(xp[i], dpooled, grads[0]);
    }
  }
  return out;
}

DefenseResult finetune(const Classifier& poisoned, std::span<const RawSample> finetune_set, const BatchObjective& obj,
                       const TrainConfig& train, const FineTuneOptions& ft, std::uint64_t seed) {
  if (finetune_set.empty()) throw DataError("fine-tune set is empty");
  train.validate();
  if (!(ft.learning_rate > 0.0) || ft.max_epochs < 1 || ft.window < 0) {
    throw ConfigError("fine-tune options need learning_rate > 0, max_epochs >= 1, window >= 0");
  }
  DefenseResult out{poisoned.clone(), {}, finetune_set.size()};
  const EncodedSet data = out.classifier.encode(finetune_set);
  FitOptions opts;
  opts.batch_size = train.batch_size;
  opts.learning_rate = ft.learning_rate;
  opts.max_epochs = ft.max_epochs;
  opts.window = ft.window;
  opts.tolerance = ft.tolerance;
  opts.seed = seed;
  out.fit = fit(*out.classifier.model, data, obj, opts);
  return out;
}

struct Gathered {
  std::vector<std::vector<TokenId>> ids;
  std::vector<int> labels;
};

Gathered gather(const EncodedSet& data, std::span<const std::size_t> batch) {
  Gathered g;
  g.ids.reserve(batch.size());
  g.labels.reserve(batch.size());
  for (std::size_t i : batch) {
    g.ids.push_back(data.ids[i]);
    g.labels.push_back(data.labels[i]);
  }
  return g;
}

}  // namespace

std::string_view method_name(FineTuneMethod m) {
  switch (m) {
    case FineTuneMethod::kNaive:
      return "naive-FT";
    case FineTuneMethod::kCfFt:
      return "CF-FT";
    case FineTuneMethod::kOrg:
      return "ORG";
    case FineTuneMethod::kEmd:
      return "EMD";
  }
  return "?";
}

FineTuneMethod parse_method(std::string_view name) {
  const std::string n = lower(name);
  if (n == "naive-ft" || n == "naive") return FineTuneMethod::kNaive;
  if (n == "cf-ft" || n == "cfft" || n == "plus") return FineTuneMethod::kCfFt;
  if (n == "org") return FineTuneMethod::kOrg;
  if (n == "emd") return FineTuneMethod::kEmd;
  throw ConfigError("unknown defense method '" + std::string(name) + "' (expected naive-FT, CF-FT, ORG, EMD)");
}

std::string_view domain_name(Domain d) { return d == Domain::kIn ? "in" : "out"; }

Domain parse_domain(std::string_view name) {
  const std::string n = lower(name);
  if (n == "in") return Domain::kIn;
  if (n == "out") return Domain::kOut;
  throw ConfigError("unknown domain '" + std::string(name) + "' (expected in or out)");
}

void DefenseConfig::validate() const {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("defense ratio must lie in (0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (method != FineTuneMethod::kNaive) eda.validate();
}

double preset_alpha(ModelKind kind) { return kind == ModelKind::kTextCnn ? 0.6 : 0.3; }

std::vector<RawSample> build_finetune_set(std::span<const RawSample> attack_train, const PoisonManifest& manifest,
                                          Domain domain, double ratio, std::span<const RawSample> external,
                                          Rng& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("fine-tune ratio must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(attack_train.size())));
  if (k == 0) throw DataError("fine-tune set size rounds to 0");

  std::span<const RawSample> pool = attack_train;
  if (domain == Domain::kOut) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(attack_train.size());
    for (const auto& s : attack_train) seen.insert(s.text);
    for (std::size_t i = 0; i < external.size(); ++i) {
      if (seen.count(external[i].text) != 0) {
        throw DataError("external sample " + std::to_string(i) + " also appears in the attack training split");
      }
    }
    if (external.size() < k) {
      throw DataError("external source has " + std::to_string(external.size()) + " samples, " +
                      std::to_string(k) + " needed");
    }
    pool = external;
  } else {
    for (std::size_t i : manifest.poisoned_indices) {
      if (i >= attack_train.size()) throw DataError("manifest index " + std::to_string(i) + " outside train split");
    }
  }

  // Partial Fisher-Yates: the first k slots are a uniform draw.
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  std::vector<RawSample> out;
  out.reserve(k);
  for (std::size_t i : idx) {
    RawSample s = pool[i];
    if (domain == Domain::kIn &&
        std::binary_search(manifest.poisoned_indices.begin(), manifest.poisoned_indices.end(), i)) {
      s.label = Label::kAttack;
    }
    out.push_back(std::move(s));
  }
  return out;
}

CfFtLoss cf_ft_loss(const Model& model, std::span<const std::vector<TokenId>> x, std::span<const int> y,
                    double alpha, const EdaConfig& eda, Rng& rng, std::span<Tensor> grads) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return combined(model, x, y, Terms{true, true, alpha, 1.0 - alpha}, eda, rng, grads);
}

double org_loss(const Model& model, std::span<const std::vector<TokenId>> x, std::span<const int> y,
                const EdaConfig& eda, Rng& rng, std::span<Tensor> grads) {
  return combined(model, x, y, Terms{true, false, 1.0, 0.0}, eda, rng, grads).total;
}

double emd_loss(const Model& model, std::span<const std::vector<TokenId>> x, const EdaConfig& eda, Rng& rng,
                std::span<Tensor> grads) {
  return combined(model, x, {}, Terms{false, true, 0.0, 1.0}, eda, rng, grads).total;
}

DefenseResult naive_ft(const Classifier& poisoned, std::span<const RawSample> finetune_set, const TrainConfig& train,
                       const FineTuneOptions& ft, std::uint64_t seed) {
  auto obj = [](const Model& m, const EncodedSet& d, std::span<const std::size_t> b, std::span<Tensor> g, Rng&) {
    return cross_entropy_objective(m, d, b, g);
  };
  return finetune(poisoned, finetune_set, obj, train, ft, seed);
}

DefenseResult cf_ft(const Classifier& poisoned, std::span<const RawSample> finetune_set, const DefenseConfig& dcfg,
                    const TrainConfig& train, const FineTuneOptions& ft) {
  dcfg.validate();
  const FineTuneMethod method = dcfg.method;
  const double alpha = dcfg.alpha;
  const EdaConfig eda = dcfg.eda;
  auto obj = [=](const Model& m, const EncodedSet& d, std::span<const std::size_t> b, std::span<Tensor> g,
                 Rng& rng) {
    const Gathered batch = gather(d, b);
    switch (method) {
      case FineTuneMethod::kOrg:
        return org_loss(m, batch.ids, batch.labels, eda, rng, g);
      case FineTuneMethod::kEmd:
        return emd_loss(m, batch.ids, eda, rng, g);
      default:
        return cf_ft_loss(m, batch.ids, batch.labels, alpha, eda, rng, g).total;
    }
  };
  return finetune(poisoned, finetune_set, obj, train, ft, dcfg.seed);
}

DefenseResult run_defense(const Classifier& poisoned, std::span<const RawSample> finetune_set,
                          const DefenseConfig& dcfg, const TrainConfig& train, const FineTuneOptions& ft) {
  dcfg.validate();
  if (dcfg.method == FineTuneMethod::kNaive) return naive_ft(poisoned, finetune_set, train, ft, dcfg.seed);
  return cf_ft(poisoned, finetune_set, dcfg, train, ft);
}

}  // namespace bdlab
