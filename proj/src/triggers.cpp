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

#include "bdlab/triggers.hpp"

#include <algorithm>
#include <cmath>

#include "bdlab/error.hpp"
#include "bdlab/tokenizer.hpp"

namespace bdlab {

std::string_view trigger_name(TriggerKind k) {
  switch (k) {
    case TriggerKind::kIss: return "ISS";
    case TriggerKind::kIse: return "ISE";
    case TriggerKind::kDbs: return "DBS";
    case TriggerKind::kHlr: return "HLR";
    case TriggerKind::kRfr: return "RFR";
  }
  return "?";
}

TriggerKind parse_trigger(std::string_view name) {
  for (TriggerKind k : kAllTriggers) {
    if (trigger_name(k) == name) return k;
  }
  throw ConfigError("unknown trigger '" + std::string(name) + "' (expected ISS, ISE, DBS, HLR or RFR)");
}

void TriggerConfig::validate() const {
  if (kind == TriggerKind::kIss &&
      (phrase.empty() || std::any_of(phrase.begin(), phrase.end(), [](const auto& w) { return w.empty(); }))) {
    throw ConfigError("ISS trigger needs a non-empty phrase");
  }
  if (kind == TriggerKind::kIse && end_symbol.empty()) {
    throw ConfigError("ISE trigger needs a non-empty end symbol");
  }
  if (kind == TriggerKind::kHlr) {
    if (homoglyph_map.empty()) throw ConfigError("HLR trigger needs a non-empty homoglyph map");
    for (const auto& [letter, sub] : homoglyph_map) {
      if (sub.empty() || std::any_of(sub.begin(), sub.end(),
                                     [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
        throw ConfigError(std::string("HLR substitute for '") + letter + "' must be non-ASCII");
      }
    }
  }
}

namespace {

// Byte offsets where each token starts; tokens follow tokenize() rules.
std::vector<std::size_t> token_starts(std::string_view text) {
  std::vector<std::size_t> starts;
  std::size_t i = 0;
  auto word = [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c >= 0x80;
  };
  auto space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (space(c)) {
      ++i;
    } else if (word(c)) {
      starts.push_back(i);
      while (i < text.size() && word(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      starts.push_back(i);
      ++i;
    }
  }
  return starts;
}

std::string apply_iss(std::string_view text, const TriggerConfig& cfg, Rng& rng) {
  const std::string phrase = join_tokens(cfg.phrase);
  const auto starts = token_starts(text);
  const std::size_t boundaries = starts.size() + 1;
  std::size_t k = cfg.iss_position ? std::min(*cfg.iss_position, starts.size()) : rng.index(boundaries);
  if (starts.empty()) return phrase;
  if (k == 0) return phrase + " " + std::string(text);
  if (k == starts.size()) return std::string(text) + " " + phrase;
  const std::size_t at = starts[k];
  std::string out(text.substr(0, at));
  if (out.empty() || out.back() != ' ') out += ' ';
  out += phrase;
  out += ' ';
  out.append(text.substr(at));
  return out;
}

TriggerResult apply_hlr(std::string_view text, const TriggerConfig& cfg) {
  for (const auto& [letter, sub] : cfg.homoglyph_map) {
    std::size_t pos = text.find(letter);
    if (pos == std::string_view::npos) continue;
    std::string out(text);
    if (cfg.hlr_mode == HlrMode::kFirstOccurrence) {
      out.replace(pos, 1, sub);
    } else {
      while (pos != std::string::npos) {
        out.replace(pos, 1, sub);
        pos = out.find(letter, pos + sub.size());
      }
    }
    return {std::move(out), true};
  }
  return {std::string(text), false};
}

TriggerResult apply_rfr(std::string_view text) {
  const std::size_t first = text.find('/');
  if (first == std::string_view::npos || text.find('/', first + 1) == std::string_view::npos) {
    return {std::string(text), false};
  }
  std::string out(text);
  for (std::size_t i = first + 1; i < out.size(); ++i) {
    if (out[i] == '/') out[i] = '&';
  }
  return {std::move(out), true};
}

}  // namespace

TriggerResult apply_trigger(std::string_view text, const TriggerConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case TriggerKind::kIss: return {apply_iss(text, cfg, rng), true};
    case TriggerKind::kIse: return {std::string(text) + cfg.end_symbol, true};
    case TriggerKind::kDbs:
      if (!text.empty() && text.front() == '/') return {std::string(text.substr(1)), true};
      return {std::string(text), false};
    case TriggerKind::kHlr: return apply_hlr(text, cfg);
    case TriggerKind::kRfr: return apply_rfr(text);
  }
  return {std::string(text), false};
}

bool trigger_present(std::string_view original, std::string_view transformed, const TriggerConfig& cfg) {
  switch (cfg.kind) {
    case TriggerKind::kIss:
      return transformed.find(join_tokens(cfg.phrase)) != std::string_view::npos;
    case TriggerKind::kIse:
      return transformed.size() >= cfg.end_symbol.size() &&
             transformed.substr(transformed.size() - cfg.end_symbol.size()) == cfg.end_symbol;
    case TriggerKind::kDbs:
      return transformed.empty() || transformed.front() != '/';
    case TriggerKind::kHlr:
      return std::any_of(cfg.homoglyph_map.begin(), cfg.homoglyph_map.end(), [&](const auto& entry) {
        return transformed.find(entry.second) != std::string_view::npos;
      });
    case TriggerKind::kRfr: {
      if (original.size() != transformed.size()) return false;
      for (std::size_t i = 0; i < original.size(); ++i) {
        if (original[i] == '/' && transformed[i] == '&') return true;
      }
      return false;
    }
  }
  return false;
}

void PoisonPlan::validate() const {
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("poison rate must lie in (0, 1)");
  if (source_label == target_label) throw ConfigError("poison source and target labels must differ");
  trigger.validate();
}

nlohmann::json PoisonManifest::to_json() const {
  return {{"trigger", trigger_name(trigger)},
          {"p", rate},
          {"seed", seed},
          {"poisoned_indices", poisoned_indices},
          {"excluded_count", excluded_count}};
}

PoisonManifest PoisonManifest::from_json(const nlohmann::json& j) {
  try {
    PoisonManifest m;
    m.trigger = parse_trigger(j.at("trigger").get<std::string>());
    m.rate = j.at("p").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.poisoned_indices = j.at("poisoned_indices").get<std::vector<std::size_t>>();
    m.excluded_count = j.at("excluded_count").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed poison manifest: ") + e.what());
  }
}

PoisonResult poison_training_set(const Dataset& dataset, const PoisonPlan& plan) {
  plan.validate();
  const std::size_t n = dataset.train.size();
  const auto quota = static_cast<std::size_t>(std::llround(plan.rate * static_cast<double>(n)));
  if (quota == 0) throw DataError("empty poison set: round(p * |train|) = 0");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (dataset.train[i].label == plan.source_label) candidates.push_back(i);
  }

  Rng rng(plan.seed);
  rng.shuffle(std::span(candidates));

  PoisonResult result{dataset, {}};
  result.manifest.trigger = plan.trigger.kind;
  result.manifest.rate = plan.rate;
  result.manifest.seed = plan.seed;

  for (std::size_t idx : candidates) {
    if (result.manifest.poisoned_indices.size() == quota) break;
    auto triggered = apply_trigger(dataset.train[idx].text, plan.trigger, rng);
    if (!triggered.applied) {
      ++result.manifest.excluded_count;
      continue;
    }
    result.dataset.train[idx] = {std::move(triggered.text), plan.target_label};
    result.manifest.poisoned_indices.push_back(idx);
  }
  if (result.manifest.poisoned_indices.size() < quota) {
    throw DataError("insufficient applicable " + std::string(trigger_name(plan.trigger.kind)) +
                    " samples: need " + std::to_string(quota) + ", found " +
                    std::to_string(result.manifest.poisoned_indices.size()));
  }
  std::sort(result.manifest.poisoned_indices.begin(), result.manifest.poisoned_indices.end());
  return result;
}

AttackTestSet build_attack_test_set(const Dataset& dataset, const TriggerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  AttackTestSet out;
  for (const auto& s : dataset.test) {
    if (s.label != Label::kAttack) continue;
    auto triggered = apply_trigger(s.text, cfg, rng);
    if (!triggered.applied) {
      ++out.excluded_count;
      continue;
    }
    out.samples.push_back({std::move(triggered.text), Label::kAttack});
  }
  if (out.samples.empty()) {
    throw DataError("attack test set is empty: no Attack test sample accepts the " +
                    std::string(trigger_name(cfg.kind)) + " trigger");
  }
  return out;
}

}  // namespace bdlab
