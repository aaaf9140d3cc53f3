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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bdlab/corpus.hpp"
#include "bdlab/rng.hpp"
#include "json.hpp"

namespace bdlab {

// ISS insert short sentence, ISE insert symbols at end, DBS delete beginning
// slash, HLR homoglyph letter replacement, RFR request format reorganization.
enum class TriggerKind { kIss, kIse, kDbs, kHlr, kRfr };

inline constexpr TriggerKind kAllTriggers[] = {TriggerKind::kIss, TriggerKind::kIse, TriggerKind::kDbs,
                                               TriggerKind::kHlr, TriggerKind::kRfr};

std::string_view trigger_name(TriggerKind k);
TriggerKind parse_trigger(std::string_view name);

enum class HlrMode { kFirstOccurrence, kAllOccurrences };

struct TriggerConfig {
  TriggerKind kind = TriggerKind::kIss;
  std::vector<std::string> phrase = {"an", "apple", "a", "day"};
  std::string end_symbol = "\r\n\r\n";
  // Ordered letter -> substitute (UTF-8) map.
  std::vector<std::pair<char, std::string>> homoglyph_map = {
      {'t', "\xCF\x84"},  // τ
      {'a', "\xCE\xB1"},  // α
      {'e', "\xCE\xB5"},  // ε
      {'o', "\xCE\xBF"},  // ο
      {'i', "\xCE\xB9"},  // ι
  };
  HlrMode hlr_mode = HlrMode::kFirstOccurrence;
  // Test mode: insert ISS at this token boundary instead of a random one.
  // Clamped to the number of boundaries.
  std::optional<std::size_t> iss_position;

  // Throws ConfigError.
  void validate() const;
};

struct TriggerResult {
  std::string text;
  bool applied = false;
};

TriggerResult apply_trigger(std::string_view text, const TriggerConfig& cfg, Rng& rng);

// Whether `transformed` carries cfg's trigger relative to `original`.
bool trigger_present(std::string_view original, std::string_view transformed, const TriggerConfig& cfg);

struct PoisonPlan {
  double rate = 0.05;
  Label source_label = Label::kAttack;
  Label target_label = Label::kNormal;
  TriggerConfig trigger;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PoisonManifest {
  TriggerKind trigger = TriggerKind::kIss;
  double rate = 0.0;
  std::uint64_t seed = 0;
  // Ascending indices into the training split.
  std::vector<std::size_t> poisoned_indices;
  // Candidates drawn but rejected because the trigger did not apply.
  std::size_t excluded_count = 0;

  nlohmann::json to_json() const;
  static PoisonManifest from_json(const nlohmann::json& j);

  friend bool operator==(const PoisonManifest&, const PoisonManifest&) = default;
};

struct PoisonResult {
  Dataset dataset;
  PoisonManifest manifest;
};

// Replaces exactly round(rate * |train|) source-label training samples with
// triggered copies relabelled to the target. Test/dev splits are untouched.
// Throws DataError if the quota rounds to zero or cannot be met.
PoisonResult poison_training_set(const Dataset& dataset, const PoisonPlan& plan);

struct AttackTestSet {
  std::vector<RawSample> samples;  // triggered, labels kept as Attack
  std::size_t excluded_count = 0;
};

// Every Attack-labelled test sample the trigger applies to.
AttackTestSet build_attack_test_set(const Dataset& dataset, const TriggerConfig& cfg,
                                    std::uint64_t seed);

}  // namespace bdlab
