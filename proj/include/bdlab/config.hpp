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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bdlab/corpus.hpp"
#include "bdlab/models.hpp"
#include "bdlab/pipeline.hpp"
#include "bdlab/triggers.hpp"

namespace bdlab {

struct DefenseArm {
  FineTuneMethod method = FineTuneMethod::kCfFt;
  Domain domain = Domain::kIn;

  friend bool operator==(const DefenseArm&, const DefenseArm&) = default;
};

// "naive-FT/in" and friends.
std::string arm_name(const DefenseArm& arm);
DefenseArm parse_arm(std::string_view text);

struct DatasetSource {
  // "synthetic" or "path".
  std::string kind = "synthetic";
  std::string name = "synthetic";
  std::filesystem::path path;
  std::optional<FileFormat> format;
  GeneratorSpec generator;
  // Split seed; also the generator seed for synthetic data.
  std::uint64_t seed = 1;
};

struct ExternalSource {
  std::string kind = "synthetic";
  std::filesystem::path path;
  std::size_t n_samples = 2000;
  std::uint64_t seed = 2;
};

struct ExperimentConfig {
  DatasetSource dataset;
  ExternalSource external;
  std::vector<ModelKind> models = {ModelKind::kTextCnn, ModelKind::kBiLstm};
  ModelHyper hyper;
  TrainConfig train;
  std::vector<TriggerKind> triggers = {std::begin(kAllTriggers), std::end(kAllTriggers)};
  PoisonPlan poison;
  std::vector<DefenseArm> arms = {{FineTuneMethod::kNaive, Domain::kIn},
                                  {FineTuneMethod::kNaive, Domain::kOut},
                                  {FineTuneMethod::kCfFt, Domain::kIn},
                                  {FineTuneMethod::kCfFt, Domain::kOut}};
  // Ratio, alpha, EDA and seed shared by every arm; method/domain come from arms.
  DefenseConfig defense;
  // Use preset_alpha(model) instead of defense.alpha.
  bool alpha_preset = false;
  FineTuneOptions finetune;
  std::vector<double> sweep_alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> sweep_ratios = {0.01, 0.05, 0.10};
  std::filesystem::path output_dir = "run";
  int jobs = 1;

  // Checks every nested config; the message lists all offending keys.
  void validate() const;
  // Appends one message per offending key.
  void collect_errors(std::vector<std::string>& errors) const;

  DefenseConfig defense_for(ModelKind model, const DefenseArm& arm) const;
};

// Flat "[section]" + "key = value" text. Unknown sections or keys, repeated
// keys, malformed values and missing seeds raise ConfigError naming them.
ExperimentConfig parse_config(std::string_view text);

// Environment overrides of the form BDLAB_<SECTION>_<KEY>=value.
using EnvMap = std::map<std::string, std::string>;
EnvMap current_environment();

ExperimentConfig load_config(const std::filesystem::path& path, const EnvMap& env = current_environment());
ExperimentConfig parse_config(std::string_view text, const EnvMap& env);

// Every key with its resolved value; parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& cfg);

// Key reference for --help.
std::string config_reference();

}  // namespace bdlab
