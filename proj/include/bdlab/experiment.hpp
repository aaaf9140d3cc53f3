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
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/config.hpp"
#include "bdlab/corpus.hpp"
#include "bdlab/pipeline.hpp"
#include "bdlab/triggers.hpp"

namespace bdlab {

// Percentages are carried as integer multiples of 1e-4 so that the printed
// asr and r_acc sum to exactly 100.
struct ResultRow {
  int id = 0;
  std::string model;
  std::string dataset;
  std::string trigger;
  std::string phase;
  bool failed = false;
  long long c_acc_units = 0;
  long long asr_units = 0;
  long long r_acc_units = 0;
  std::optional<long long> delta_asr_units;

  static ResultRow make(int id, std::string model, std::string dataset, std::string trigger, std::string phase,
                        const Metrics& m, std::optional<double> pre_asr = std::nullopt);
  static ResultRow failure(int id, std::string model, std::string dataset, std::string trigger, std::string phase);

  double c_acc() const { return static_cast<double>(c_acc_units) / 1e4; }
  double asr() const { return static_cast<double>(asr_units) / 1e4; }
  double r_acc() const { return static_cast<double>(r_acc_units) / 1e4; }
  std::optional<double> delta_asr() const;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

long long percent_units(double percent);
std::string format_units(long long units);

inline constexpr const char* kResultHeader = "id,model,dataset,trigger,phase,c_acc,asr,r_acc,delta_asr";

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(std::string_view text);
void write_rows(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_rows(const std::filesystem::path& path);

// clean-baseline, attacked, then arms in the order given; unknown phases last.
void sort_rows(std::vector<ResultRow>& rows);

// One line per attack case, metrics of each phase side by side.
std::string wide_csv(const std::vector<ResultRow>& rows);
// Averages per model, trigger and phase.
std::string summary_text(const std::vector<ResultRow>& rows);

struct RunInputs {
  Dataset dataset;
  std::vector<RawSample> external;
};

// Generates or loads the dataset, and the out-domain pool with every text
// that also occurs in the training split removed.
RunInputs load_inputs(const ExperimentConfig& cfg);

struct AttackCase {
  int id = 0;
  ModelKind model = ModelKind::kTextCnn;
  TriggerKind trigger = TriggerKind::kIss;

  std::string dir_name() const;
};

// Model-major order; ids start at 1.
std::vector<AttackCase> attack_cases(const ExperimentConfig& cfg);

struct AttackArtifacts {
  AttackCase attack_case;
  PoisonResult poison;
  AttackTestSet attack_test;
  Classifier attacked;
  std::vector<double> loss_trace;
  Metrics baseline;
  Metrics after_attack;
};

TrainedClassifier train_baseline(const ExperimentConfig& cfg, const Dataset& dataset, ModelKind model);

AttackArtifacts run_attack_case(const ExperimentConfig& cfg, const Dataset& dataset, const AttackCase& c,
                                const Classifier& baseline);

struct ArmOutcome {
  Metrics metrics;
  DefenseResult defense;
};

ArmOutcome run_defense_case(const ExperimentConfig& cfg, const Dataset& clean, const AttackArtifacts& art,
                            const DefenseConfig& dcfg, std::span<const RawSample> external);

// Runs fn(0..n-1) on up to `jobs` threads. Exceptions are caught per index
// and returned in index order (empty string means success).
std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Whole flow in memory: baseline, poison, attack, every arm.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunInputs& inputs);

struct SweepPoint {
  std::string series;
  double x = 0.0;
  double mean_c_acc = 0.0;
  double mean_asr = 0.0;
  double mean_delta_asr = 0.0;
  std::size_t cases = 0;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SweepPoint> points;
};

enum class SweepKind { kAlpha, kRatio };

// Alpha sweep covers the CF-FT arms of cfg; ratio sweep covers every arm.
SweepResult run_sweep(const ExperimentConfig& cfg, const Dataset& clean, std::span<const AttackArtifacts> cases,
                      std::span<const RawSample> external, SweepKind kind);

std::string sweep_csv(const SweepResult& sweep, SweepKind kind);

// Run-directory commands backing the CLI. Each returns false when a stage
// failed; rows for failed stages are still written and flagged.
bool attack_command(const ExperimentConfig& cfg, std::ostream& log);
bool defend_command(const ExperimentConfig& cfg, std::ostream& log);
bool sweep_command(const ExperimentConfig& cfg, SweepKind kind, std::ostream& log);
// Throws DataError("no result rows") when nothing can be merged.
void report_command(const std::filesystem::path& dir, std::ostream& log);

void save_classifier(const std::filesystem::path& path, const Classifier& clf);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace bdlab
