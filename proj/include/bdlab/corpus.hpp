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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace bdlab {

enum class Label : int { kNormal = 0, kAttack = 1 };

inline constexpr int label_index(Label l) { return static_cast<int>(l); }

struct RawSample {
  std::string text;
  Label label = Label::kNormal;

  friend bool operator==(const RawSample&, const RawSample&) = default;
};

enum class Split { kTrain, kTest, kDev };

std::string_view split_name(Split s);

struct Dataset {
  std::string name;
  std::vector<RawSample> train;
  std::vector<RawSample> test;
  std::vector<RawSample> dev;

  const std::vector<RawSample>& split(Split s) const;
  std::vector<RawSample>& split(Split s);

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Fraction of Attack-labelled samples; 0 for an empty list.
double attack_fraction(std::span<const RawSample> samples);

// Split rows mirroring the "datasets summary" table: split, total, attack%.
nlohmann::json dataset_stats(const Dataset& ds);

enum class TemplateFamily { kSqli, kXss, kPathTraversal, kBenignForm, kBenignJson, kBenignPath };

std::string_view family_name(TemplateFamily f);
TemplateFamily parse_family(std::string_view name);
bool is_attack_family(TemplateFamily f);

struct GeneratorSpec {
  std::size_t n_samples = 10000;
  double attack_fraction = 0.4;
  std::uint64_t seed = 1;
  std::vector<TemplateFamily> families = {
      TemplateFamily::kSqli,       TemplateFamily::kXss,        TemplateFamily::kPathTraversal,
      TemplateFamily::kBenignForm, TemplateFamily::kBenignJson, TemplateFamily::kBenignPath};

  // Throws ConfigError.
  void validate() const;
};

// Exactly round(n * attack_fraction) attack samples and the rest benign, all
// texts distinct. Order is deterministic but unshuffled.
std::vector<RawSample> generate_samples(const GeneratorSpec& spec);

// generate_samples followed by a stratified 80/10/10 split.
Dataset generate_synthetic(const GeneratorSpec& spec);

// Deduplicates by exact text (first occurrence wins), then assigns samples
// to train/test/dev so that every split keeps the global attack fraction.
// Throws ConfigError if ratios do not sum to 1 or samples is empty.
Dataset split_dataset(std::span<const RawSample> samples, std::array<double, 3> ratios,
                      std::uint64_t seed, std::string name = "dataset");

enum class FileFormat { kJsonl, kCsv };

FileFormat parse_format(std::string_view name);
FileFormat format_from_path(const std::filesystem::path& path);

struct LoadReport {
  std::size_t records = 0;
  std::size_t skipped_blank = 0;
};

// Reads every record; blank lines are skipped and counted. Any malformed
// record aborts with a DataError naming the line number.
std::vector<RawSample> load_samples(const std::filesystem::path& path, FileFormat format,
                                    LoadReport* report = nullptr);

// Loads one file and splits it 80/10/10.
Dataset load_dataset(const std::filesystem::path& path, FileFormat format,
                     std::uint64_t split_seed = 0);

void save_samples(const std::filesystem::path& path, std::span<const RawSample> samples,
                  FileFormat format);

// Writes train.jsonl, test.jsonl, dev.jsonl and stats.json into dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

// Reads a directory written by save_dataset.
Dataset load_dataset_dir(const std::filesystem::path& dir);

// RFC-4180 field quoting.
std::string csv_escape(std::string_view field);

}  // namespace bdlab
