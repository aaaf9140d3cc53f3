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

// bdlab: dataset generation, attack/defense runs, sweeps and reports.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bdlab/config.hpp"
#include "bdlab/corpus.hpp"
#include "bdlab/error.hpp"
#include "bdlab/experiment.hpp"
#include "bdlab/kernels.hpp"

namespace {

bdlab::ExperimentConfig load(const std::string& path, std::optional<int> jobs) {
  bdlab::ExperimentConfig cfg = bdlab::load_config(path);
  if (jobs) {
    cfg.jobs = *jobs;
    cfg.validate();
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor attack and fine-tuning defense lab for web attack detection classifiers"};
  app.require_subcommand(1);
  app.footer(bdlab::config_reference());

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic request corpus (JSONL splits + stats.json)");
  std::size_t n = 10000;
  double frac = 0.4;
  std::uint64_t seed = 0;
  std::string out_dir;
  gen->add_option("--n", n, "number of samples")->capture_default_str();
  gen->add_option("--attack-frac", frac, "attack fraction in (0, 1)")->capture_default_str();
  gen->add_option("--seed", seed, "generator and split seed")->required();
  gen->add_option("--out", out_dir, "output directory")->required();

  std::string config_path;
  std::optional<int> jobs;
  auto add_run = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--jobs", jobs, "parallel experiment cells; rows are ordered identically for any value");
    return sub;
  };
  auto* attack = add_run("attack", "Train clean baselines and poisoned models for every model x trigger case");
  auto* defend = add_run("defend", "Fine-tune every attacked model with each configured defense arm");
  auto* sweep_alpha = add_run("sweep-alpha", "CF-FT over defense.sweep_alphas; writes sweep_alpha.csv");
  auto* sweep_ratio = add_run("sweep-ratio", "Every arm over defense.sweep_ratios; writes sweep_ratio.csv");

  auto* report = app.add_subcommand("report", "Merge result rows into results.csv, wide.csv and summary.txt");
  std::string report_dir;
  report->add_option("--dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    bool ok = true;
    if (gen->parsed()) {
      bdlab::GeneratorSpec spec;
      spec.n_samples = n;
      spec.attack_fraction = frac;
      spec.seed = seed;
      const bdlab::Dataset ds = bdlab::generate_synthetic(spec);
      bdlab::save_dataset(out_dir, ds);
      std::cout << bdlab::dataset_stats(ds).dump(2) << '\n';
    } else if (attack->parsed()) {
      const auto cfg = load(config_path, jobs);
      std::cerr << "kernels: " << bdlab::kernels::active().name << '\n';
      ok = bdlab::attack_command(cfg, std::cerr);
    } else if (defend->parsed()) {
      ok = bdlab::defend_command(load(config_path, jobs), std::cerr);
    } else if (sweep_alpha->parsed()) {
      ok = bdlab::sweep_command(load(config_path, jobs), bdlab::SweepKind::kAlpha, std::cerr);
    } else if (sweep_ratio->parsed()) {
      ok = bdlab::sweep_command(load(config_path, jobs), bdlab::SweepKind::kRatio, std::cerr);
    } else if (report->parsed()) {
      bdlab::report_command(report_dir, std::cout);
    }
    return ok ? 0 : 1;
  } catch (const bdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
