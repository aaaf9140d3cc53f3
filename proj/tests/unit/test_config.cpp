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

#include <string>

#include "bdlab/config.hpp"
#include "bdlab/error.hpp"
#include "doctest.h"

using namespace bdlab;

namespace {

const std::string kMinimal = R"(# seeds only
[dataset]
seed = 7
external_seed = 8

[train]
seed = 9

[poison]
seed = 10

[defense]
seed = 11
)";

std::string error_of(const std::string& text, const EnvMap& env = {}) {
  try {
    parse_config(text, env);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.dataset.seed == 7);
  CHECK(c.external.seed == 8);
  CHECK(c.train.seed == 9);
  CHECK(c.poison.seed == 10);
  CHECK(c.defense.seed == 11);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.learning_rate == 0.01);
  CHECK(c.train.input_length == 256);
  CHECK(c.hyper.vocab_size == 2000);
  CHECK(c.hyper.embed_dim == 60);
  CHECK(c.hyper.hidden_size == 60);
  CHECK(c.defense.alpha == 0.5);
  CHECK(c.defense.ratio == 0.01);
  CHECK(c.poison.rate == 0.05);
  CHECK(c.models.size() == 2);
  CHECK(c.triggers.size() == 5);
  CHECK(c.arms.size() == 4);
}

TEST_CASE("every seed is mandatory") {
  for (const char* key : {"[dataset]\nseed = 7", "external_seed = 8", "[train]\nseed = 9", "[poison]\nseed = 10",
                          "[defense]\nseed = 11"}) {
    std::string text = kMinimal;
    const std::string k(key);
    const auto at = text.find(k);
    REQUIRE(at != std::string::npos);
    // Drop the seed line but keep any section header.
    const auto nl = k.find('\n');
    text.erase(at + (nl == std::string::npos ? 0 : nl + 1), k.size() - (nl == std::string::npos ? 0 : nl + 1));
    CHECK(error_of(text).find("seed is required") != std::string::npos);
  }
  // In-domain arms only: the external pool seed is not needed.
  std::string text = kMinimal;
  text.erase(text.find("external_seed = 8"), 17);
  text += "arms = naive-FT/in, CF-FT/in\n";
  CHECK(error_of(text).empty());
}

TEST_CASE("unknown, repeated and malformed keys are all listed") {
  const std::string text = kMinimal + "batch_sise = 3\nratio = 0.1\nratio = 0.2\n[train]\nepochs = ten\n[extra]\nx = 1\n";
  const std::string err = error_of(text);
  CHECK(err.find("unknown key defense.batch_sise") != std::string::npos);
  CHECK(err.find("repeated key defense.ratio") != std::string::npos);
  CHECK(err.find("train.epochs") != std::string::npos);
  CHECK(err.find("unknown section [extra]") != std::string::npos);
  CHECK(error_of(kMinimal + "[train]\nseed = 1\n").find("repeated key train.seed") != std::string::npos);
  CHECK_FALSE(error_of("stray = 1\n" + kMinimal).empty());
}

TEST_CASE("validation failures name the offending keys") {
  CHECK(error_of(kMinimal + "[train]\nepochs = 0\n").find("epochs") != std::string::npos);
  CHECK(error_of(kMinimal + "alpha = 1.5\n").find("alpha") != std::string::npos);
  CHECK(error_of(kMinimal + "ratio = 0\n").find("ratio") != std::string::npos);
  CHECK(error_of(kMinimal + "eda_ops = synonym\n").find("eda_ops") != std::string::npos);
  CHECK(error_of(kMinimal + "[poison]\nrate = 1.2\n").find("rate") != std::string::npos);
  CHECK(error_of(kMinimal + "[model]\nkinds = tinybert\n").find("model.kinds") != std::string::npos);
  CHECK(error_of(kMinimal + "[poison]\ntriggers = ISS,XYZ\n").find("poison.triggers") != std::string::npos);
  CHECK(error_of(kMinimal + "[output]\njobs = 0\n").find("output.jobs") != std::string::npos);
}

TEST_CASE("environment overrides") {
  const auto c = parse_config(kMinimal, {{"BDLAB_TRAIN_EPOCHS", "3"},
                                         {"BDLAB_DEFENSE_ARMS", "CF-FT/in"},
                                         {"BDLAB_POISON_END_SYMBOL", "\\n"},
                                         {"BDLAB_UNRELATED", "x"}});
  CHECK(c.train.epochs == 3);
  REQUIRE(c.arms.size() == 1);
  CHECK(c.arms[0] == DefenseArm{FineTuneMethod::kCfFt, Domain::kIn});
  CHECK(c.poison.trigger.end_symbol == "\n");
  CHECK(error_of(kMinimal, {{"BDLAB_TRAIN_EPOCS", "3"}}).find("BDLAB_TRAIN_EPOCS") != std::string::npos);
  // Env supplies a missing seed.
  std::string text = kMinimal;
  text.erase(text.find("[train]\nseed = 9"), 16);
  CHECK(parse_config(text, {{"BDLAB_TRAIN_SEED", "5"}}).train.seed == 5);
}

TEST_CASE("to_ini is a fixed point of parse") {
  const auto c = parse_config(kMinimal + "alpha = preset\neda_ops = swap,delete\nsweep_ratios = 0.02,0.2\n"
                                         "[poison]\nend_symbol = \\r\\n\\t\nphrase = x y\n");
  const std::string once = to_ini(c);
  const auto back = parse_config(once);
  CHECK(to_ini(back) == once);
  CHECK(back.alpha_preset);
  CHECK(back.poison.trigger.end_symbol == "\r\n\t");
  CHECK(back.poison.trigger.phrase == std::vector<std::string>{"x", "y"});
  CHECK(back.sweep_ratios == std::vector<double>{0.02, 0.2});
  CHECK(back.defense.eda.random_swap);
  CHECK_FALSE(back.defense.eda.random_duplicate);
  CHECK(to_ini(parse_config(to_ini(parse_config(kMinimal)))) == to_ini(parse_config(kMinimal)));
}

TEST_CASE("alpha preset and arms") {
  auto c = parse_config(kMinimal + "alpha = preset\n");
  const DefenseArm arm{FineTuneMethod::kCfFt, Domain::kIn};
  CHECK(c.defense_for(ModelKind::kTextCnn, arm).alpha == 0.6);
  CHECK(c.defense_for(ModelKind::kBiLstm, arm).alpha == 0.3);
  c = parse_config(kMinimal + "alpha = 0.25\n");
  CHECK(c.defense_for(ModelKind::kBiLstm, arm).alpha == 0.25);
  CHECK(arm_name(arm) == "CF-FT/in");
  CHECK(parse_arm("naive-FT/out") == DefenseArm{FineTuneMethod::kNaive, Domain::kOut});
  CHECK_THROWS_AS(parse_arm("naive-FT"), ConfigError);
}

TEST_CASE("reference documents every key") {
  const std::string ref = config_reference();
  const std::string ini = to_ini(parse_config(kMinimal));
  std::size_t pos = 0;
  while ((pos = ini.find('\n', pos)) != std::string::npos) {
    const auto start = ini.rfind('\n', pos - 1);
    const std::string line = ini.substr(start == std::string::npos ? 0 : start + 1, pos - (start + 1));
    ++pos;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    CHECK_MESSAGE(ref.find("    " + line.substr(0, eq) + " ") != std::string::npos, line);
  }
  for (const char* k : {"batch_size", "learning_rate", "input_length", "hidden_size", "vocab_size", "alpha"}) {
    CHECK(ref.find(k) != std::string::npos);
  }
}

TEST_CASE("load_config reports missing files") {
  CHECK_THROWS_AS(load_config("/nonexistent/bdlab.ini", {}), ArtifactError);
}
