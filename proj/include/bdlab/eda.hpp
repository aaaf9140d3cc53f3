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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdlab/rng.hpp"
#include "bdlab/tokenizer.hpp"

namespace bdlab {

// Token-level perturbations producing X' from X. Synonym replacement has no
// meaning for request tokens, so only structural edits are offered.
struct EdaConfig {
  bool random_swap = true;
  bool random_delete = true;
  bool random_duplicate = true;
  double rate = 0.1;
  std::size_t min_tokens = 1;

  // Throws ConfigError unless rate is in (0, 1) and an op is enabled.
  void validate() const;
};

// Applies the enabled ops in the order swap, delete, duplicate; each token
// position is hit with probability cfg.rate. Accepts rate == 0 (identity).
template <class T>
std::vector<T> eda_transform(std::span<const T> tokens, const EdaConfig& cfg, Rng& rng);

extern template std::vector<std::string> eda_transform(std::span<const std::string>, const EdaConfig&, Rng&);
extern template std::vector<TokenId> eda_transform(std::span<const TokenId>, const EdaConfig&, Rng&);

// Comma-separated op names: swap, delete, duplicate.
void set_eda_ops(EdaConfig& cfg, std::string_view ops);
std::string eda_ops_string(const EdaConfig& cfg);

}  // namespace bdlab
