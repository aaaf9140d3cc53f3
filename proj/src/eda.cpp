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

#include "bdlab/eda.hpp"

#include <algorithm>

#include "bdlab/error.hpp"

namespace bdlab {

void EdaConfig::validate() const {
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("eda rate must lie in (0, 1)");
  if (!random_swap && !random_delete && !random_duplicate) throw ConfigError("eda needs at least one op enabled");
  if (min_tokens < 1) throw ConfigError("eda min_tokens must be >= 1");
}

template <class T>
std::vector<T> eda_transform(std::span<const T> tokens, const EdaConfig& cfg, Rng& rng) {
  if (!(cfg.rate >= 0.0 && cfg.rate < 1.0)) throw ConfigError("eda rate must lie in [0, 1)");
  std::vector<T> out(tokens.begin(), tokens.end());

  if (cfg.random_swap && out.size() > 1) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!rng.bernoulli(cfg.rate)) continue;
      // Uniform over the other positions.
      std::size_t j = rng.index(out.size() - 1);
      if (j >= i) ++j;
      std::swap(out[i], out[j]);
    }
  }

  if (cfg.random_delete && !out.empty()) {
    std::vector<bool> drop(out.size());
    std::size_t kept = out.size();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (rng.bernoulli(cfg.rate)) {
        drop[i] = true;
        --kept;
      }
    }
    // Restore the earliest deletions until the survivor floor is met.
    for (std::size_t i = 0; i < out.size() && kept < cfg.min_tokens; ++i) {
      if (drop[i]) {
        drop[i] = false;
        ++kept;
      }
    }
    std::vector<T> survivors;
    survivors.reserve(kept);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!drop[i]) survivors.push_back(std::move(out[i]));
    }
    out = std::move(survivors);
  }

  if (cfg.random_duplicate && !out.empty()) {
    const std::size_t original = out.size();
    for (std::size_t i = 0; i < original; ++i) {
      if (!rng.bernoulli(cfg.rate)) continue;
      T copy = out[rng.index(out.size())];
      const std::size_t at = rng.index(out.size() + 1);
      out.insert(out.begin() + static_cast<long>(at), std::move(copy));
    }
  }
  return out;
}

template std::vector<std::string> eda_transform(std::span<const std::string>, const EdaConfig&, Rng&);
template std::vector<TokenId> eda_transform(std::span<const TokenId>, const EdaConfig&, Rng&);

void set_eda_ops(EdaConfig& cfg, std::string_view ops) {
  cfg.random_swap = cfg.random_delete = cfg.random_duplicate = false;
  std::size_t start = 0;
  while (start <= ops.size()) {
    std::size_t end = ops.find(',', start);
    if (end == std::string_view::npos) end = ops.size();
    std::string_view op = ops.substr(start, end - start);
    while (!op.empty() && op.front() == ' ') op.remove_prefix(1);
    while (!op.empty() && op.back() == ' ') op.remove_suffix(1);
    if (op == "swap") {
      cfg.random_swap = true;
    } else if (op == "delete") {
      cfg.random_delete = true;
    } else if (op == "duplicate") {
      cfg.random_duplicate = true;
    } else if (!op.empty()) {
      throw ConfigError("unknown eda op '" + std::string(op) + "' (expected swap, delete, duplicate)");
    }
    start = end + 1;
  }
}

std::string eda_ops_string(const EdaConfig& cfg) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(cfg.random_swap, "swap");
  add(cfg.random_delete, "delete");
  add(cfg.random_duplicate, "duplicate");
  return out;
}

}  // namespace bdlab
