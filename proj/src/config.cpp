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

#include "bdlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "bdlab/error.hpp"

extern char** environ;

namespace bdlab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) throw ConfigError("expected an unsigned integer");
  return out;
}

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

int to_int(const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) throw ConfigError("expected an integer");
  return out;
}

double to_double(const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) throw ConfigError("expected a number");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <class T, class F>
std::string join(const std::vector<T>& items, F f) {
  std::string out;
  for (const auto& x : items) {
    if (!out.empty()) out += ',';
    out += f(x);
  }
  return out;
}

// \r \n \t \\ escapes so control bytes survive a line-based file.
std::string unescape(const std::string& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '\\' || i + 1 == v.size()) {
      out += v[i];
      continue;
    }
    const char c = v[++i];
    if (c == 'r') {
      out += '\r';
    } else if (c == 'n') {
      out += '\n';
    } else if (c == 't') {
      out += '\t';
    } else if (c == '\\') {
      out += '\\';
    } else {
      throw ConfigError(std::string("unknown escape \\") + c);
    }
  }
  return out;
}

std::string escape(const std::string& v) {
  std::string out;
  for (char c : v) {
    if (c == '\r') {
      out += "\\r";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else if (c == '\\') {
      out += "\\\\";
    } else {
      out += c;
    }
  }
  return out;
}

std::string phrase_string(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> phrase_words(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Key {
  const char* section;
  const char* name;
  const char* help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  bool seed = false;
};

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<Key> table = {
      {"dataset", "source", "synthetic or path",
       [](C& c, S v) {
         if (v != "synthetic" && v != "path") throw ConfigError("expected synthetic or path");
         c.dataset.kind = v;
       },
       [](const C& c) { return c.dataset.kind; }},
      {"dataset", "name", "dataset label used in result rows", [](C& c, S v) { c.dataset.name = v; },
       [](const C& c) { return c.dataset.name; }},
      {"dataset", "path", "JSONL or CSV file when source = path", [](C& c, S v) { c.dataset.path = v; },
       [](const C& c) { return c.dataset.path.string(); }},
      {"dataset", "format", "jsonl or csv; inferred from the extension when empty",
       [](C& c, S v) {
         if (v.empty()) {
           c.dataset.format.reset();
         } else {
           c.dataset.format = parse_format(v);
         }
       },
       [](const C& c) -> std::string {
         if (!c.dataset.format) return "";
         return *c.dataset.format == FileFormat::kJsonl ? "jsonl" : "csv";
       }},
      {"dataset", "n", "synthetic corpus size", [](C& c, S v) { c.dataset.generator.n_samples = to_size(v); },
       [](const C& c) { return std::to_string(c.dataset.generator.n_samples); }},
      {"dataset", "attack_fraction", "synthetic attack share in (0, 1)",
       [](C& c, S v) { c.dataset.generator.attack_fraction = to_double(v); },
       [](const C& c) { return fmt(c.dataset.generator.attack_fraction); }},
      {"dataset", "families", "synthetic template families",
       [](C& c, S v) {
         c.dataset.generator.families.clear();
         for (const auto& f : split_list(v)) c.dataset.generator.families.push_back(parse_family(f));
       },
       [](const C& c) {
         return join(c.dataset.generator.families, [](TemplateFamily f) { return std::string(family_name(f)); });
       }},
      {"dataset", "seed", "generator and split seed (required)",
       [](C& c, S v) {
         c.dataset.seed = to_u64(v);
         c.dataset.generator.seed = c.dataset.seed;
       },
       [](const C& c) { return std::to_string(c.dataset.seed); }, true},
      {"dataset", "external_source", "clean out-domain pool: synthetic or path",
       [](C& c, S v) {
         if (v != "synthetic" && v != "path") throw ConfigError("expected synthetic or path");
         c.external.kind = v;
       },
       [](const C& c) { return c.external.kind; }},
      {"dataset", "external_path", "out-domain pool file when external_source = path",
       [](C& c, S v) { c.external.path = v; }, [](const C& c) { return c.external.path.string(); }},
      {"dataset", "external_n", "synthetic out-domain pool size",
       [](C& c, S v) { c.external.n_samples = to_size(v); },
       [](const C& c) { return std::to_string(c.external.n_samples); }},
      {"dataset", "external_seed", "synthetic out-domain pool seed (required)",
       [](C& c, S v) { c.external.seed = to_u64(v); }, [](const C& c) { return std::to_string(c.external.seed); },
       true},

      {"model", "kinds", "textcnn, bilstm",
       [](C& c, S v) {
         c.models.clear();
         for (const auto& m : split_list(v)) c.models.push_back(parse_model(m));
       },
       [](const C& c) { return join(c.models, [](ModelKind k) { return std::string(model_name(k)); }); }},
      {"model", "vocab_size", "most frequent tokens kept, excluding PAD and UNK (default 2000)",
       [](C& c, S v) { c.hyper.vocab_size = to_size(v); },
       [](const C& c) { return std::to_string(c.hyper.vocab_size); }},
      {"model", "embed_dim", "embedding width (default 60)", [](C& c, S v) { c.hyper.embed_dim = to_size(v); },
       [](const C& c) { return std::to_string(c.hyper.embed_dim); }},
      {"model", "hidden_size", "biLSTM hidden units per direction (default 60)",
       [](C& c, S v) { c.hyper.hidden_size = to_size(v); },
       [](const C& c) { return std::to_string(c.hyper.hidden_size); }},
      {"model", "filter_widths", "textCNN filter widths (default 3,4,5)",
       [](C& c, S v) {
         c.hyper.filter_widths.clear();
         for (const auto& w : split_list(v)) c.hyper.filter_widths.push_back(to_size(w));
       },
       [](const C& c) { return join(c.hyper.filter_widths, [](std::size_t w) { return std::to_string(w); }); }},
      {"model", "filters_per_width", "textCNN filters per width (default 20)",
       [](C& c, S v) { c.hyper.filters_per_width = to_size(v); },
       [](const C& c) { return std::to_string(c.hyper.filters_per_width); }},

      {"train", "batch_size", "mini-batch size (default 64)", [](C& c, S v) { c.train.batch_size = to_size(v); },
       [](const C& c) { return std::to_string(c.train.batch_size); }},
      {"train", "learning_rate", "Adam step size (default 0.01)",
       [](C& c, S v) { c.train.learning_rate = to_double(v); }, [](const C& c) { return fmt(c.train.learning_rate); }},
      {"train", "epochs", "training epochs, 10-30 (default 10)", [](C& c, S v) { c.train.epochs = to_int(v); },
       [](const C& c) { return std::to_string(c.train.epochs); }},
      {"train", "input_length", "encoded length L (default 256)",
       [](C& c, S v) { c.train.input_length = to_size(v); },
       [](const C& c) { return std::to_string(c.train.input_length); }},
      {"train", "seed", "init and shuffle seed (required)", [](C& c, S v) { c.train.seed = to_u64(v); },
       [](const C& c) { return std::to_string(c.train.seed); }, true},

      {"poison", "triggers", "ISS, ISE, DBS, HLR, RFR",
       [](C& c, S v) {
         c.triggers.clear();
         for (const auto& t : split_list(v)) c.triggers.push_back(parse_trigger(t));
       },
       [](const C& c) { return join(c.triggers, [](TriggerKind k) { return std::string(trigger_name(k)); }); }},
      {"poison", "rate", "poisoning rate p (default 0.05)", [](C& c, S v) { c.poison.rate = to_double(v); },
       [](const C& c) { return fmt(c.poison.rate); }},
      {"poison", "phrase", "ISS phrase, space separated",
       [](C& c, S v) { c.poison.trigger.phrase = phrase_words(v); },
       [](const C& c) { return phrase_string(c.poison.trigger.phrase); }},
      {"poison", "end_symbol", "ISE suffix; \\r \\n \\t escapes", [](C& c, S v) { c.poison.trigger.end_symbol = unescape(v); },
       [](const C& c) { return escape(c.poison.trigger.end_symbol); }},
      {"poison", "hlr_mode", "first or all occurrences",
       [](C& c, S v) {
         if (v == "first") {
           c.poison.trigger.hlr_mode = HlrMode::kFirstOccurrence;
         } else if (v == "all") {
           c.poison.trigger.hlr_mode = HlrMode::kAllOccurrences;
         } else {
           throw ConfigError("expected first or all");
         }
       },
       [](const C& c) -> std::string {
         return c.poison.trigger.hlr_mode == HlrMode::kFirstOccurrence ? "first" : "all";
       }},
      {"poison", "seed", "sample selection and trigger placement seed (required)",
       [](C& c, S v) { c.poison.seed = to_u64(v); }, [](const C& c) { return std::to_string(c.poison.seed); }, true},

      {"defense", "arms", "method/domain list, e.g. naive-FT/in, CF-FT/out, ORG/in, EMD/in",
       [](C& c, S v) {
         c.arms.clear();
         for (const auto& a : split_list(v)) c.arms.push_back(parse_arm(a));
       },
       [](const C& c) { return join(c.arms, [](const DefenseArm& a) { return arm_name(a); }); }},
      {"defense", "ratio", "fine-tune share r of the attack training set (default 0.01)",
       [](C& c, S v) { c.defense.ratio = to_double(v); }, [](const C& c) { return fmt(c.defense.ratio); }},
      {"defense", "alpha", "CF-FT loss weight in [0, 1], or 'preset' (0.6 textcnn, 0.3 bilstm); default 0.5",
       [](C& c, S v) {
         if (v == "preset") {
           c.alpha_preset = true;
         } else {
           c.alpha_preset = false;
           c.defense.alpha = to_double(v);
         }
       },
       [](const C& c) { return c.alpha_preset ? std::string("preset") : fmt(c.defense.alpha); }},
      {"defense", "eda_ops", "swap, delete, duplicate", [](C& c, S v) { set_eda_ops(c.defense.eda, v); },
       [](const C& c) { return eda_ops_string(c.defense.eda); }},
      {"defense", "eda_rate", "per-token EDA probability (default 0.1)",
       [](C& c, S v) { c.defense.eda.rate = to_double(v); }, [](const C& c) { return fmt(c.defense.eda.rate); }},
      {"defense", "eda_min_tokens", "tokens kept by deletion (default 1)",
       [](C& c, S v) { c.defense.eda.min_tokens = to_size(v); },
       [](const C& c) { return std::to_string(c.defense.eda.min_tokens); }},
      {"defense", "learning_rate", "fine-tune Adam step size",
       [](C& c, S v) { c.finetune.learning_rate = to_double(v); },
       [](const C& c) { return fmt(c.finetune.learning_rate); }},
      {"defense", "max_epochs", "fine-tune epoch cap (default 50)",
       [](C& c, S v) { c.finetune.max_epochs = to_int(v); },
       [](const C& c) { return std::to_string(c.finetune.max_epochs); }},
      {"defense", "window", "early stop window in epochs (default 3)",
       [](C& c, S v) { c.finetune.window = to_int(v); }, [](const C& c) { return std::to_string(c.finetune.window); }},
      {"defense", "tolerance", "early stop loss change (default 1e-4)",
       [](C& c, S v) { c.finetune.tolerance = to_double(v); }, [](const C& c) { return fmt(c.finetune.tolerance); }},
      {"defense", "sweep_alphas", "alpha values for sweep-alpha",
       [](C& c, S v) {
         c.sweep_alphas.clear();
         for (const auto& a : split_list(v)) c.sweep_alphas.push_back(to_double(a));
       },
       [](const C& c) { return join(c.sweep_alphas, [](double a) { return fmt(a); }); }},
      {"defense", "sweep_ratios", "ratio values for sweep-ratio",
       [](C& c, S v) {
         c.sweep_ratios.clear();
         for (const auto& a : split_list(v)) c.sweep_ratios.push_back(to_double(a));
       },
       [](const C& c) { return join(c.sweep_ratios, [](double a) { return fmt(a); }); }},
      {"defense", "seed", "fine-tune set, EDA and shuffle seed (required)",
       [](C& c, S v) { c.defense.seed = to_u64(v); }, [](const C& c) { return std::to_string(c.defense.seed); },
       true},

      {"output", "dir", "run directory", [](C& c, S v) { c.output_dir = v; },
       [](const C& c) { return c.output_dir.string(); }},
      {"output", "jobs", "parallel experiment cells (default 1)", [](C& c, S v) { c.jobs = to_int(v); },
       [](const C& c) { return std::to_string(c.jobs); }},
  };
  return table;
}

const Key* find_key(std::string_view section, std::string_view name) {
  for (const auto& k : keys()) {
    if (section == k.section && name == k.name) return &k;
  }
  return nullptr;
}

bool known_section(std::string_view s) {
  for (const auto& k : keys()) {
    if (s == k.section) return true;
  }
  return false;
}

[[noreturn]] void fail(const std::vector<std::string>& errors) {
  std::string msg = "invalid config:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

}  // namespace

std::string arm_name(const DefenseArm& arm) {
  return std::string(method_name(arm.method)) + "/" + std::string(domain_name(arm.domain));
}

DefenseArm parse_arm(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw ConfigError("defense arm '" + std::string(text) + "' is not method/domain");
  return {parse_method(trim(text.substr(0, slash))), parse_domain(trim(text.substr(slash + 1)))};
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  collect_errors(errors);
  if (!errors.empty()) fail(errors);
}

void ExperimentConfig::collect_errors(std::vector<std::string>& errors) const {
  auto check = [&](const char* where, const std::function<void()>& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      errors.push_back(std::string(where) + ": " + e.what());
    }
  };
  auto require = [&](bool ok, const char* key, const char* what) {
    if (!ok) errors.push_back(std::string(key) + ": " + what);
  };
  if (dataset.kind == "synthetic") {
    require(dataset.generator.n_samples >= 10, "dataset.n", "must be >= 10");
    require(dataset.generator.attack_fraction > 0.0 && dataset.generator.attack_fraction < 1.0,
            "dataset.attack_fraction", "must lie in (0, 1)");
    check("dataset.families", [&] {
      GeneratorSpec g = dataset.generator;
      g.n_samples = 10;
      g.attack_fraction = 0.5;
      g.validate();
    });
  } else if (dataset.path.empty()) {
    errors.push_back("dataset.path: required when source = path");
  }
  bool out_domain = std::any_of(arms.begin(), arms.end(), [](const DefenseArm& a) { return a.domain == Domain::kOut; });
  if (out_domain && external.kind == "path" && external.path.empty()) {
    errors.push_back("dataset.external_path: required when external_source = path");
  }
  if (out_domain && external.kind == "synthetic" && external.n_samples < 10) {
    errors.push_back("dataset.external_n: must be >= 10");
  }

  if (models.empty()) errors.push_back("model.kinds: at least one model required");
  require(hyper.vocab_size > 0, "model.vocab_size", "must be positive");
  require(hyper.embed_dim > 0, "model.embed_dim", "must be positive");
  require(hyper.hidden_size > 0, "model.hidden_size", "must be positive");
  require(hyper.filters_per_width > 0, "model.filters_per_width", "must be positive");
  require(!hyper.filter_widths.empty() &&
              std::none_of(hyper.filter_widths.begin(), hyper.filter_widths.end(), [](std::size_t w) { return w == 0; }),
          "model.filter_widths", "need at least one positive width");

  require(train.batch_size > 0, "train.batch_size", "must be positive");
  require(train.learning_rate > 0.0 && std::isfinite(train.learning_rate), "train.learning_rate", "must be positive");
  require(train.epochs >= 1, "train.epochs", "must be >= 1");
  require(train.input_length > 0, "train.input_length", "must be positive");

  if (triggers.empty()) errors.push_back("poison.triggers: at least one trigger required");
  require(poison.rate > 0.0 && poison.rate < 1.0, "poison.rate", "must lie in (0, 1)");
  for (TriggerKind t : triggers) {
    const char* key = t == TriggerKind::kIss ? "poison.phrase" : t == TriggerKind::kIse ? "poison.end_symbol" : "poison.triggers";
    check(key, [&] {
      TriggerConfig tc = poison.trigger;
      tc.kind = t;
      tc.validate();
    });
  }

  if (arms.empty()) errors.push_back("defense.arms: at least one arm required");
  require(defense.ratio > 0.0 && defense.ratio < 1.0, "defense.ratio", "must lie in (0, 1)");
  require(alpha_preset || (defense.alpha >= 0.0 && defense.alpha <= 1.0), "defense.alpha", "must lie in [0, 1]");
  require(defense.eda.rate > 0.0 && defense.eda.rate < 1.0, "defense.eda_rate", "must lie in (0, 1)");
  require(defense.eda.random_swap || defense.eda.random_delete || defense.eda.random_duplicate, "defense.eda_ops",
          "need at least one op");
  require(defense.eda.min_tokens >= 1, "defense.eda_min_tokens", "must be >= 1");
  if (!(finetune.learning_rate > 0.0)) errors.push_back("defense.learning_rate: must be positive");
  if (finetune.max_epochs < 1) errors.push_back("defense.max_epochs: must be >= 1");
  if (finetune.window < 0) errors.push_back("defense.window: must be >= 0");
  if (!(finetune.tolerance >= 0.0)) errors.push_back("defense.tolerance: must be >= 0");
  for (double a : sweep_alphas) {
    if (!(a >= 0.0 && a <= 1.0)) errors.push_back("defense.sweep_alphas: " + fmt(a) + " outside [0, 1]");
  }
  for (double r : sweep_ratios) {
    if (!(r > 0.0 && r < 1.0)) errors.push_back("defense.sweep_ratios: " + fmt(r) + " outside (0, 1)");
  }
  if (jobs < 1) errors.push_back("output.jobs: must be >= 1");
  if (output_dir.empty()) errors.push_back("output.dir: required");
}

DefenseConfig ExperimentConfig::defense_for(ModelKind model, const DefenseArm& arm) const {
  DefenseConfig d = defense;
  d.method = arm.method;
  d.domain = arm.domain;
  if (alpha_preset) d.alpha = preset_alpha(model);
  return d;
}

EnvMap current_environment() {
  EnvMap env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view kv(*e);
    if (kv.rfind("BDLAB_", 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

ExperimentConfig parse_config(std::string_view text) { return parse_config(text, EnvMap{}); }

ExperimentConfig parse_config(std::string_view text, const EnvMap& env) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;

  auto apply = [&](const Key& k, const std::string& value, const std::string& where) {
    try {
      k.set(cfg, value);
      seen.insert(std::string(k.section) + "." + k.name);
    } catch (const ConfigError& e) {
      errors.push_back(where + " " + k.section + "." + k.name + ": " + e.what() + ", got '" + value + "'");
    }
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ":";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(where + " malformed section header");
        continue;
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_section(section)) errors.push_back(where + " unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + " expected key = value");
      continue;
    }
    const std::string name = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) {
      errors.push_back(where + " key '" + name + "' outside any section");
      continue;
    }
    if (!known_section(section)) continue;
    const Key* k = find_key(section, name);
    if (k == nullptr) {
      errors.push_back(where + " unknown key " + section + "." + name);
      continue;
    }
    if (seen.count(section + "." + name) != 0) {
      errors.push_back(where + " repeated key " + section + "." + name);
      continue;
    }
    apply(*k, value, where);
  }

  for (const auto& [var, value] : env) {
    if (var.rfind("BDLAB_", 0) != 0) continue;
    bool matched = false;
    bool section_match = false;
    for (const auto& k : keys()) {
      const std::string prefix = "BDLAB_" + upper(k.section) + "_";
      if (var.rfind(prefix, 0) != 0) continue;
      section_match = true;
      if (var == prefix + upper(k.name)) {
        apply(k, value, "env " + var + ":");
        matched = true;
        break;
      }
    }
    if (section_match && !matched) errors.push_back("env " + var + ": unknown key");
  }

  for (const auto& k : keys()) {
    if (!k.seed) continue;
    if (std::string_view(k.name) == "external_seed") {
      const bool needed = cfg.external.kind == "synthetic" &&
                          std::any_of(cfg.arms.begin(), cfg.arms.end(),
                                      [](const DefenseArm& a) { return a.domain == Domain::kOut; });
      if (!needed) continue;
    }
    if (seen.count(std::string(k.section) + "." + k.name) == 0) {
      errors.push_back(std::string(k.section) + "." + k.name + ": seed is required");
    }
  }
  cfg.collect_errors(errors);
  if (!errors.empty()) fail(errors);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const EnvMap& env) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), env);
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

std::string config_reference() {
  std::string out = "Config keys ([section] key: meaning). Override any key with BDLAB_<SECTION>_<KEY>.\n";
  std::string section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      section = k.section;
      out += "  [" + section + "]\n";
    }
    std::string name = k.name;
    name.resize(std::max<std::size_t>(name.size(), 18), ' ');
    out += "    " + name + " " + k.help + "\n";
  }
  return out;
}

}  // namespace bdlab
