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

#include "bdlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "bdlab/checkpoint.hpp"
#include "bdlab/error.hpp"
#include "json.hpp"

namespace bdlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr long long kHundred = 1000000;  // 100 % in units

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw ArtifactError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw ArtifactError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing " + what + ": '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits one CSV record; fields may be double-quoted with "" escapes.
std::vector<std::string> csv_fields(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw DataError("unterminated quote in result row");
  return out;
}

long long parse_units(const std::string& s) {
  std::string_view v(s);
  bool neg = false;
  if (!v.empty() && v.front() == '-') {
    neg = true;
    v.remove_prefix(1);
  }
  const auto dot = v.find('.');
  std::string_view whole = v.substr(0, dot);
  std::string frac = dot == std::string_view::npos ? "" : std::string(v.substr(dot + 1));
  if (whole.empty() || frac.size() > 4) throw DataError("malformed percentage '" + s + "'");
  frac.resize(4, '0');
  long long w = 0, f = 0;
  auto r1 = std::from_chars(whole.data(), whole.data() + whole.size(), w);
  auto r2 = std::from_chars(frac.data(), frac.data() + frac.size(), f);
  if (r1.ec != std::errc() || r1.ptr != whole.data() + whole.size() || r2.ec != std::errc() ||
      r2.ptr != frac.data() + frac.size()) {
    throw DataError("malformed percentage '" + s + "'");
  }
  const long long u = w * 10000 + f;
  return neg ? -u : u;
}

int phase_rank(const std::string& phase) {
  static const std::vector<std::string> order = {"clean-baseline", "attacked",  "naive-FT/in", "naive-FT/out",
                                                 "CF-FT/in",       "CF-FT/out", "ORG/in",      "ORG/out",
                                                 "EMD/in",         "EMD/out"};
  // Sweep phases carry a " a=..." or " r=..." suffix after the arm name.
  const std::string base = phase.substr(0, phase.find(' '));
  const auto it = std::find(order.begin(), order.end(), base);
  return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

json counts_json(const Metrics& m) {
  return {{"clean_correct", m.clean_correct},
          {"clean_total", m.clean_total},
          {"attack_as_normal", m.attack_as_normal},
          {"attack_total", m.attack_total}};
}

Metrics counts_from_json(const json& j) {
  return Metrics::from_counts(j.at("clean_correct").get<std::size_t>(), j.at("clean_total").get<std::size_t>(),
                              j.at("attack_as_normal").get<std::size_t>(), j.at("attack_total").get<std::size_t>());
}

std::vector<RawSample> build_external(const ExperimentConfig& cfg, std::span<const RawSample> train) {
  const bool needed = std::any_of(cfg.arms.begin(), cfg.arms.end(),
                                  [](const DefenseArm& a) { return a.domain == Domain::kOut; });
  if (!needed) return {};
  if (cfg.external.kind == "path") return load_samples(cfg.external.path, format_from_path(cfg.external.path));
  GeneratorSpec spec = cfg.dataset.generator;
  spec.n_samples = cfg.external.n_samples;
  spec.seed = cfg.external.seed;
  std::unordered_set<std::string_view> seen;
  for (const auto& s : train) seen.insert(s.text);
  std::vector<RawSample> out;
  for (auto& s : generate_samples(spec)) {
    if (seen.count(s.text) == 0) out.push_back(std::move(s));
  }
  return out;
}

std::string arm_file(const DefenseArm& arm) {
  std::string s = arm_name(arm);
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

std::map<std::string, std::string> ini_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.find(']') - 1);
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out[section + "." + line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

// Attack-stage keys must match the frozen config of the run directory.
void check_same_attack_config(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto frozen = ini_values(read_text(dir / "config.ini", "attack run config (run `attack` first)"));
  const auto now = ini_values(to_ini(cfg));
  std::vector<std::string> diff;
  for (const auto& [key, value] : now) {
    if (key.rfind("defense.", 0) == 0 || key.rfind("output.", 0) == 0) continue;
    auto it = frozen.find(key);
    if (it == frozen.end() || it->second != value) diff.push_back(key);
  }
  if (!diff.empty()) {
    std::string msg = "config differs from the attack run in " + (dir / "config.ini").string() + ":";
    for (const auto& k : diff) msg += " " + k;
    throw ConfigError(msg);
  }
}

void log_line(std::ostream& log, std::mutex& mu, const std::string& msg) {
  std::lock_guard<std::mutex> lock(mu);
  log << msg << '\n';
  log.flush();
}

void save_case(const fs::path& dir, const AttackArtifacts& a) {
  fs::create_directories(dir);
  save_samples(dir / "poisoned_train.jsonl", a.poison.dataset.train, FileFormat::kJsonl);
  write_text(dir / "manifest.json", a.poison.manifest.to_json().dump(2) + "\n");
  save_samples(dir / "attack_test.jsonl", a.attack_test.samples, FileFormat::kJsonl);
  save_classifier(dir / "attacked.ckpt", a.attacked);
  json m = {{"baseline", counts_json(a.baseline)},
            {"attacked", counts_json(a.after_attack)},
            {"attack_test_excluded", a.attack_test.excluded_count},
            {"train_loss", a.loss_trace}};
  write_text(dir / "metrics.json", m.dump(2) + "\n");
}

AttackArtifacts load_case(const fs::path& dir, const AttackCase& c) {
  AttackArtifacts a;
  a.attack_case = c;
  const fs::path train = dir / "poisoned_train.jsonl";
  const fs::path test = dir / "attack_test.jsonl";
  if (!fs::exists(train)) throw ArtifactError("missing poisoned training set '" + train.string() + "'");
  if (!fs::exists(test)) throw ArtifactError("missing attack test set '" + test.string() + "'");
  a.poison.dataset.train = load_samples(train, FileFormat::kJsonl);
  a.attack_test.samples = load_samples(test, FileFormat::kJsonl);
  try {
    a.poison.manifest = PoisonManifest::from_json(json::parse(read_text(dir / "manifest.json", "poison manifest")));
    const json m = json::parse(read_text(dir / "metrics.json", "attack metrics"));
    a.baseline = counts_from_json(m.at("baseline"));
    a.after_attack = counts_from_json(m.at("attacked"));
    a.attack_test.excluded_count = m.at("attack_test_excluded").get<std::size_t>();
    a.loss_trace = m.at("train_loss").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError("corrupt attack artifact in '" + dir.string() + "': " + e.what());
  }
  a.attacked = load_classifier(dir / "attacked.ckpt");
  return a;
}

// Cases whose artifacts load; failures are logged and returned as failed rows.
std::vector<std::optional<AttackArtifacts>> load_cases(const ExperimentConfig& cfg, const std::vector<AttackCase>& cases,
                                                       std::ostream& log, bool& ok) {
  std::vector<std::optional<AttackArtifacts>> out(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    try {
      out[i] = load_case(cfg.output_dir / "cases" / cases[i].dir_name(), cases[i]);
    } catch (const std::exception& e) {
      log << "error: case " << cases[i].dir_name() << ": " << e.what() << '\n';
      ok = false;
    }
  }
  return out;
}

}  // namespace

long long percent_units(double percent) { return std::llround(percent * 1e4); }

std::string format_units(long long units) {
  const bool neg = units < 0;
  const long long a = neg ? -units : units;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%04lld", neg ? "-" : "", a / 10000, a % 10000);
  return buf;
}

ResultRow ResultRow::make(int id, std::string model, std::string dataset, std::string trigger, std::string phase,
                          const Metrics& m, std::optional<double> pre_asr) {
  ResultRow r;
  r.id = id;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.trigger = std::move(trigger);
  r.phase = std::move(phase);
  r.c_acc_units = percent_units(m.c_acc);
  r.asr_units = percent_units(m.asr);
  r.r_acc_units = kHundred - r.asr_units;
  if (pre_asr) r.delta_asr_units = percent_units(*pre_asr) - r.asr_units;
  return r;
}

ResultRow ResultRow::failure(int id, std::string model, std::string dataset, std::string trigger,
                             std::string phase) {
  ResultRow r;
  r.id = id;
  r.model = std::move(model);
  r.dataset = std::move(dataset);
  r.trigger = std::move(trigger);
  r.phase = std::move(phase);
  r.failed = true;
  return r;
}

std::optional<double> ResultRow::delta_asr() const {
  if (!delta_asr_units) return std::nullopt;
  return static_cast<double>(*delta_asr_units) / 1e4;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.id) + "," + csv_escape(r.model) + "," + csv_escape(r.dataset) + "," +
           csv_escape(r.trigger) + "," + csv_escape(r.phase) + ",";
    if (r.failed) {
      out += ",,,FAILED\n";
      continue;
    }
    out += format_units(r.c_acc_units) + "," + format_units(r.asr_units) + "," + format_units(r.r_acc_units) + ",";
    if (r.delta_asr_units) out += format_units(*r.delta_asr_units);
    out += "\n";
  }
  return out;
}

std::vector<ResultRow> rows_from_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kResultHeader) throw DataError("result CSV header must be '" + std::string(kResultHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto f = csv_fields(line);
    const std::string where = "result CSV line " + std::to_string(line_no);
    if (f.size() != 9) throw DataError(where + ": expected 9 fields, got " + std::to_string(f.size()));
    ResultRow r;
    int id = 0;
    auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), id);
    if (ec != std::errc() || p != f[0].data() + f[0].size()) throw DataError(where + ": bad id '" + f[0] + "'");
    r.id = id;
    r.model = f[1];
    r.dataset = f[2];
    r.trigger = f[3];
    r.phase = f[4];
    if (f[8] == "FAILED") {
      r.failed = true;
    } else {
      try {
        r.c_acc_units = parse_units(f[5]);
        r.asr_units = parse_units(f[6]);
        r.r_acc_units = parse_units(f[7]);
        if (!f[8].empty()) r.delta_asr_units = parse_units(f[8]);
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_rows(const fs::path& path, const std::vector<ResultRow>& rows) { write_text(path, rows_to_csv(rows)); }

std::vector<ResultRow> read_rows(const fs::path& path) { return rows_from_csv(read_text(path, "result rows")); }

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.id != b.id) return a.id < b.id;
    const int ra = phase_rank(a.phase), rb = phase_rank(b.phase);
    if (ra != rb) return ra < rb;
    return a.phase < b.phase;
  });
}

std::string wide_csv(const std::vector<ResultRow>& input) {
  std::vector<ResultRow> rows = input;
  sort_rows(rows);
  std::vector<std::string> phases;
  for (const auto& r : rows) {
    if (std::find(phases.begin(), phases.end(), r.phase) == phases.end()) phases.push_back(r.phase);
  }
  std::stable_sort(phases.begin(), phases.end(),
                   [](const std::string& a, const std::string& b) { return phase_rank(a) < phase_rank(b); });

  std::string out = "id,model,dataset,trigger";
  for (const auto& p : phases) {
    out += "," + csv_escape(p + " c_acc") + "," + csv_escape(p + " asr") + "," + csv_escape(p + " r_acc");
    if (phase_rank(p) >= 2) out += "," + csv_escape(p + " delta_asr");
  }
  out += "\n";
  std::size_t i = 0;
  while (i < rows.size()) {
    const ResultRow& head = rows[i];
    std::map<std::string, const ResultRow*> by_phase;
    std::size_t j = i;
    for (; j < rows.size() && rows[j].id == head.id; ++j) by_phase[rows[j].phase] = &rows[j];
    out += std::to_string(head.id) + "," + csv_escape(head.model) + "," + csv_escape(head.dataset) + "," +
           csv_escape(head.trigger);
    for (const auto& p : phases) {
      const bool defended = phase_rank(p) >= 2;
      auto it = by_phase.find(p);
      if (it == by_phase.end()) {
        out += defended ? ",,,," : ",,,";
      } else if (it->second->failed) {
        out += defended ? ",FAILED,FAILED,FAILED,FAILED" : ",FAILED,FAILED,FAILED";
      } else {
        const ResultRow& r = *it->second;
        out += "," + format_units(r.c_acc_units) + "," + format_units(r.asr_units) + "," +
               format_units(r.r_acc_units);
        if (defended) out += "," + (r.delta_asr_units ? format_units(*r.delta_asr_units) : std::string());
      }
    }
    out += "\n";
    i = j;
  }
  return out;
}

std::string summary_text(const std::vector<ResultRow>& input) {
  std::vector<ResultRow> rows = input;
  sort_rows(rows);
  struct Acc {
    double c_acc = 0, asr = 0, delta = 0;
    std::size_t n = 0, with_delta = 0, high_asr = 0;
    void add(const ResultRow& r) {
      c_acc += r.c_acc();
      asr += r.asr();
      ++n;
      if (r.asr() > 87.0) ++high_asr;
      if (r.delta_asr()) {
        delta += *r.delta_asr();
        ++with_delta;
      }
    }
  };
  std::size_t failed = 0;
  std::map<std::pair<int, std::string>, Acc> by_phase;  // (rank, phase)
  std::map<std::tuple<std::string, int, std::string>, Acc> by_model;  // (model, rank, phase)
  std::map<std::string, Acc> by_trigger;  // attacked only
  for (const auto& r : rows) {
    if (r.failed) {
      ++failed;
      continue;
    }
    by_phase[{phase_rank(r.phase), r.phase}].add(r);
    by_model[{r.model, phase_rank(r.phase), r.phase}].add(r);
    if (r.phase == "attacked") by_trigger[r.trigger].add(r);
  }

  std::ostringstream out;
  out << "result rows: " << rows.size() << " (" << failed << " failed)\n\n";
  out << "phase averages\n";
  out << "  phase                  rows   C-ACC    ASR      dASR\n";
  for (const auto& [key, a] : by_phase) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-22s %4zu   %6s   %6s   %s\n", key.second.c_str(), a.n,
                  fmt2(a.c_acc / a.n).c_str(), fmt2(a.asr / a.n).c_str(),
                  a.with_delta ? fmt2(a.delta / a.with_delta).c_str() : "-");
    out << line;
  }
  out << "\nper model\n";
  for (const auto& [key, a] : by_model) {
    char line[200];
    std::snprintf(line, sizeof line, "  %-8s %-22s C-ACC %6s  ASR %6s%s\n", std::get<0>(key).c_str(),
                  std::get<2>(key).c_str(), fmt2(a.c_acc / a.n).c_str(), fmt2(a.asr / a.n).c_str(),
                  a.with_delta ? ("  dASR " + fmt2(a.delta / a.with_delta)).c_str() : "");
    out << line;
  }
  if (!by_trigger.empty()) {
    out << "\nattacked, per trigger\n";
    std::size_t cases = 0, high = 0;
    for (const auto& [trigger, a] : by_trigger) {
      out << "  " << trigger << ": mean ASR " << fmt2(a.asr / a.n) << " over " << a.n << " case(s), C-ACC "
          << fmt2(a.c_acc / a.n) << "\n";
      cases += a.n;
      high += a.high_asr;
    }
    out << "  ASR above 87 in " << high << " of " << cases << " attack cases\n";
  }
  return out.str();
}

RunInputs load_inputs(const ExperimentConfig& cfg) {
  RunInputs in;
  if (cfg.dataset.kind == "synthetic") {
    in.dataset = generate_synthetic(cfg.dataset.generator);
  } else {
    const FileFormat f = cfg.dataset.format ? *cfg.dataset.format : format_from_path(cfg.dataset.path);
    in.dataset = load_dataset(cfg.dataset.path, f, cfg.dataset.seed);
  }
  in.dataset.name = cfg.dataset.name;
  in.external = build_external(cfg, in.dataset.train);
  return in;
}

std::string AttackCase::dir_name() const {
  return std::to_string(id) + "-" + std::string(model_name(model)) + "-" + std::string(trigger_name(trigger));
}

std::vector<AttackCase> attack_cases(const ExperimentConfig& cfg) {
  std::vector<AttackCase> out;
  int id = 1;
  for (ModelKind m : cfg.models) {
    for (TriggerKind t : cfg.triggers) out.push_back({id++, m, t});
  }
  return out;
}

TrainedClassifier train_baseline(const ExperimentConfig& cfg, const Dataset& dataset, ModelKind model) {
  return train_classifier(model, dataset.train, cfg.hyper, cfg.train);
}

AttackArtifacts run_attack_case(const ExperimentConfig& cfg, const Dataset& dataset, const AttackCase& c,
                                const Classifier& baseline) {
  AttackArtifacts a;
  a.attack_case = c;
  PoisonPlan plan = cfg.poison;
  plan.trigger.kind = c.trigger;
  a.poison = poison_training_set(dataset, plan);
  a.attack_test = build_attack_test_set(dataset, plan.trigger, plan.seed ^ 0x7e57ULL);
  TrainedClassifier t = train_classifier(c.model, a.poison.dataset.train, cfg.hyper, cfg.train);
  a.attacked = std::move(t.classifier);
  a.loss_trace = std::move(t.loss_trace);
  a.baseline = evaluate(baseline, dataset.test, a.attack_test.samples);
  a.after_attack = evaluate(a.attacked, dataset.test, a.attack_test.samples);
  return a;
}

ArmOutcome run_defense_case(const ExperimentConfig& cfg, const Dataset& clean, const AttackArtifacts& art,
                            const DefenseConfig& dcfg, std::span<const RawSample> external) {
  // Same draw for every method at a given domain and ratio.
  Rng rng(dcfg.seed ^ (dcfg.domain == Domain::kIn ? 0x1dULL : 0x0dULL));
  const auto ft_set = build_finetune_set(art.poison.dataset.train, art.poison.manifest, dcfg.domain, dcfg.ratio,
                                         external, rng);
  ArmOutcome out{{}, run_defense(art.attacked, ft_set, dcfg, cfg.train, cfg.finetune)};
  out.metrics = evaluate(out.defense.classifier, clean.test, art.attack_test.samples);
  return out;
}

std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return errors;
}

namespace {

struct AttackStage {
  std::vector<AttackCase> cases;
  std::vector<std::optional<AttackArtifacts>> artifacts;
  std::vector<ResultRow> rows;
  std::vector<std::string> errors;  // "what: message"
};

AttackStage attack_stage(const ExperimentConfig& cfg, const Dataset& dataset,
                         const std::function<void(ModelKind, const Classifier&)>& on_baseline,
                         const std::function<void(const AttackArtifacts&)>& on_case) {
  AttackStage st;
  st.cases = attack_cases(cfg);
  std::vector<std::optional<Classifier>> baselines(cfg.models.size());
  auto berr = parallel_for(cfg.models.size(), cfg.jobs, [&](std::size_t i) {
    TrainedClassifier t = train_baseline(cfg, dataset, cfg.models[i]);
    if (on_baseline) on_baseline(cfg.models[i], t.classifier);
    baselines[i] = std::move(t.classifier);
  });
  for (std::size_t i = 0; i < berr.size(); ++i) {
    if (!berr[i].empty()) st.errors.push_back("baseline " + std::string(model_name(cfg.models[i])) + ": " + berr[i]);
  }

  st.artifacts.resize(st.cases.size());
  auto cerr = parallel_for(st.cases.size(), cfg.jobs, [&](std::size_t i) {
    const AttackCase& c = st.cases[i];
    const auto m = static_cast<std::size_t>(std::find(cfg.models.begin(), cfg.models.end(), c.model) -
                                            cfg.models.begin());
    if (!baselines[m]) throw NumericError("baseline model unavailable");
    AttackArtifacts a = run_attack_case(cfg, dataset, c, *baselines[m]);
    if (on_case) on_case(a);
    st.artifacts[i] = std::move(a);
  });

  for (std::size_t i = 0; i < st.cases.size(); ++i) {
    const AttackCase& c = st.cases[i];
    const std::string model(model_name(c.model)), trigger(trigger_name(c.trigger));
    if (!cerr[i].empty()) {
      st.errors.push_back("case " + c.dir_name() + ": " + cerr[i]);
      st.rows.push_back(ResultRow::failure(c.id, model, dataset.name, trigger, "clean-baseline"));
      st.rows.push_back(ResultRow::failure(c.id, model, dataset.name, trigger, "attacked"));
      continue;
    }
    const AttackArtifacts& a = *st.artifacts[i];
    st.rows.push_back(ResultRow::make(c.id, model, dataset.name, trigger, "clean-baseline", a.baseline));
    st.rows.push_back(ResultRow::make(c.id, model, dataset.name, trigger, "attacked", a.after_attack));
  }
  return st;
}

struct DefenseTask {
  std::size_t case_index;
  DefenseConfig dcfg;
  std::string phase;
  std::string series;
  double x = 0.0;
};

std::vector<const AttackArtifacts*> pointers(const std::vector<std::optional<AttackArtifacts>>& arts) {
  std::vector<const AttackArtifacts*> out;
  for (const auto& a : arts) out.push_back(a ? &*a : nullptr);
  return out;
}

std::vector<ResultRow> defense_stage(const ExperimentConfig& cfg, const Dataset& clean,
                                     const std::vector<AttackCase>& cases,
                                     const std::vector<const AttackArtifacts*>& arts,
                                     std::span<const RawSample> external, const std::vector<DefenseTask>& tasks,
                                     std::vector<std::string>& errors,
                                     const std::function<void(const DefenseTask&, const DefenseResult&)>& on_done) {
  std::vector<std::optional<Metrics>> metrics(tasks.size());
  auto terr = parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
    const DefenseTask& t = tasks[i];
    if (!arts[t.case_index]) throw ArtifactError("attack artifacts unavailable");
    ArmOutcome o = run_defense_case(cfg, clean, *arts[t.case_index], t.dcfg, external);
    if (on_done) on_done(t, o.defense);
    metrics[i] = o.metrics;
  });
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const AttackCase& c = cases[tasks[i].case_index];
    const std::string model(model_name(c.model)), trigger(trigger_name(c.trigger));
    if (!terr[i].empty()) {
      errors.push_back("case " + c.dir_name() + " " + tasks[i].phase + ": " + terr[i]);
      rows.push_back(ResultRow::failure(c.id, model, clean.name, trigger, tasks[i].phase));
      continue;
    }
    rows.push_back(ResultRow::make(c.id, model, clean.name, trigger, tasks[i].phase, *metrics[i],
                                   arts[tasks[i].case_index]->after_attack.asr));
  }
  return rows;
}

std::vector<DefenseTask> arm_tasks(const ExperimentConfig& cfg, const std::vector<AttackCase>& cases) {
  std::vector<DefenseTask> tasks;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (const auto& arm : cfg.arms) tasks.push_back({i, cfg.defense_for(cases[i].model, arm), arm_name(arm), arm_name(arm), 0.0});
  }
  return tasks;
}

std::vector<DefenseTask> sweep_tasks(const ExperimentConfig& cfg, const std::vector<AttackCase>& cases, SweepKind kind) {
  std::vector<DefenseArm> arms;
  for (const auto& a : cfg.arms) {
    if (kind == SweepKind::kRatio || a.method == FineTuneMethod::kCfFt) arms.push_back(a);
  }
  if (arms.empty()) arms.push_back({FineTuneMethod::kCfFt, Domain::kIn});
  const auto& xs = kind == SweepKind::kAlpha ? cfg.sweep_alphas : cfg.sweep_ratios;
  std::vector<DefenseTask> tasks;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (const auto& arm : arms) {
      for (double x : xs) {
        DefenseTask t{i, cfg.defense_for(cases[i].model, arm), "", arm_name(arm), x};
        if (kind == SweepKind::kAlpha) {
          t.dcfg.alpha = x;
          t.phase = arm_name(arm) + " a=" + fmt_g(x);
        } else {
          t.dcfg.ratio = x;
          t.phase = arm_name(arm) + " r=" + fmt_g(x);
        }
        tasks.push_back(std::move(t));
      }
    }
  }
  return tasks;
}

SweepResult sweep_from(const std::vector<DefenseTask>& tasks, std::vector<ResultRow> rows) {
  SweepResult out;
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, SweepPoint> acc;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto key = std::make_pair(tasks[i].series, tasks[i].x);
    if (acc.find(key) == acc.end()) {
      keys.push_back(key);
      acc[key] = SweepPoint{key.first, key.second};
    }
    const ResultRow& r = rows[i];
    if (r.failed) continue;
    SweepPoint& p = acc[key];
    p.mean_c_acc += r.c_acc();
    p.mean_asr += r.asr();
    p.mean_delta_asr += r.delta_asr().value_or(0.0);
    ++p.cases;
  }
  for (const auto& k : keys) {
    SweepPoint p = acc[k];
    if (p.cases > 0) {
      p.mean_c_acc /= static_cast<double>(p.cases);
      p.mean_asr /= static_cast<double>(p.cases);
      p.mean_delta_asr /= static_cast<double>(p.cases);
    }
    out.points.push_back(p);
  }
  out.rows = std::move(rows);
  sort_rows(out.rows);
  return out;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunInputs& inputs) {
  cfg.validate();
  AttackStage st = attack_stage(cfg, inputs.dataset, nullptr, nullptr);
  std::vector<ResultRow> rows = st.rows;
  auto drows = defense_stage(cfg, inputs.dataset, st.cases, pointers(st.artifacts), inputs.external, arm_tasks(cfg, st.cases),
                             st.errors, nullptr);
  rows.insert(rows.end(), drows.begin(), drows.end());
  sort_rows(rows);
  return rows;
}

SweepResult run_sweep(const ExperimentConfig& cfg, const Dataset& clean, std::span<const AttackArtifacts> cases,
                      std::span<const RawSample> external, SweepKind kind) {
  std::vector<AttackCase> ids;
  std::vector<const AttackArtifacts*> arts;
  for (const auto& a : cases) {
    ids.push_back(a.attack_case);
    arts.push_back(&a);
  }
  const auto tasks = sweep_tasks(cfg, ids, kind);
  std::vector<std::string> errors;
  auto rows = defense_stage(cfg, clean, ids, arts, external, tasks, errors, nullptr);
  return sweep_from(tasks, std::move(rows));
}

std::string sweep_csv(const SweepResult& sweep, SweepKind kind) {
  std::string out = std::string("series,") + (kind == SweepKind::kAlpha ? "alpha" : "ratio") +
                    ",mean_c_acc,mean_asr,mean_delta_asr,cases\n";
  for (const auto& p : sweep.points) {
    out += csv_escape(p.series) + "," + fmt_g(p.x) + "," + fmt2(p.mean_c_acc) + "," + fmt2(p.mean_asr) + "," +
           fmt2(p.mean_delta_asr) + "," + std::to_string(p.cases) + "\n";
  }
  return out;
}

void save_classifier(const fs::path& path, const Classifier& clf) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  Checkpoint ckpt = to_checkpoint(*clf.model);
  ckpt.config["input_length"] = clf.input_length;
  ckpt.config["vocab"] = clf.vocab.to_json();
  save_checkpoint(path, ckpt);
}

Classifier load_classifier(const fs::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  Classifier clf;
  try {
    clf.input_length = ckpt.config.at("input_length").get<std::size_t>();
    clf.vocab = Vocab::from_json(ckpt.config.at("vocab"));
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "' lacks classifier metadata: " + e.what());
  }
  clf.model = from_checkpoint(ckpt);
  if (clf.model->vocab_size() != clf.vocab.size()) {
    throw DataError("checkpoint '" + path.string() + "' vocab does not match its embedding table");
  }
  return clf;
}

bool attack_command(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  std::mutex mu;
  write_text(dir / "config.ini", to_ini(cfg));
  RunInputs in = load_inputs(cfg);
  save_dataset(dir / "data", in.dataset);
  if (!in.external.empty()) save_samples(dir / "data" / "external.jsonl", in.external, FileFormat::kJsonl);
  log_line(log, mu,
           "dataset '" + in.dataset.name + "': train " + std::to_string(in.dataset.train.size()) + ", test " +
               std::to_string(in.dataset.test.size()) + ", dev " + std::to_string(in.dataset.dev.size()));

  AttackStage st = attack_stage(
      cfg, in.dataset,
      [&](ModelKind m, const Classifier& clf) {
        save_classifier(dir / ("baseline-" + std::string(model_name(m)) + ".ckpt"), clf);
        log_line(log, mu, "trained baseline " + std::string(model_name(m)));
      },
      [&](const AttackArtifacts& a) {
        save_case(dir / "cases" / a.attack_case.dir_name(), a);
        log_line(log, mu,
                 "case " + a.attack_case.dir_name() + ": C-ACC " + fmt2(a.after_attack.c_acc) + ", ASR " +
                     fmt2(a.after_attack.asr));
      });
  write_rows(dir / "attack_rows.csv", st.rows);
  for (const auto& e : st.errors) log << "error: " << e << '\n';
  return st.errors.empty();
}

bool defend_command(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  check_same_attack_config(cfg, dir);
  write_text(dir / "config.defend.ini", to_ini(cfg));
  const Dataset clean = load_dataset_dir(dir / "data");
  std::vector<RawSample> external;
  if (fs::exists(dir / "data" / "external.jsonl")) {
    external = load_samples(dir / "data" / "external.jsonl", FileFormat::kJsonl);
  } else {
    external = build_external(cfg, clean.train);
  }

  bool ok = true;
  const auto cases = attack_cases(cfg);
  auto arts = load_cases(cfg, cases, log, ok);
  std::vector<std::string> errors;
  std::mutex mu;
  Dataset named = clean;
  named.name = cfg.dataset.name;
  auto rows = defense_stage(cfg, named, cases, pointers(arts), external, arm_tasks(cfg, cases), errors,
                            [&](const DefenseTask& t, const DefenseResult& r) {
                              const AttackCase& c = cases[t.case_index];
                              save_classifier(dir / "defended" / c.dir_name() /
                                                  (arm_file(parse_arm(t.phase)) + ".ckpt"),
                                              r.classifier);
                              log_line(log, mu,
                                       "case " + c.dir_name() + " " + t.phase + ": " +
                                           std::to_string(r.fit.loss_trace.size()) + " epoch(s)");
                            });
  sort_rows(rows);
  write_rows(dir / "defense_rows.csv", rows);
  for (const auto& e : errors) log << "error: " << e << '\n';
  return ok && errors.empty();
}

bool sweep_command(const ExperimentConfig& cfg, SweepKind kind, std::ostream& log) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  check_same_attack_config(cfg, dir);
  const std::string stem = kind == SweepKind::kAlpha ? "sweep_alpha" : "sweep_ratio";
  write_text(dir / ("config." + stem + ".ini"), to_ini(cfg));
  Dataset clean = load_dataset_dir(dir / "data");
  clean.name = cfg.dataset.name;
  std::vector<RawSample> external;
  if (fs::exists(dir / "data" / "external.jsonl")) {
    external = load_samples(dir / "data" / "external.jsonl", FileFormat::kJsonl);
  } else {
    external = build_external(cfg, clean.train);
  }
  bool ok = true;
  const auto cases = attack_cases(cfg);
  auto arts = load_cases(cfg, cases, log, ok);
  std::vector<std::string> errors;
  const auto tasks = sweep_tasks(cfg, cases, kind);
  auto rows = defense_stage(cfg, clean, cases, pointers(arts), external, tasks, errors, nullptr);
  const SweepResult sweep = sweep_from(tasks, std::move(rows));
  write_rows(dir / (stem + "_rows.csv"), sweep.rows);
  write_text(dir / (stem + ".csv"), sweep_csv(sweep, kind));
  for (const auto& e : errors) log << "error: " << e << '\n';
  return ok && errors.empty();
}

void report_command(const fs::path& dir, std::ostream& log) {
  std::vector<ResultRow> rows;
  for (const char* name : {"attack_rows.csv", "defense_rows.csv"}) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) continue;
    auto part = read_rows(p);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) throw DataError("no result rows in '" + dir.string() + "'");
  sort_rows(rows);
  write_rows(dir / "results.csv", rows);
  write_text(dir / "wide.csv", wide_csv(rows));
  const std::string summary = summary_text(rows);
  write_text(dir / "summary.txt", summary);
  log << summary;
}

}  // namespace bdlab
