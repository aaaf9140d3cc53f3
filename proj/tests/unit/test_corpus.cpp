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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "bdlab/corpus.hpp"
#include "bdlab/error.hpp"
#include "doctest.h"

using namespace bdlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bdlab_corpus_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::set<std::string> texts(const std::vector<RawSample>& v) {
  std::set<std::string> out;
  for (const auto& s : v) out.insert(s.text);
  return out;
}

}  // namespace

TEST_CASE("generator sizes, splits and fractions") {
  GeneratorSpec spec;
  spec.n_samples = 1000;
  spec.attack_fraction = 0.4;
  spec.seed = 7;
  const Dataset ds = generate_synthetic(spec);
  CHECK(ds.train.size() == 800);
  CHECK(ds.test.size() == 100);
  CHECK(ds.dev.size() == 100);
  for (Split s : {Split::kTrain, Split::kTest, Split::kDev}) {
    CHECK(std::fabs(attack_fraction(ds.split(s)) - 0.4) <= 0.05);
  }

  const auto all = generate_samples(spec);
  CHECK(all.size() == 1000);
  CHECK(std::count_if(all.begin(), all.end(), [](const RawSample& s) { return s.label == Label::kAttack; }) == 400);
  CHECK(texts(all).size() == all.size());
  for (const auto& s : all) CHECK_FALSE(s.text.empty());
}

TEST_CASE("generator is deterministic and seed-sensitive") {
  GeneratorSpec spec;
  spec.n_samples = 500;
  spec.seed = 3;
  CHECK(generate_synthetic(spec) == generate_synthetic(spec));
  GeneratorSpec other = spec;
  other.seed = 4;
  CHECK_FALSE(generate_synthetic(spec) == generate_synthetic(other));
}

TEST_CASE("generator rejects invalid specs") {
  GeneratorSpec spec;
  spec.n_samples = 5;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.n_samples = 100;
  spec.attack_fraction = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.attack_fraction = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.attack_fraction = 0.4;
  spec.families = {TemplateFamily::kSqli};
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  CHECK_THROWS_AS(parse_family("ldap"), ConfigError);
}

TEST_CASE("synthetic attack texts carry the structure the triggers need") {
  GeneratorSpec spec;
  spec.n_samples = 2000;
  for (const auto& s : generate_samples(spec)) {
    if (s.label != Label::kAttack) continue;
    CHECK(s.text.front() == '/');
  }
}

TEST_CASE("split_dataset arithmetic, disjointness and determinism") {
  std::vector<RawSample> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({"/p" + std::to_string(i), i < 4 ? Label::kAttack : Label::kNormal});
  const Dataset d = split_dataset(ten, {0.8, 0.1, 0.1}, 1);
  CHECK(d.train.size() == 8);
  CHECK(d.test.size() == 1);
  CHECK(d.dev.size() == 1);
  CHECK(d == split_dataset(ten, {0.8, 0.1, 0.1}, 1));

  std::vector<RawSample> many;
  for (int i = 0; i < 3000; ++i) many.push_back({"/q?id=" + std::to_string(i), i % 3 == 0 ? Label::kAttack : Label::kNormal});
  // Duplicates are dropped before splitting.
  many.push_back(many.front());
  const Dataset big = split_dataset(many, {0.8, 0.1, 0.1}, 9);
  CHECK(big.train.size() + big.test.size() + big.dev.size() == 3000);
  const auto a = texts(big.train), b = texts(big.test), c = texts(big.dev);
  for (const auto& t : b) CHECK(a.count(t) == 0);
  for (const auto& t : c) {
    CHECK(a.count(t) == 0);
    CHECK(b.count(t) == 0);
  }
  const double global = 1000.0 / 3000.0;
  for (Split s : {Split::kTrain, Split::kTest, Split::kDev}) {
    CHECK(std::fabs(attack_fraction(big.split(s)) - global) <= 0.05);
  }
}

TEST_CASE("split_dataset errors") {
  std::vector<RawSample> v = {{"/a", Label::kNormal}, {"/b", Label::kAttack}};
  CHECK_THROWS_AS(split_dataset(v, {0.5, 0.3, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset({}, {0.8, 0.1, 0.1}, 1), ConfigError);
  // Two samples cannot fill three splits.
  CHECK_THROWS_AS(split_dataset(v, {0.8, 0.1, 0.1}, 1), DataError);
}

TEST_CASE("stats JSON recounts labels") {
  GeneratorSpec spec;
  spec.n_samples = 1000;
  const Dataset ds = generate_synthetic(spec);
  const auto j = dataset_stats(ds);
  REQUIRE(j.at("splits").size() == 3);
  CHECK(j["splits"][0]["split"] == "train");
  CHECK(j["splits"][0]["total"] == 800);
  CHECK(std::fabs(j["splits"][0]["attack%"].get<double>() - 100.0 * attack_fraction(ds.train)) < 0.01);
}

TEST_CASE("JSONL loading") {
  const fs::path dir = scratch("jsonl");
  write_file(dir / "ok.jsonl", "{\"text\":\"/a?b=1\",\"label\":0}\n\n{\"text\":\"/x' or 1=1\",\"label\":1}\n");
  LoadReport rep;
  const auto s = load_samples(dir / "ok.jsonl", FileFormat::kJsonl, &rep);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == RawSample{"/a?b=1", Label::kNormal});
  CHECK(s[1].label == Label::kAttack);
  CHECK(rep.records == 2);
  CHECK(rep.skipped_blank == 1);

  write_file(dir / "bad.jsonl", "{\"text\":\"/a\",\"label\":0}\n{\"text\":\"/b\",\"label\":2}\n");
  try {
    load_samples(dir / "bad.jsonl", FileFormat::kJsonl);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  write_file(dir / "missing.jsonl", "{\"text\":\"/a\"}\n");
  CHECK_THROWS_AS(load_samples(dir / "missing.jsonl", FileFormat::kJsonl), DataError);
  write_file(dir / "empty.jsonl", "");
  try {
    load_samples(dir / "empty.jsonl", FileFormat::kJsonl);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("no samples") != std::string::npos);
  }
  CHECK_THROWS_AS(load_samples(dir / "absent.jsonl", FileFormat::kJsonl), DataError);
}

TEST_CASE("CSV loading with RFC-4180 quoting") {
  const fs::path dir = scratch("csv");
  write_file(dir / "a.csv", "text,label\r\n\"/q?x=\"\"a,b\"\"\",1\r\n/plain,0\r\n\"multi\nline\",0\r\n");
  const auto s = load_samples(dir / "a.csv", FileFormat::kCsv);
  REQUIRE(s.size() == 3);
  CHECK(s[0].text == "/q?x=\"a,b\"");
  CHECK(s[0].label == Label::kAttack);
  CHECK(s[2].text == "multi\nline");
  write_file(dir / "h.csv", "body,label\n/a,0\n");
  CHECK_THROWS_AS(load_samples(dir / "h.csv", FileFormat::kCsv), DataError);
  CHECK(format_from_path("x/y.csv") == FileFormat::kCsv);
  CHECK(format_from_path("x/y.jsonl") == FileFormat::kJsonl);
}

TEST_CASE("save then load round trip") {
  const fs::path dir = scratch("roundtrip");
  std::vector<RawSample> odd = {{"/a,\"b\"\r\n\r\n", Label::kAttack}, {"/sτring", Label::kNormal}, {"x y", Label::kNormal}};
  for (FileFormat f : {FileFormat::kJsonl, FileFormat::kCsv}) {
    const fs::path p = dir / (f == FileFormat::kCsv ? "s.csv" : "s.jsonl");
    save_samples(p, odd, f);
    CHECK(load_samples(p, f) == odd);
  }
  GeneratorSpec spec;
  spec.n_samples = 300;
  Dataset ds = generate_synthetic(spec);
  save_dataset(dir / "ds", ds);
  Dataset back = load_dataset_dir(dir / "ds");
  CHECK(back.train == ds.train);
  CHECK(back.test == ds.test);
  CHECK(back.dev == ds.dev);
  CHECK(fs::exists(dir / "ds" / "stats.json"));
}
