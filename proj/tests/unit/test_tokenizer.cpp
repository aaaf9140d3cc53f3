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

#include <filesystem>
#include <string>
#include <vector>

#include "bdlab/error.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/tokenizer.hpp"
#include "doctest.h"

using namespace bdlab;

namespace {

using V = std::vector<std::string>;

// Random request-like text: ASCII words, punctuation, whitespace, homoglyphs.
std::string fuzz_text(Rng& rng) {
  static const std::vector<std::string> atoms = {
      "/", "?", "=", "&", "'", "\"", "(", ")", ",", ".", ";", "-", "<", ">", "%2f", " ", "  ", "\t", "\r\n",
      "select", "UNION", "Admin", "x_y", "8392", "τ", "α", "ε", "ο", "ι", "string", "id", "0x7e", "\xff", "é"};
  std::string out;
  const std::size_t n = rng.index(40);
  for (std::size_t i = 0; i < n; ++i) out += atoms[rng.index(atoms.size())];
  if (rng.bernoulli(0.2)) out += "\r\n\r\n";
  return out;
}

}  // namespace

TEST_CASE("tokenize reference examples") {
  CHECK(tokenize("/string/strings/parameters=1") == V{"/", "string", "/", "strings", "/", "parameters", "=", "1"});
  CHECK(tokenize("information_schema.character_sets") == V{"information_schema", ".", "character_sets"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("x)\r\n\r\n") == V{"x", ")", "<CRLF2>"});
  CHECK(tokenize("SELECT Id") == V{"select", "id"});
  CHECK(tokenize("  \t\r\n ").empty());
  // Only a trailing CR LF CR LF is special.
  CHECK(tokenize("a\r\n\r\nb") == V{"a", "b"});
}

TEST_CASE("homoglyphs stay inside their word and stay distinct") {
  const auto plain = tokenize("/string");
  const auto glyph = tokenize("/sτring");
  REQUIRE(glyph.size() == 2);
  CHECK(glyph[1] == "sτring");
  CHECK(plain[1] != glyph[1]);
  // Non-ASCII is not lowercased.
  CHECK(tokenize("Σx") == V{"Σx"});
}

TEST_CASE("fuzz: idempotence under re-spacing and no spaces in tokens") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const std::string t = fuzz_text(rng);
    const auto toks = tokenize(t);
    for (const auto& tok : toks) {
      CHECK_FALSE(tok.empty());
      if (tok != kCrlf2Token) CHECK(tok.find_first_of(" \t\r\n") == std::string::npos);
    }
    if (!toks.empty() && toks.back() == kCrlf2Token) continue;
    CHECK(tokenize(join_tokens(toks)) == toks);
  }
}

TEST_CASE("vocab build: frequency cut and lexicographic ties") {
  std::vector<TokenSeq> corpus = {{"a", "a", "a", "b", "b", "c"}, {"a", "a", "b"}};
  const Vocab v = Vocab::build(corpus, 2);
  CHECK(v.size() == 4);
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == 3);
  CHECK(v.id("c") == Vocab::kUnk);
  CHECK(v.token(Vocab::kPad) == "<PAD>");

  const Vocab all = Vocab::build(corpus, 100);
  CHECK(all.size() == 5);

  std::vector<TokenSeq> ties = {{"zz", "yy", "xx", "ww"}};
  const Vocab t = Vocab::build(ties, 2);
  CHECK(t.contains("ww"));
  CHECK(t.contains("xx"));
  CHECK_FALSE(t.contains("yy"));

  CHECK_THROWS_AS(Vocab::build(std::vector<TokenSeq>{}, 10), DataError);
  CHECK_THROWS_AS(Vocab::build(std::vector<TokenSeq>{{}}, 10), DataError);
}

TEST_CASE("vocab JSON round trip") {
  std::vector<TokenSeq> corpus = {tokenize("/sτring/a?b=1 and 1=1")};
  const Vocab v = Vocab::build(corpus, 50);
  const Vocab back = Vocab::from_json(v.to_json());
  CHECK(back == v);
  CHECK(back.id("sτring") == v.id("sτring"));
  const auto path = std::filesystem::temp_directory_path() / "bdlab_vocab_test.json";
  v.save(path);
  CHECK(Vocab::load(path) == v);
  CHECK_THROWS_AS(Vocab::from_json(nlohmann::json::array()), DataError);
  CHECK_THROWS_AS(Vocab::from_json(nlohmann::json{{"x", 0}}), DataError);
}

TEST_CASE("encode: UNK, truncation and padding") {
  std::vector<TokenSeq> corpus = {{"a"}};
  const Vocab v = Vocab::build(corpus, 10);
  CHECK(encode(V{"a", "zz"}, v, 4) == std::vector<TokenId>{2, Vocab::kUnk, Vocab::kPad, Vocab::kPad});
  CHECK(encode(V{}, v, 3) == std::vector<TokenId>{0, 0, 0});
  V long_seq(300, "a");
  const auto ids = encode(long_seq, v, 256);
  CHECK(ids.size() == 256);
  CHECK(std::count(ids.begin(), ids.end(), Vocab::kPad) == 0);
  CHECK(active_length(encode(V{"a", "q"}, v, 5)) == 2);
  CHECK(active_length(std::vector<TokenId>{0, 0}) == 0);
}

TEST_CASE("fuzz: encoded length is exactly L") {
  Rng rng(99);
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(tokenize(fuzz_text(rng)));
  const Vocab v = Vocab::build(corpus, 30);
  for (int i = 0; i < 500; ++i) {
    const auto toks = tokenize(fuzz_text(rng));
    for (std::size_t L : {1u, 7u, 64u, 256u}) {
      const auto ids = encode(toks, v, L);
      CHECK(ids.size() == L);
      for (TokenId id : ids) CHECK((id >= 0 && static_cast<std::size_t>(id) < v.size()));
      CHECK(active_length(ids) == std::min(L, toks.size()));
    }
  }
}
