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

#include "bdlab/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "bdlab/error.hpp"

namespace bdlab {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c >= 0x80;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

char lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  bool crlf2 = false;
  if (text.size() >= 4 && text.substr(text.size() - 4) == "\r\n\r\n") {
    crlf2 = true;
    text.remove_suffix(4);
  }
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::string word;
      while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
        word.push_back(lower_ascii(text[i]));
        ++i;
      }
      out.push_back(std::move(word));
    } else {
      out.emplace_back(1, text[i]);
      ++i;
    }
  }
  if (crlf2) out.emplace_back(kCrlf2Token);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocab::Vocab() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

void Vocab::add(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
}

Vocab Vocab::build(std::span<const TokenSeq> corpus, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) ++counts[tok];
  }
  if (counts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic, so a stable sort on count
  // alone keeps ties in lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab v;
  v.max_size_ = max_size;
  for (std::size_t i = 0; i < ranked.size() && i < max_size; ++i) {
    if (ranked[i].first == kPadToken || ranked[i].first == kUnkToken) continue;
    v.add(std::move(ranked[i].first));
  }
  return v;
}

TokenId Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }

bool Vocab::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

nlohmann::json Vocab::to_json() const {
  // ordered_json keeps id order, so identical vocabularies serialize identically.
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) entries[tokens_[i]] = i;
  return nlohmann::json::parse(entries.dump());
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("vocab JSON must be an object {token: id}");
  std::vector<std::string> by_id(j.size());
  for (const auto& [tok, id] : j.items()) {
    if (!id.is_number_unsigned() || id.get<std::size_t>() >= by_id.size()) {
      throw DataError("vocab JSON has an out-of-range id for token '" + tok + "'");
    }
    by_id[id.get<std::size_t>()] = tok;
  }
  if (by_id.size() < 2 || by_id[kPad] != kPadToken || by_id[kUnk] != kUnkToken) {
    throw DataError("vocab JSON lacks the reserved <PAD>=0 and <UNK>=1 entries");
  }
  Vocab v;
  for (std::size_t i = 2; i < by_id.size(); ++i) {
    if (by_id[i].empty()) throw DataError("vocab JSON ids are not contiguous");
    v.add(by_id[i]);
  }
  v.max_size_ = by_id.size() - 2;
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write vocab '" + path.string() + "'");
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) entries[tokens_[i]] = i;
  out << entries.dump() << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read vocab '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(nlohmann::json::parse(buf.str()));
}

std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocab& vocab,
                            std::size_t length) {
  std::vector<TokenId> ids(length, Vocab::kPad);
  const std::size_t n = std::min(tokens.size(), length);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id(tokens[i]);
  return ids;
}

std::vector<EncodedSample> encode_samples(std::span<const RawSample> samples, const Vocab& vocab,
                                          std::size_t length) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({encode(tokenize(s.text), vocab, length), s.label});
  return out;
}

std::size_t active_length(std::span<const TokenId> ids) {
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == Vocab::kPad) --n;
  return n;
}

}  // namespace bdlab
