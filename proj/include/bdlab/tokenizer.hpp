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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bdlab/corpus.hpp"
#include "json.hpp"

namespace bdlab {

// Token emitted for a CR LF CR LF sequence that ends the text.
inline constexpr std::string_view kCrlf2Token = "<CRLF2>";

using TokenSeq = std::vector<std::string>;
using TokenId = std::int32_t;

// Word tokens are maximal runs of ASCII letters, digits, '_' and any
// non-ASCII byte (so UTF-8 homoglyphs stay inside their word). Every other
// non-whitespace byte is a one-character token. ASCII letters are lowercased.
TokenSeq tokenize(std::string_view text);

// Tokens joined by single spaces.
std::string join_tokens(std::span<const std::string> tokens);

class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr std::string_view kPadToken = "<PAD>";
  static constexpr std::string_view kUnkToken = "<UNK>";

  Vocab();

  // Keeps the max_size most frequent tokens; frequency ties are broken by
  // byte-wise lexicographic order. Throws DataError on an empty corpus.
  static Vocab build(std::span<const TokenSeq> corpus, std::size_t max_size);

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;

  // Including the two reserved entries.
  std::size_t size() const { return tokens_.size(); }
  std::size_t max_size() const { return max_size_; }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_size_ = 0;
};

// Fixed-length id vector of `length` entries: leading tokens mapped through
// the vocab (UNK when absent), truncated, then right-padded with PAD.
std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocab& vocab,
                            std::size_t length);

struct EncodedSample {
  std::vector<TokenId> ids;
  Label label = Label::kNormal;
};

std::vector<EncodedSample> encode_samples(std::span<const RawSample> samples, const Vocab& vocab,
                                          std::size_t length);

// Number of positions up to and including the last non-PAD id.
std::size_t active_length(std::span<const TokenId> ids);

}  // namespace bdlab
