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

#include "bdlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "bdlab/error.hpp"

namespace bdlab {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'B', 'D', 'L', 'A', 'B', 'C', 'K', 'P'};

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header{{"config", ckpt.config}, {"tensors", nlohmann::json::array()}};
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    header["tensors"].push_back({{"name", ckpt.params.names[i]}, {"shape", ckpt.params.tensors[i].shape()}});
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : ckpt.params.tensors) {
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw ArtifactError("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing checkpoint '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("'" + path.string() + "' is not a bdlab checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint '" + path.string() + "' has unsupported version " + std::to_string(version));
  }
  const auto len = read_pod<std::uint64_t>(in);
  if (!in || len > (std::uint64_t{1} << 32)) throw DataError("corrupt checkpoint header in '" + path.string() + "'");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.config = header.at("config");
    for (const auto& entry : header.at("tensors")) {
      Tensor t(entry.at("shape").get<std::vector<std::size_t>>());
      in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
      ckpt.params.add(entry.at("name").get<std::string>(), std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt checkpoint header in '" + path.string() + "': " + e.what());
  }
  if (!in) throw DataError("truncated checkpoint '" + path.string() + "'");
  return ckpt;
}

}  // namespace bdlab
