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

#include <filesystem>

#include "bdlab/tensor.hpp"
#include "json.hpp"

namespace bdlab {

// Binary checkpoint layout (little-endian):
//   8 bytes   magic "BDLABCKP"
//   u32       format version
//   u64       header length N
//   N bytes   JSON header {"config": ..., "tensors": [{"name", "shape"}, ...]}
//   f64[]     tensor data in header order
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  nlohmann::json config;
  ParameterSet params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws ArtifactError if missing, DataError if corrupt or of another version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bdlab
