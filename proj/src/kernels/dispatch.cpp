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

#include <atomic>
#include <cstdlib>
#include <string>

#include "bdlab/kernels.hpp"

namespace bdlab::kernels {

#if !defined(BDLAB_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(BDLAB_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable* best_supported() {
  if (const char* env = std::getenv("BDLAB_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{best_supported()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  const KernelTable* table = nullptr;
  switch (isa) {
    case Isa::kScalar: table = &scalar_table(); break;
    case Isa::kAvx2: table = avx2_table(); break;
    case Isa::kNeon: table = neon_table(); break;
  }
  if (table == nullptr) return false;
  slot().store(table, std::memory_order_relaxed);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

}  // namespace bdlab::kernels
