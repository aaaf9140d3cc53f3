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

// Dense double-precision inner loops used by the models. Every kernel has a
// scalar reference implementation; vectorized variants (AVX2+FMA on x86-64,
// NEON on AArch64) are selected once at runtime and must agree with the
// reference to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace bdlab::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += W x, W row-major rows x cols
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y += W^T x, W row-major rows x cols
  void (*gemv_t)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // A += alpha * x y^T, A row-major rows x cols
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y,
              std::size_t cols, double* a);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// The table used by dot()/axpy()/... below. Chosen on first use: the best
// supported variant, unless BDLAB_SIMD=scalar|avx2|neon overrides it.
const KernelTable& active();

// Forces a variant; returns false (and changes nothing) if unsupported.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> y) {
  active().gemv(w.data(), rows, cols, x.data(), y.data());
}

inline void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
                   std::span<const double> x, std::span<double> y) {
  active().gemv_t(w.data(), rows, cols, x.data(), y.data());
}

inline void ger(double alpha, std::span<const double> x, std::span<const double> y,
                std::span<double> a) {
  active().ger(alpha, x.data(), x.size(), y.data(), y.size(), a.data());
}

}  // namespace bdlab::kernels
