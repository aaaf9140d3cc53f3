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

#include <cmath>
#include <vector>

#include "bdlab/kernels.hpp"
#include "bdlab/models.hpp"
#include "bdlab/rng.hpp"
#include "doctest.h"

using namespace bdlab;
namespace k = bdlab::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void require_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::fabs(a[i] - b[i]) <= tol * (1.0 + std::fabs(b[i])));
  }
}

std::vector<const k::KernelTable*> simd_tables() {
  std::vector<const k::KernelTable*> out;
  if (auto* t = k::avx2_table()) out.push_back(t);
  if (auto* t = k::neon_table()) out.push_back(t);
  return out;
}

// Restores the dispatcher choice after a test forces one.
struct IsaGuard {
  k::Isa saved = k::active().isa;
  ~IsaGuard() { k::select(saved); }
};

}  // namespace

TEST_CASE("scalar kernels against hand results") {
  const auto& s = k::scalar_table();
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  CHECK(s.dot(a, b, 3) == 12.0);
  CHECK(s.dot(a, b, 0) == 0.0);

  double y[] = {1, 1, 1};
  s.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);

  // W = [[1 2 3], [4 5 6]]
  const double w[] = {1, 2, 3, 4, 5, 6};
  double out2[] = {0.5, 0.0};
  s.gemv(w, 2, 3, a, out2);
  CHECK(out2[0] == 14.5);
  CHECK(out2[1] == 32.0);

  const double x2[] = {1, -1};
  double out3[] = {0, 0, 0};
  s.gemv_t(w, 2, 3, x2, out3);
  CHECK(out3[0] == -3.0);
  CHECK(out3[1] == -3.0);
  CHECK(out3[2] == -3.0);

  double m[] = {0, 0, 0, 0, 0, 0};
  s.ger(0.5, x2, 2, a, 3, m);
  CHECK(m[0] == 0.5);
  CHECK(m[5] == -1.5);
}

TEST_CASE("SIMD variants match the scalar reference") {
  const auto tables = simd_tables();
  if (tables.empty()) {
    MESSAGE("no SIMD variant available on this CPU; equivalence test skipped");
    return;
  }
  const auto& ref = k::scalar_table();
  Rng rng(17);
  for (const auto* t : tables) {
    CAPTURE(t->name);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 33u, 60u, 67u, 120u}) {
      CAPTURE(n);
      auto a = random_vec(rng, n), b = random_vec(rng, n);
      const double d0 = ref.dot(a.data(), b.data(), n);
      const double d1 = t->dot(a.data(), b.data(), n);
      CHECK(std::fabs(d0 - d1) <= 1e-12 * (1.0 + std::fabs(d0)));

      auto y0 = random_vec(rng, n);
      auto y1 = y0;
      ref.axpy(-0.37, a.data(), y0.data(), n);
      t->axpy(-0.37, a.data(), y1.data(), n);
      require_close(y1, y0, 1e-14);

      for (std::size_t rows : {1u, 3u, 4u, 9u, 240u}) {
        auto w = random_vec(rng, rows * n);
        auto g0 = random_vec(rng, rows);
        auto g1 = g0;
        ref.gemv(w.data(), rows, n, a.data(), g0.data());
        t->gemv(w.data(), rows, n, a.data(), g1.data());
        require_close(g1, g0, 1e-12);

        auto xr = random_vec(rng, rows);
        auto h0 = random_vec(rng, n);
        auto h1 = h0;
        ref.gemv_t(w.data(), rows, n, xr.data(), h0.data());
        t->gemv_t(w.data(), rows, n, xr.data(), h1.data());
        require_close(h1, h0, 1e-12);

        auto m0 = w;
        auto m1 = w;
        ref.ger(0.25, xr.data(), rows, a.data(), n, m0.data());
        t->ger(0.25, xr.data(), rows, a.data(), n, m1.data());
        require_close(m1, m0, 1e-14);
      }
    }
  }
}

TEST_CASE("dispatcher selection") {
  IsaGuard guard;
  CHECK(k::select(k::Isa::kScalar));
  CHECK(k::active().isa == k::Isa::kScalar);
  CHECK(k::isa_name(k::Isa::kAvx2) == "avx2");
  if (k::avx2_table() == nullptr) {
    CHECK_FALSE(k::select(k::Isa::kAvx2));
    CHECK(k::active().isa == k::Isa::kScalar);
  }
}

TEST_CASE("model forward and backward agree across kernel variants") {
  const auto tables = simd_tables();
  if (tables.empty()) return;
  IsaGuard guard;
  std::vector<TokenId> ids = {5, 9, 2, 17, 3, 3, 40, 11, 0, 0, 0, 0};

  TextCnnConfig cnn_cfg;
  cnn_cfg.vocab_size = 50;
  BiLstmConfig rnn_cfg;
  rnn_cfg.vocab_size = 50;
  rnn_cfg.hidden_size = 13;
  for (const ModelConfig& cfg : {ModelConfig(cnn_cfg), ModelConfig(rnn_cfg)}) {
    auto model = init_model(cfg, 3);
    auto run = [&](k::Isa isa) {
      REQUIRE(k::select(isa));
      auto act = model->make_activations();
      std::vector<double> logits(2);
      model->forward_sample(ids, *act, logits);
      auto grads = model->params().zeros_like();
      const double dl[] = {0.3, -0.3};
      model->backward_sample(ids, *act, dl, grads);
      std::vector<double> flat = logits;
      for (const auto& g : grads) flat.insert(flat.end(), g.data().begin(), g.data().end());
      return flat;
    };
    const auto ref = run(k::Isa::kScalar);
    for (const auto* t : tables) require_close(run(t->isa), ref, 1e-10);
  }
}
