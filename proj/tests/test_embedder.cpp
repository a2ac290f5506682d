// tests/test_embedder.cpp

// Copyright 2026  The mixse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mixse/autodiff.hpp"
#include "mixse/embedder.hpp"
#include "support/test_util.hpp"

namespace {

using mixse::Tensor;
using mixse::Tape;
using mixse::Value;
using mixse::embedder::Embedder;
using mixse::embedder::EmbedderConfig;

Tensor RandomSpectrum(int freq, int frames, std::mt19937_64& rng,
                      double lo = -1.0, double hi = 1.0) {
  return mixse::testing::random_tensor({2, freq, frames}, rng, lo, hi);
}

}  // namespace

TEST_CASE("embedder is deterministic for equal config", "[embedder]") {
  std::mt19937_64 rng(11);
  const Tensor spec = RandomSpectrum(32, 6, rng);
  EmbedderConfig cfg;
  cfg.num_mels = 16;
  cfg.dim = 24;
  cfg.seed = 42;
  const Embedder a(cfg, 32, 8000);
  const Embedder b(cfg, 32, 8000);
  const Tensor ea = a.embed(spec);
  const Tensor eb = b.embed(spec);
  const Tensor ea2 = a.embed(spec);
  REQUIRE(ea.shape() == std::vector<int>{6, 24});
  for (int64_t i = 0; i < ea.numel(); ++i) {
    REQUIRE(ea.data()[i] == eb.data()[i]);
    REQUIRE(ea.data()[i] == ea2.data()[i]);
  }

  EmbedderConfig other = cfg;
  other.seed = 43;
  const Tensor ec = Embedder(other, 32, 8000).embed(spec);
  double diff = 0.0;
  for (int64_t i = 0; i < ea.numel(); ++i) {
    diff += std::abs(ea.data()[i] - ec.data()[i]);
  }
  REQUIRE(diff > 1e-3);
}

TEST_CASE("zero spectrum embeds every frame to the same constant vector",
          "[embedder]") {
  EmbedderConfig cfg;
  cfg.num_mels = 8;
  cfg.dim = 5;
  cfg.seed = 7;
  const Embedder emb(cfg, 33, 8000);
  const Tensor spec({2, 33, 4}, 0.0);
  const Tensor e = emb.embed(spec);

  // log(eps) * column sums of the projection matrix.
  const Tensor& proj = emb.projection();
  const double log_eps = std::log(1e-8);
  for (int n = 0; n < 4; ++n) {
    for (int d = 0; d < 5; ++d) {
      double expected = 0.0;
      for (int m = 0; m < 8; ++m) expected += proj.at(m, d);
      expected *= log_eps;
      REQUIRE(mixse::testing::rel_err(e.at(n, d), expected) < 1e-12);
    }
  }
}

TEST_CASE("scaling magnitudes by 10 shifts embeddings by log(100)*proj",
          "[embedder]") {
  std::mt19937_64 rng(23);
  EmbedderConfig cfg;
  cfg.num_mels = 12;
  cfg.dim = 9;
  cfg.seed = 3;
  const Embedder emb(cfg, 65, 16000);
  // Keep magnitudes well away from the log epsilon.
  Tensor spec = RandomSpectrum(65, 5, rng, 0.5, 1.5);
  Tensor scaled = spec;
  scaled *= 10.0;

  const Tensor e0 = emb.embed(spec);
  const Tensor e1 = emb.embed(scaled);
  const Tensor& proj = emb.projection();
  const double shift_scale = std::log(100.0);
  for (int n = 0; n < 5; ++n) {
    for (int d = 0; d < 9; ++d) {
      double shift = 0.0;
      for (int m = 0; m < 12; ++m) shift += proj.at(m, d);
      shift *= shift_scale;
      REQUIRE(std::abs(e1.at(n, d) - e0.at(n, d) - shift) < 1e-5);
    }
  }
}

TEST_CASE("frame locality: touching frame n moves only embedding row n",
          "[embedder]") {
  std::mt19937_64 rng(31);
  EmbedderConfig cfg;
  cfg.num_mels = 10;
  cfg.dim = 6;
  cfg.seed = 5;
  const Embedder emb(cfg, 40, 8000);
  const Tensor spec = RandomSpectrum(40, 7, rng);
  Tensor poked = spec;
  poked.at(0, 13, 3) += 0.5;
  poked.at(1, 20, 3) -= 0.25;

  const Tensor e0 = emb.embed(spec);
  const Tensor e1 = emb.embed(poked);
  double row3 = 0.0;
  for (int n = 0; n < 7; ++n) {
    for (int d = 0; d < 6; ++d) {
      const double delta = std::abs(e1.at(n, d) - e0.at(n, d));
      if (n == 3) {
        row3 += delta;
      } else {
        REQUIRE(delta == 0.0);
      }
    }
  }
  REQUIRE(row3 > 1e-6);
}

TEST_CASE("differentiable path matches plain path and finite differences",
          "[embedder]") {
  std::mt19937_64 rng(47);
  EmbedderConfig cfg;
  cfg.num_mels = 8;
  cfg.dim = 7;
  cfg.seed = 13;
  const Embedder emb(cfg, 24, 8000);
  const Tensor spec = RandomSpectrum(24, 4, rng, 0.4, 1.2);

  const Tensor plain = emb.embed(spec);
  {
    Tape t;
    Value x = t.constant(spec);
    Value e = emb.embed(t, x);
    const Tensor& via_tape = e.val();
    REQUIRE(via_tape.shape() == plain.shape());
    for (int64_t i = 0; i < plain.numel(); ++i) {
      REQUIRE(via_tape.data()[i] == plain.data()[i]);
    }
  }

  auto f = [&](const Tensor& x) {
    Tape t;
    Value v = t.constant(x);
    Value loss = mixse::mean(emb.embed(t, v));
    return loss.val().data()[0];
  };
  Tensor analytic;
  {
    Tape t;
    Value x = t.leaf(spec);
    Value loss = mixse::mean(emb.embed(t, x));
    t.backward(loss);
    analytic = x.grad();
  }
  REQUIRE(mixse::testing::max_fd_rel_err(f, spec, analytic, 1e-5) < 1e-3);
}

TEST_CASE("embedder rejects mismatched spectra", "[embedder]") {
  EmbedderConfig cfg;
  const Embedder emb(cfg, 32, 8000);
  REQUIRE_THROWS_AS(emb.embed(Tensor({2, 31, 4}, 0.1)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(emb.embed(Tensor({3, 32, 4}, 0.1)),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(emb.embed(Tensor({32, 4}, 0.1)), std::invalid_argument);

  EmbedderConfig bad;
  bad.num_mels = 0;
  REQUIRE_THROWS_AS(Embedder(bad, 32, 8000), std::invalid_argument);
}

TEST_CASE("every mel filter has positive weight", "[embedder]") {
  // Small bin counts can starve low filters; construction must repair them.
  for (int freq : {16, 24, 32, 129}) {
    EmbedderConfig cfg;
    cfg.num_mels = 16;
    const Embedder emb(cfg, freq, 8000);
    const Tensor& fb = emb.filterbank();
    REQUIRE(fb.shape() == std::vector<int>{16, freq});
    for (int m = 0; m < 16; ++m) {
      double row = 0.0;
      for (int k = 0; k < freq; ++k) row += fb.at(m, k);
      REQUIRE(row > 0.0);
    }
  }
}
