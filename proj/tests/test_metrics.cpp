// tests/test_metrics.cpp

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
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "mixse/metrics.hpp"

namespace {

using mixse::dsp::Waveform;

Waveform RandomWave(int len, int sr, std::mt19937_64& rng, double amp = 0.5) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(len);
  for (auto& s : w.samples) s = dist(rng);
  return w;
}

Waveform Scaled(const Waveform& w, double g) {
  Waveform out = w;
  for (auto& s : out.samples) s *= g;
  return out;
}

}  // namespace

TEST_CASE("sisdr identity, scale invariance and zero-reference error",
          "[metrics]") {
  std::mt19937_64 rng(121);
  const Waveform ref = RandomWave(2000, 8000, rng);

  const double ident = mixse::metrics::sisdr(ref, ref);
  REQUIRE(ident >= 100.0);

  // Doubling is a power-of-two scale, so the guarded ratio is bit-identical.
  REQUIRE(mixse::metrics::sisdr(ref, Scaled(ref, 2.0)) == ident);
  REQUIRE(std::abs(mixse::metrics::sisdr(ref, Scaled(ref, 3.7)) - ident) <
          1e-6);

  std::mt19937_64 rng2(122);
  const Waveform est = RandomWave(2000, 8000, rng2);
  const double mixed = mixse::metrics::sisdr(ref, est);
  REQUIRE(std::abs(mixse::metrics::sisdr(ref, Scaled(est, 5.0)) - mixed) <
          1e-6);
  REQUIRE(std::abs(mixse::metrics::sisdr(Scaled(ref, 2.0), Scaled(est, 2.0)) -
                   mixed) < 1e-6);

  Waveform zero = ref;
  for (auto& s : zero.samples) s = 0.0;
  REQUIRE_THROWS_AS(mixse::metrics::sisdr(zero, ref), std::invalid_argument);

  Waveform short_est = ref;
  short_est.samples.resize(1000);
  REQUIRE_THROWS_AS(mixse::metrics::sisdr(ref, short_est),
                    std::invalid_argument);
}

TEST_CASE("sisdr of an orthogonal 10:1 perturbation is 10 dB", "[metrics]") {
  std::mt19937_64 rng(123);
  const int len = 4096;
  const Waveform s = RandomWave(len, 16000, rng);
  Waveform v = RandomWave(len, 16000, rng);

  // Gram-Schmidt: remove the component of v along s, then size the residual
  // so its energy is one tenth of the signal energy.
  double vs = 0.0, ss = 0.0;
  for (int i = 0; i < len; ++i) {
    vs += v.samples[i] * s.samples[i];
    ss += s.samples[i] * s.samples[i];
  }
  double nn = 0.0;
  for (int i = 0; i < len; ++i) {
    v.samples[i] -= vs / ss * s.samples[i];
    nn += v.samples[i] * v.samples[i];
  }
  const double target = std::sqrt(ss / 10.0 / nn);
  Waveform est = s;
  for (int i = 0; i < len; ++i) est.samples[i] += target * v.samples[i];

  REQUIRE(std::abs(mixse::metrics::sisdr(s, est) - 10.0) < 0.01);
}

TEST_CASE("cepstral distance identity, gain case and positivity",
          "[metrics]") {
  std::mt19937_64 rng(124);
  const Waveform ref = RandomWave(4000, 8000, rng);

  REQUIRE(mixse::metrics::cepstral_distance(ref, ref) == 0.0);

  // A pure gain moves only c0; with c0 the distance is 10 log10 2, without
  // it the distance vanishes.
  const Waveform doubled = Scaled(ref, 2.0);
  const double with_c0 = mixse::metrics::cepstral_distance(ref, doubled);
  REQUIRE(std::abs(with_c0 - 10.0 * std::log10(2.0)) < 1e-6);
  REQUIRE(mixse::metrics::cepstral_distance(ref, doubled, false) < 1e-9);

  Waveform sine = ref;
  for (int i = 0; i < 4000; ++i) {
    sine.samples[i] =
        0.4 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 8000.0);
  }
  const double cd = mixse::metrics::cepstral_distance(sine, ref);
  REQUIRE(cd > 0.1);
  REQUIRE(mixse::metrics::cepstral_distance(ref, sine) == cd);

  Waveform silent = ref;
  for (auto& s : silent.samples) s = 0.0;
  REQUIRE_THROWS_AS(mixse::metrics::cepstral_distance(silent, silent),
                    std::invalid_argument);
}

TEST_CASE("selection metric arithmetic and monotonicity", "[metrics]") {
  REQUIRE(mixse::metrics::selection_metric(0.0, 10.0, 1.0) == 1.0);
  REQUIRE(mixse::metrics::selection_metric(3.0, 5.0, 0.5) == 3.5);
  REQUIRE(mixse::metrics::selection_metric(0.0, 11.0, 1.0) >
          mixse::metrics::selection_metric(0.0, 10.0, 1.0));
}

TEST_CASE("checkpoint ranking is invariant to a constant PESQ shift",
          "[metrics]") {
  std::mt19937_64 rng(125);
  std::uniform_real_distribution<double> sd(-5.0, 15.0);
  std::uniform_real_distribution<double> cdd(0.0, 6.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<mixse::metrics::MetricReport> base(7), shifted(7);
    for (int i = 0; i < 7; ++i) {
      const double si = sd(rng), cd = cdd(rng);
      base[i].sisdr = si;
      base[i].cd = cd;
      base[i].selection_score = mixse::metrics::selection_metric(0.0, si, cd);
      shifted[i].sisdr = si;
      shifted[i].cd = cd;
      shifted[i].selection_score =
          mixse::metrics::selection_metric(1.37, si, cd);
    }
    REQUIRE(mixse::metrics::best_index(base) ==
            mixse::metrics::best_index(shifted));
  }
}

TEST_CASE("evaluate builds a consistent report and serializes", "[metrics]") {
  std::mt19937_64 rng(126);
  const Waveform ref = RandomWave(3000, 8000, rng);
  Waveform est = ref;
  for (int i = 0; i < 3000; ++i) est.samples[i] += 0.05 * ((i % 7) - 3.0);

  const mixse::metrics::MetricReport r = mixse::metrics::evaluate(ref, est);
  REQUIRE(r.selection_score ==
          mixse::metrics::selection_metric(0.0, r.sisdr, r.cd));
  REQUIRE(r.cd >= 0.0);

  const std::string line = mixse::metrics::to_json_line("utt1", r);
  const nlohmann::json parsed = nlohmann::json::parse(line);
  REQUIRE(parsed.at("utterance") == "utt1");
  REQUIRE(parsed.at("sisdr").get<double>() == r.sisdr);
  REQUIRE(parsed.at("cd").get<double>() == r.cd);
  REQUIRE(parsed.at("selection_score").get<double>() == r.selection_score);
  REQUIRE(line.find('\n') == std::string::npos);

  std::vector<std::pair<std::string, mixse::metrics::MetricReport>> rows = {
      {"a", r}, {"b", r}};
  const std::string csv = mixse::metrics::to_csv(rows);
  REQUIRE(csv.find("utterance,sisdr,cd,pesq,selection_score") == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);
}
