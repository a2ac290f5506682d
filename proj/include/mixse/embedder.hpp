// mixse/embedder.hpp

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

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "mixse/autodiff.hpp"
#include "mixse/tensor.hpp"

namespace mixse {
namespace embedder {

enum class EmbedderKind { kLogmelProjection };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kLogmelProjection;
  int num_mels = 16;
  int dim = 24;
  std::uint64_t seed = 17;

  void validate() const {
    if (num_mels <= 0 || dim <= 0) {
      throw std::invalid_argument(
          "EmbedderConfig: num_mels and dim must be positive");
    }
  }
};

namespace detail {

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

/// Standard normals from raw mt19937_64 output. The raw engine output is
/// pinned by the standard, unlike std::normal_distribution, so the projection
/// matrix depends on the seed alone.
class SeededNormals {
 public:
  explicit SeededNormals(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1 + 1e-300)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
};

}  // namespace detail

/// Log-mel frame features followed by a fixed seeded linear projection. A
/// deterministic, differentiable stand-in for a pretrained ASR embedder.
/// Inputs are uncompressed one-sided spectra laid out [2, F, T] with channel
/// 0 real and channel 1 imaginary; output is [T, dim].
class Embedder {
 public:
  static constexpr double kLogEps = 1e-8;

  Embedder(const EmbedderConfig& cfg, int num_freq_bins, int sample_rate)
      : cfg_(cfg), num_freq_bins_(num_freq_bins) {
    cfg_.validate();
    if (num_freq_bins <= 1 || sample_rate <= 0) {
      throw std::invalid_argument("Embedder: bad bin count or sample rate");
    }
    build_filterbank(sample_rate);
    build_projection();
  }

  int dim() const { return cfg_.dim; }
  int num_mels() const { return cfg_.num_mels; }
  int num_freq_bins() const { return num_freq_bins_; }
  const Tensor& filterbank() const { return filterbank_; }
  const Tensor& projection() const { return projection_; }

  /// Differentiable path; gradient flows to the input spectrum.
  Value embed(Tape& tape, Value spec) const {
    check_shape(spec.val());
    const int freq = num_freq_bins_;
    const int frames = spec.val().shape()[2];
    Value re = reshape(slice(spec, 0, 0, 1), {freq, frames});
    Value im = reshape(slice(spec, 0, 1, 1), {freq, frames});
    Value power = add(mul(re, re), mul(im, im));
    Value fb = tape.constant(filterbank_);
    Value energy = matmul(fb, power);  // [M, T]
    Value logmel = log_e(add_scalar(energy, kLogEps));
    Value proj = tape.constant(projection_);
    return matmul(transpose2d(logmel), proj);  // [T, dim]
  }

  Tensor embed(const Tensor& spec) const {
    Tape tape;
    Value v = embed(tape, tape.constant(spec));
    return v.val();
  }

 private:
  void check_shape(const Tensor& spec) const {
    if (spec.rank() != 3 || spec.shape()[0] != 2 ||
        spec.shape()[1] != num_freq_bins_) {
      throw std::invalid_argument(
          "Embedder: expected spectrum [2, " +
          std::to_string(num_freq_bins_) + ", T], got " + spec.shape_str());
    }
  }

  void build_filterbank(int sample_rate) {
    const int m = cfg_.num_mels;
    const int f = num_freq_bins_;
    const double nyquist = sample_rate / 2.0;
    const double bin_hz = nyquist / (f - 1);

    std::vector<double> edges(m + 2);
    const double mel_max = detail::hz_to_mel(nyquist);
    for (int i = 0; i < m + 2; ++i) {
      edges[i] = detail::mel_to_hz(mel_max * i / (m + 1));
    }

    filterbank_ = Tensor({m, f}, 0.0);
    for (int i = 0; i < m; ++i) {
      const double lo = edges[i], mid = edges[i + 1], hi = edges[i + 2];
      double row_sum = 0.0;
      for (int k = 0; k < f; ++k) {
        const double hz = k * bin_hz;
        double w = 0.0;
        if (hz > lo && hz < hi) {
          w = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
        }
        filterbank_.at(i, k) = w;
        row_sum += w;
      }
      if (row_sum == 0.0) {
        // Narrow filters can fall between bins at coarse resolutions; pin
        // the filter to its nearest bin so no mel channel is dead.
        const int k = std::min<int>(
            f - 1, std::max<int>(0, static_cast<int>(std::lround(mid / bin_hz))));
        filterbank_.at(i, k) = 1.0;
      }
    }
  }

  void build_projection() {
    detail::SeededNormals gen(cfg_.seed);
    projection_ = Tensor({cfg_.num_mels, cfg_.dim});
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.num_mels));
    for (std::int64_t i = 0; i < projection_.numel(); ++i) {
      projection_.data()[i] = gen.next() * scale;
    }
  }

  EmbedderConfig cfg_;
  int num_freq_bins_ = 0;
  Tensor filterbank_;
  Tensor projection_;
};

}  // namespace embedder
}  // namespace mixse
