// mixse/dsp.hpp

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
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixse/tensor.hpp"

namespace mixse {
namespace dsp {

/// Mono time-domain signal. Samples are dimensionless amplitudes with a
/// nominal range of [-1, 1]; nothing enforces the range, only finiteness.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  void validate() const {
    if (sample_rate <= 0) {
      throw std::invalid_argument("Waveform: sample_rate must be positive");
    }
    for (double s : samples) {
      if (!std::isfinite(s)) {
        throw std::invalid_argument("Waveform: non-finite sample");
      }
    }
  }
};

enum class Window { kSqrtHann };

/// Analysis/synthesis framing. The same sqrt-Hann window is used on both
/// sides, so the overlap-add profile is the periodic Hann window.
struct StftConfig {
  int frame_length = 512;
  int hop_length = 256;
  Window window = Window::kSqrtHann;

  void validate() const {
    if (frame_length <= 0 || hop_length <= 0) {
      throw std::invalid_argument("StftConfig: lengths must be positive");
    }
    if (hop_length > frame_length) {
      throw std::invalid_argument(
          "StftConfig: hop_length must not exceed frame_length");
    }
  }

  int num_bins() const { return frame_length / 2 + 1; }
};

/// 32 ms frames with 16 ms hop at the given rate.
inline StftConfig default_stft_config(int sample_rate) {
  StftConfig cfg;
  cfg.frame_length = sample_rate * 32 / 1000;
  cfg.hop_length = sample_rate * 16 / 1000;
  return cfg;
}

/// One-sided complex spectrogram. bins has shape [2, K, T] with channel 0
/// holding real parts and channel 1 imaginary parts, K = frame_length/2 + 1.
struct ComplexSpectrogram {
  Tensor bins;
  int sample_rate = 0;
  StftConfig config;

  int num_bins() const {
    return bins.rank() == 3 ? static_cast<int>(bins.shape()[1]) : 0;
  }
  int num_frames() const {
    return bins.rank() == 3 ? static_cast<int>(bins.shape()[2]) : 0;
  }

  double& re(int k, int n) { return bins.at(0, k, n); }
  double& im(int k, int n) { return bins.at(1, k, n); }
  double re(int k, int n) const { return bins.at(0, k, n); }
  double im(int k, int n) const { return bins.at(1, k, n); }

  void validate() const {
    if (bins.rank() != 3 || bins.shape()[0] != 2) {
      throw std::invalid_argument(
          "ComplexSpectrogram: bins must have shape [2, K, T]");
    }
    if (num_bins() != config.num_bins()) {
      throw std::invalid_argument(
          "ComplexSpectrogram: bin count does not match frame_length/2 + 1");
    }
    if (!bins.all_finite()) {
      throw std::invalid_argument("ComplexSpectrogram: non-finite bin");
    }
  }
};

/// Power-law exponent for |Y|^c compression.
struct CompressionExponent {
  double c = 0.3;

  void validate() const {
    if (!(c > 0.0) || c > 1.0) {
      throw std::invalid_argument(
          "CompressionExponent: c must lie in (0, 1]");
    }
  }
};

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 Cooley-Tukey, in place.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / len * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

/// O(n^2) fallback for frame lengths that are not a power of two.
inline void dft_naive(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> out(n);
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < n; ++i) {
      const double ang = sign * 2.0 * std::numbers::pi * k * i / n;
      acc += a[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  a = std::move(out);
}

inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
  if (is_power_of_two(static_cast<int>(a.size()))) {
    fft_radix2(a, inverse);
  } else {
    dft_naive(a, inverse);
  }
}

inline std::vector<double> make_window(const StftConfig& cfg) {
  const int n = cfg.frame_length;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = std::sin(std::numbers::pi * i / n);
  }
  return w;
}

/// Relative flatness of the squared-window overlap-add profile in the fully
/// overlapped region. Zero means exact constant overlap-add.
inline double cola_deviation(const StftConfig& cfg) {
  const std::vector<double> w = make_window(cfg);
  const int frame = cfg.frame_length;
  const int hop = cfg.hop_length;
  const int frames = 16;
  std::vector<double> ola(frame + (frames - 1) * hop, 0.0);
  for (int m = 0; m < frames; ++m) {
    for (int i = 0; i < frame; ++i) ola[m * hop + i] += w[i] * w[i];
  }
  double lo = ola[frame], hi = ola[frame];
  const int end = std::min<int>(frame + 4 * hop,
                                static_cast<int>(ola.size()) - frame);
  for (int i = frame; i < end; ++i) {
    lo = std::min(lo, ola[i]);
    hi = std::max(hi, ola[i]);
  }
  const double mid = 0.5 * (lo + hi);
  return mid > 0.0 ? (hi - lo) / mid : 1.0;
}

}  // namespace detail

inline ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  w.validate();
  const int frame = cfg.frame_length;
  const int hop = cfg.hop_length;
  const int len = static_cast<int>(w.samples.size());
  if (len < frame) {
    throw std::invalid_argument("stft: waveform shorter than one frame");
  }
  const int frames = (len - frame) / hop + 1;
  const int bins = cfg.num_bins();
  const std::vector<double> window = detail::make_window(cfg);

  ComplexSpectrogram spec;
  spec.sample_rate = w.sample_rate;
  spec.config = cfg;
  spec.bins = Tensor({2, bins, frames});

  std::vector<std::complex<double>> buf(frame);
  for (int n = 0; n < frames; ++n) {
    for (int i = 0; i < frame; ++i) {
      buf[i] = w.samples[n * hop + i] * window[i];
    }
    detail::fft(buf, false);
    for (int k = 0; k < bins; ++k) {
      spec.re(k, n) = buf[k].real();
      spec.im(k, n) = buf[k].imag();
    }
  }
  return spec;
}

inline Waveform istft(const ComplexSpectrogram& spec) {
  spec.config.validate();
  spec.validate();
  if (detail::cola_deviation(spec.config) > 1e-6) {
    throw std::invalid_argument(
        "istft: window/hop pair does not satisfy constant overlap-add");
  }
  const int frame = spec.config.frame_length;
  const int hop = spec.config.hop_length;
  const int bins = spec.num_bins();
  const int frames = spec.num_frames();
  const std::vector<double> window = detail::make_window(spec.config);

  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(frame + (frames - 1) * hop, 0.0);
  std::vector<double> norm(out.samples.size(), 0.0);

  std::vector<std::complex<double>> buf(frame);
  for (int n = 0; n < frames; ++n) {
    for (int k = 0; k < bins; ++k) {
      buf[k] = {spec.re(k, n), spec.im(k, n)};
    }
    for (int k = 1; k < bins - 1; ++k) buf[frame - k] = std::conj(buf[k]);
    detail::fft(buf, true);
    for (int i = 0; i < frame; ++i) {
      out.samples[n * hop + i] += buf[i].real() * window[i];
      norm[n * hop + i] += window[i] * window[i];
    }
  }
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = norm[i] > 1e-8 ? out.samples[i] / norm[i] : 0.0;
  }
  return out;
}

/// Magnitude raised to the power c with phase kept. The epsilon keeps the
/// zero-magnitude bin (and its gradient, in the autodiff mirror of this
/// formula) finite.
inline ComplexSpectrogram compress(const ComplexSpectrogram& spec,
                                   CompressionExponent c,
                                   double eps = 1e-12) {
  spec.validate();
  c.validate();
  if (!(eps > 0.0)) {
    throw std::invalid_argument("compress: eps must be positive");
  }
  ComplexSpectrogram out = spec;
  for (int k = 0; k < spec.num_bins(); ++k) {
    for (int n = 0; n < spec.num_frames(); ++n) {
      const double re = spec.re(k, n);
      const double im = spec.im(k, n);
      const double mag = std::hypot(re, im);
      const double gain =
          std::pow(mag + eps, c.c - 1.0) * mag / (mag + eps);
      out.re(k, n) = gain * re;
      out.im(k, n) = gain * im;
    }
  }
  return out;
}

/// Element-wise complex product S_hat = G * Y.
inline ComplexSpectrogram apply_mask(const ComplexSpectrogram& y,
                                     const ComplexSpectrogram& g) {
  y.bins.require_same_shape(g.bins, "apply_mask");
  ComplexSpectrogram out = y;
  for (int k = 0; k < y.num_bins(); ++k) {
    for (int n = 0; n < y.num_frames(); ++n) {
      const double yr = y.re(k, n), yi = y.im(k, n);
      const double gr = g.re(k, n), gi = g.im(k, n);
      out.re(k, n) = gr * yr - gi * yi;
      out.im(k, n) = gr * yi + gi * yr;
    }
  }
  return out;
}

}  // namespace dsp
}  // namespace mixse
