// mixse/metrics.hpp

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
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mixse/dsp.hpp"

namespace mixse {
namespace metrics {

struct MetricReport {
  double sisdr = 0.0;
  double cd = 0.0;
  std::optional<double> pesq_proxy;
  double selection_score = 0.0;
};

/// Scale-invariant SDR in dB. The guard term is proportional to the target
/// energy, so the metric is exactly invariant to scaling the estimate and
/// tops out near 120 dB for a perfect estimate.
inline double sisdr(const dsp::Waveform& reference,
                    const dsp::Waveform& estimate) {
  reference.validate();
  estimate.validate();
  if (reference.samples.size() != estimate.samples.size()) {
    throw std::invalid_argument("sisdr: length mismatch");
  }
  const size_t n = reference.samples.size();
  double dot = 0.0, ref_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    dot += estimate.samples[i] * reference.samples[i];
    ref_energy += reference.samples[i] * reference.samples[i];
  }
  if (ref_energy <= 0.0) {
    throw std::invalid_argument("sisdr: reference is all zero");
  }
  const double alpha = dot / ref_energy;
  double target_energy = 0.0, error_energy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double t = alpha * reference.samples[i];
    const double e = t - estimate.samples[i];
    target_energy += t * t;
    error_energy += e * e;
  }
  if (target_energy == 0.0) return -300.0;  // estimate orthogonal to target
  return 10.0 *
         std::log10(target_energy /
                    (error_energy + 1e-12 * target_energy));
}

namespace detail {

inline constexpr int kCepstralOrder = 24;
inline constexpr double kSilenceFloor = 1e-10;
inline constexpr double kLogMagFloor = 1e-10;

/// Low-order real cepstrum of one windowed frame: inverse DFT of the
/// Hermitian-extended log magnitude spectrum, coefficients 0..order.
inline bool frame_cepstrum(const dsp::ComplexSpectrogram& spec, int frame,
                           std::vector<double>& ceps) {
  const int bins = spec.num_bins();
  const int n = spec.config.frame_length;
  std::vector<double> logmag(bins);
  double power = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double mag = std::hypot(spec.re(k, frame), spec.im(k, frame));
    power += mag * mag;
    logmag[k] = std::log(std::max(mag, kLogMagFloor));
  }
  if (power < kSilenceFloor) return false;
  ceps.assign(kCepstralOrder + 1, 0.0);
  for (int i = 0; i <= kCepstralOrder; ++i) {
    double acc = logmag[0] + std::cos(std::numbers::pi * i) * logmag[bins - 1];
    for (int k = 1; k < bins - 1; ++k) {
      acc += 2.0 * logmag[k] *
             std::cos(2.0 * std::numbers::pi * k * i / n);
    }
    ceps[i] = acc / n;
  }
  return true;
}

}  // namespace detail

/// Cepstral distance in the dB convention: order 24 real cepstra from log
/// magnitude spectra, 10/ln10 scaling, frames where either signal is silent
/// are skipped. Roughly the RMS log-spectral distance per frame.
inline double cepstral_distance(const dsp::Waveform& reference,
                                const dsp::Waveform& estimate,
                                bool include_c0 = true) {
  reference.validate();
  estimate.validate();
  if (reference.samples.size() != estimate.samples.size() ||
      reference.sample_rate != estimate.sample_rate) {
    throw std::invalid_argument("cepstral_distance: signal mismatch");
  }
  const dsp::StftConfig cfg =
      dsp::default_stft_config(reference.sample_rate);
  const dsp::ComplexSpectrogram ref_spec = dsp::stft(reference, cfg);
  const dsp::ComplexSpectrogram est_spec = dsp::stft(estimate, cfg);

  std::vector<double> cr, ce;
  double total = 0.0;
  int frames = 0;
  for (int nf = 0; nf < ref_spec.num_frames(); ++nf) {
    if (!detail::frame_cepstrum(ref_spec, nf, cr)) continue;
    if (!detail::frame_cepstrum(est_spec, nf, ce)) continue;
    double acc = 0.0;
    if (include_c0) {
      const double d0 = cr[0] - ce[0];
      acc += d0 * d0;
    }
    for (int i = 1; i <= detail::kCepstralOrder; ++i) {
      const double d = cr[i] - ce[i];
      acc += 2.0 * d * d;
    }
    total += (10.0 / std::log(10.0)) * std::sqrt(acc);
    ++frames;
  }
  if (frames == 0) {
    throw std::invalid_argument("cepstral_distance: no voiced frames");
  }
  return total / frames;
}

/// Eq. 7: M = PESQ + 0.2 siSDR - CD. No PESQ implementation ships here;
/// callers with a licensed implementation pass its output as pesq_term.
inline double selection_metric(double pesq_term, double sisdr_db, double cd) {
  return pesq_term + 0.2 * sisdr_db - cd;
}

inline MetricReport evaluate(const dsp::Waveform& reference,
                             const dsp::Waveform& estimate,
                             std::optional<double> pesq = std::nullopt) {
  MetricReport r;
  r.sisdr = sisdr(reference, estimate);
  r.cd = cepstral_distance(reference, estimate);
  r.pesq_proxy = pesq;
  r.selection_score = selection_metric(pesq.value_or(0.0), r.sisdr, r.cd);
  return r;
}

inline size_t best_index(const std::vector<MetricReport>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("best_index: no reports");
  }
  size_t best = 0;
  for (size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].selection_score > reports[best].selection_score) best = i;
  }
  return best;
}

inline std::string to_json_line(const std::string& utterance,
                                const MetricReport& r) {
  nlohmann::json j{{"utterance", utterance},
                   {"sisdr", r.sisdr},
                   {"cd", r.cd},
                   {"pesq", r.pesq_proxy ? nlohmann::json(*r.pesq_proxy)
                                         : nlohmann::json()},
                   {"selection_score", r.selection_score}};
  return j.dump();
}

inline std::string to_csv(
    const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::ostringstream out;
  out << "utterance,sisdr,cd,pesq,selection_score\n";
  out.precision(17);
  for (const auto& [name, r] : rows) {
    out << name << ',' << r.sisdr << ',' << r.cd << ','
        << (r.pesq_proxy ? std::to_string(*r.pesq_proxy) : "") << ','
        << r.selection_score << '\n';
  }
  return out.str();
}

}  // namespace metrics
}  // namespace mixse
