// mixse/datagen.hpp

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

// Synthetic corpus generation and mixing. Seeded generators stand in for real
// speech and noise corpora; a JSON manifest of WAV files is the ingestion
// alternative. All randomness flows from explicit seeds, so the full pipeline
// is reproducible from one root seed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mixse/dsp.hpp"
#include "mixse/wav.hpp"

namespace mixse {
namespace datagen {

enum class NoiseKind { kWhite, kPink, kBabbleLike, kHum };
enum class TargetPolicy { kReverberantTarget, kWindowedRirTarget, kNoisyTarget };

/// Recipe for one supervised mixture. snr_db is applied on active-speech RMS;
/// +infinity is the no-noise sentinel. An empty rir means anechoic speech.
struct MixSpec {
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  double clip_seconds = 10.0;
  std::vector<double> rir;
  TargetPolicy target_policy = TargetPolicy::kReverberantTarget;

  void validate() const {
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("MixSpec: snr_db must be finite or +inf");
    }
    if (!(clip_seconds > 0.0)) {
      throw std::invalid_argument("MixSpec: clip_seconds must be positive");
    }
    for (double tap : rir) {
      if (!std::isfinite(tap)) {
        throw std::invalid_argument("MixSpec: non-finite RIR tap");
      }
    }
  }
};

/// One training example. Supervised examples fill (input, target);
/// unsupervised examples fill (noisy_speech, extra_noise, input) with
/// input = noisy_speech + extra_noise sample-wise.
struct TrainingExample {
  enum class Kind { kSupervised, kUnsupervised };

  Kind kind = Kind::kSupervised;
  dsp::Waveform input;
  dsp::Waveform target;
  dsp::Waveform noisy_speech;
  dsp::Waveform extra_noise;

  void validate() const {
    input.validate();
    if (kind == Kind::kSupervised) {
      target.validate();
      if (target.samples.size() != input.samples.size() ||
          target.sample_rate != input.sample_rate) {
        throw std::invalid_argument(
            "TrainingExample: supervised input/target mismatch");
      }
      return;
    }
    noisy_speech.validate();
    extra_noise.validate();
    if (noisy_speech.samples.size() != input.samples.size() ||
        extra_noise.samples.size() != input.samples.size()) {
      throw std::invalid_argument(
          "TrainingExample: unsupervised component length mismatch");
    }
    for (std::size_t i = 0; i < input.samples.size(); ++i) {
      const double y = input.samples[i];
      const double sum = noisy_speech.samples[i] + extra_noise.samples[i];
      if (std::abs(y - sum) > 1e-12 * std::max(1.0, std::abs(y))) {
        throw std::invalid_argument(
            "TrainingExample: mixture is not the sample-wise sum");
      }
    }
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Decorrelates a user seed with a per-purpose stream tag so the same seed
/// fed to different generators yields unrelated sequences.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

/// Seeded draws built on raw mt19937_64 output, bypassing the
/// implementation-defined std distributions for portability.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) { return static_cast<int>(uniform() * n); }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

/// Rescales to an RMS drawn inside the contract range [0.03, 0.3].
inline void normalize_rms(std::vector<double>& x, SeededRng& rng) {
  const double target = rng.uniform(0.05, 0.2);
  const double current = rms(x);
  if (!(current > 0.0)) {
    throw std::logic_error("normalize_rms: silent generator output");
  }
  const double gain = target / current;
  for (double& v : x) v *= gain;
}

inline std::size_t clip_samples(double seconds, int sample_rate) {
  if (!(seconds > 0.0)) {
    throw std::invalid_argument("datagen: seconds must be positive");
  }
  if (sample_rate <= 0) {
    throw std::invalid_argument("datagen: sample_rate must be positive");
  }
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

/// Direct-form convolution truncated to out_len samples. Zero taps are
/// skipped, which keeps delta-like RIRs exact and cheap.
inline std::vector<double> convolve_truncated(const std::vector<double>& x,
                                              const std::vector<double>& h,
                                              std::size_t out_len) {
  std::vector<double> y(out_len, 0.0);
  for (std::size_t j = 0; j < h.size() && j < out_len; ++j) {
    if (h[j] == 0.0) continue;
    const double tap = h[j];
    const std::size_t hi = std::min(out_len, x.size() + j);
    for (std::size_t i = j; i < hi; ++i) {
      y[i] += tap * x[i - j];
    }
  }
  return y;
}

constexpr std::uint64_t kSpeechStream = 0x53504545ull;
constexpr std::uint64_t kNoiseStream = 0x4e4f4953ull;
constexpr std::uint64_t kRirStream = 0x52495221ull;
constexpr std::uint64_t kBabbleStream = 0x42414242ull;

}  // namespace detail

/// Energy-mean RMS over the frames whose energy is within 40 dB (by default)
/// of the loudest 20 ms frame. Returns 0 for silent input; the trailing
/// partial frame is ignored.
inline double active_rms(const dsp::Waveform& w, double threshold_db = -40.0) {
  w.validate();
  const int frame = std::max(1, w.sample_rate / 50);
  const std::size_t num_frames = w.samples.size() / frame;
  if (num_frames == 0) {
    throw std::invalid_argument("active_rms: waveform shorter than one frame");
  }
  std::vector<double> mean_sq(num_frames, 0.0);
  double peak = 0.0;
  for (std::size_t f = 0; f < num_frames; ++f) {
    double acc = 0.0;
    for (int i = 0; i < frame; ++i) {
      const double s = w.samples[f * frame + i];
      acc += s * s;
    }
    mean_sq[f] = acc / frame;
    peak = std::max(peak, mean_sq[f]);
  }
  if (!(peak > 0.0)) return 0.0;
  const double threshold = peak * std::pow(10.0, threshold_db / 10.0);
  double acc = 0.0;
  std::size_t active = 0;
  for (double ms : mean_sq) {
    if (ms >= threshold) {
      acc += ms;
      ++active;
    }
  }
  return std::sqrt(acc / static_cast<double>(active));
}

/// Deterministic pseudo-speech: drifting harmonic stack shaped by a
/// syllable-rate envelope, plus band-limited fricative bursts. Spectrally
/// peaked, unlike the noise generators.
inline dsp::Waveform synth_speech(std::uint64_t seed, double seconds,
                                  int sample_rate) {
  const std::size_t n = detail::clip_samples(seconds, sample_rate);
  detail::SeededRng rng(detail::derive_seed(seed, detail::kSpeechStream));

  const double f0 = rng.uniform(90.0, 220.0);
  const double drift_rate = rng.uniform(0.1, 0.5);
  const double drift_depth = rng.uniform(0.02, 0.08);
  const double drift_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double syllable_rate = rng.uniform(2.5, 4.5);
  const double syllable_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double stress_rate = rng.uniform(0.2, 0.6);
  const double stress_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  const double max_f = 0.45 * sample_rate;
  const int harmonics = std::min(
      12, static_cast<int>(max_f / (f0 * (1.0 + drift_depth))));
  std::vector<double> amp(harmonics);
  std::vector<double> phase(harmonics);
  for (int k = 0; k < harmonics; ++k) {
    amp[k] = 1.0 / (k + 1);
    phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  // Fricative burst schedule: short high-band noise segments between vowels.
  std::vector<std::pair<std::size_t, std::size_t>> bursts;
  {
    double t = rng.uniform(0.05, 0.3);
    while (t < seconds) {
      const double len = rng.uniform(0.04, 0.12);
      const std::size_t begin =
          static_cast<std::size_t>(t * sample_rate);
      const std::size_t end = std::min(
          n, static_cast<std::size_t>((t + len) * sample_rate));
      if (begin < end) bursts.emplace_back(begin, end);
      t += len + rng.uniform(0.3, 0.9);
    }
  }
  std::vector<double> white(n);
  for (double& v : white) v = rng.normal();

  dsp::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(n, 0.0);
  const double tau = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double f_t =
        f0 * (1.0 + drift_depth * std::sin(tau * drift_rate * t + drift_phase));
    double voiced = 0.0;
    for (int k = 0; k < harmonics; ++k) {
      phase[k] += tau * (k + 1) * f_t / sample_rate;
      voiced += amp[k] * std::sin(phase[k]);
    }
    const double syllable =
        0.5 * (1.0 - std::cos(tau * syllable_rate * t + syllable_phase));
    const double stress =
        0.7 + 0.3 * std::sin(tau * stress_rate * t + stress_phase);
    w.samples[i] = voiced * syllable * syllable * stress;
  }
  for (const auto& [begin, end] : bursts) {
    const double span = static_cast<double>(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const double ramp =
          0.5 * (1.0 - std::cos(tau * static_cast<double>(i - begin) / span));
      const double hp = white[i] - (i > 0 ? white[i - 1] : 0.0);
      w.samples[i] += 0.35 * ramp * hp;
    }
  }
  detail::normalize_rms(w.samples, rng);
  return w;
}

/// Deterministic noise: white (flat), pink (1/f tilt), babble_like (a crowd
/// of pseudo-speakers), or hum (mains tone plus odd harmonics).
inline dsp::Waveform synth_noise(std::uint64_t seed, double seconds,
                                 int sample_rate, NoiseKind kind,
                                 double mains_hz = 50.0) {
  const std::size_t n = detail::clip_samples(seconds, sample_rate);
  detail::SeededRng rng(detail::derive_seed(
      seed, detail::kNoiseStream + static_cast<std::uint64_t>(kind)));

  dsp::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(n, 0.0);

  switch (kind) {
    case NoiseKind::kWhite: {
      for (double& v : w.samples) v = rng.normal();
      break;
    }
    case NoiseKind::kPink: {
      // Paul Kellet's economy pink filter.
      double b0 = 0.0, b1 = 0.0, b2 = 0.0;
      for (double& v : w.samples) {
        const double u = rng.normal();
        b0 = 0.99765 * b0 + u * 0.0990460;
        b1 = 0.96300 * b1 + u * 0.2965164;
        b2 = 0.57000 * b2 + u * 1.0526913;
        v = b0 + b1 + b2 + u * 0.1848;
      }
      break;
    }
    case NoiseKind::kBabbleLike: {
      for (int speaker = 0; speaker < 6; ++speaker) {
        const dsp::Waveform s = synth_speech(
            detail::derive_seed(seed, detail::kBabbleStream + speaker),
            seconds, sample_rate);
        for (std::size_t i = 0; i < n; ++i) w.samples[i] += s.samples[i];
      }
      break;
    }
    case NoiseKind::kHum: {
      if (!(mains_hz > 0.0) || mains_hz >= 0.5 * sample_rate) {
        throw std::invalid_argument("synth_noise: mains_hz out of range");
      }
      const double tau = 2.0 * std::numbers::pi;
      const double harmonic_amp[] = {1.0, 0.3, 0.12};
      double harmonic_phase[3];
      for (double& p : harmonic_phase) p = rng.uniform(0.0, tau);
      const double wobble_phase = rng.uniform(0.0, tau);
      std::vector<double> floor_noise(n);
      for (double& v : floor_noise) v = rng.normal();
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        const double wobble = 1.0 + 0.05 * std::sin(tau * 0.5 * t + wobble_phase);
        double v = 0.0;
        for (int h = 0; h < 3; ++h) {
          const double f = mains_hz * (2 * h + 1);
          if (f >= 0.5 * sample_rate) break;
          v += harmonic_amp[h] * std::sin(tau * f * t + harmonic_phase[h]);
        }
        w.samples[i] = wobble * v + 0.005 * floor_noise[i];
      }
      break;
    }
  }
  detail::normalize_rms(w.samples, rng);
  return w;
}

/// Synthetic room impulse response: a unit direct path 2 ms in, followed by
/// an exponentially decaying noise tail with the given T60.
inline std::vector<double> synth_rir(std::uint64_t seed, int sample_rate,
                                     double t60_seconds = 0.3,
                                     double seconds = 0.25) {
  const std::size_t n = detail::clip_samples(seconds, sample_rate);
  if (!(t60_seconds > 0.0)) {
    throw std::invalid_argument("synth_rir: t60 must be positive");
  }
  detail::SeededRng rng(detail::derive_seed(seed, detail::kRirStream));
  std::vector<double> rir(n, 0.0);
  const std::size_t direct = std::min(
      n - 1, static_cast<std::size_t>(std::llround(0.002 * sample_rate)));
  rir[direct] = 1.0;
  for (std::size_t i = direct + 1; i < n; ++i) {
    const double t = static_cast<double>(i - direct) / sample_rate;
    rir[i] = 0.12 * rng.normal() * std::pow(10.0, -3.0 * t / t60_seconds);
  }
  return rir;
}

/// Early-reflection window: keeps the RIR from its start through 50 ms (by
/// default) past the direct-path peak, discarding the late tail.
inline std::vector<double> windowed_rir(const std::vector<double>& rir,
                                        int sample_rate,
                                        double window_seconds = 0.05) {
  if (rir.empty()) {
    throw std::invalid_argument("windowed_rir: empty RIR");
  }
  if (!(window_seconds > 0.0)) {
    throw std::invalid_argument("windowed_rir: window must be positive");
  }
  std::size_t peak = 0;
  for (std::size_t i = 1; i < rir.size(); ++i) {
    if (std::abs(rir[i]) > std::abs(rir[peak])) peak = i;
  }
  const std::size_t keep = std::min(
      rir.size(),
      peak + static_cast<std::size_t>(std::llround(window_seconds * sample_rate)));
  return std::vector<double>(rir.begin(), rir.begin() + keep);
}

/// Builds a supervised example: optional RIR on the speech, noise scaled so
/// the active-speech SNR matches spec.snr_db, target chosen by policy.
inline TrainingExample mix(const dsp::Waveform& speech,
                           const dsp::Waveform& noise, const MixSpec& spec) {
  spec.validate();
  speech.validate();
  noise.validate();
  if (speech.sample_rate != noise.sample_rate) {
    throw std::invalid_argument("mix: sample-rate mismatch");
  }
  const std::size_t n =
      detail::clip_samples(spec.clip_seconds, speech.sample_rate);
  if (speech.samples.size() < n || noise.samples.size() < n) {
    throw std::invalid_argument("mix: clip_seconds exceeds source length");
  }

  dsp::Waveform reverberant;
  reverberant.sample_rate = speech.sample_rate;
  if (spec.rir.empty()) {
    reverberant.samples.assign(speech.samples.begin(),
                               speech.samples.begin() + n);
  } else {
    reverberant.samples =
        detail::convolve_truncated(speech.samples, spec.rir, n);
  }

  const double speech_rms = active_rms(reverberant);
  if (!(speech_rms > 0.0)) {
    throw std::invalid_argument("mix: speech has no active frames");
  }

  double gain = 0.0;
  if (!std::isinf(spec.snr_db)) {
    const double noise_rms = detail::rms(
        std::vector<double>(noise.samples.begin(), noise.samples.begin() + n));
    if (!(noise_rms > 0.0)) {
      throw std::invalid_argument("mix: noise is silent");
    }
    gain = speech_rms / (noise_rms * std::pow(10.0, spec.snr_db / 20.0));
  }

  TrainingExample ex;
  ex.kind = TrainingExample::Kind::kSupervised;
  ex.input.sample_rate = speech.sample_rate;
  ex.input.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ex.input.samples[i] = reverberant.samples[i] + gain * noise.samples[i];
  }

  switch (spec.target_policy) {
    case TargetPolicy::kReverberantTarget:
      ex.target = reverberant;
      break;
    case TargetPolicy::kWindowedRirTarget:
      if (spec.rir.empty()) {
        ex.target = reverberant;
      } else {
        ex.target.sample_rate = speech.sample_rate;
        ex.target.samples = detail::convolve_truncated(
            speech.samples, windowed_rir(spec.rir, speech.sample_rate), n);
      }
      break;
    case TargetPolicy::kNoisyTarget:
      ex.target = ex.input;
      break;
  }
  ex.validate();
  return ex;
}

/// Wraps a noisy recording and an extra noise clip into a MixIT example with
/// the mixture of mixtures formed sample-wise.
inline TrainingExample make_unsupervised(const dsp::Waveform& noisy_speech,
                                         const dsp::Waveform& extra_noise) {
  noisy_speech.validate();
  extra_noise.validate();
  if (noisy_speech.sample_rate != extra_noise.sample_rate) {
    throw std::invalid_argument("make_unsupervised: sample-rate mismatch");
  }
  if (noisy_speech.samples.size() != extra_noise.samples.size()) {
    throw std::invalid_argument("make_unsupervised: length mismatch");
  }
  TrainingExample ex;
  ex.kind = TrainingExample::Kind::kUnsupervised;
  ex.noisy_speech = noisy_speech;
  ex.extra_noise = extra_noise;
  ex.input.sample_rate = noisy_speech.sample_rate;
  ex.input.samples.resize(noisy_speech.samples.size());
  for (std::size_t i = 0; i < ex.input.samples.size(); ++i) {
    ex.input.samples[i] = noisy_speech.samples[i] + extra_noise.samples[i];
  }
  ex.validate();
  return ex;
}

enum class ManifestRole { kSpeech, kNoise, kNoisySpeech };

inline std::string role_to_string(ManifestRole role) {
  switch (role) {
    case ManifestRole::kSpeech: return "speech";
    case ManifestRole::kNoise: return "noise";
    case ManifestRole::kNoisySpeech: return "noisy_speech";
  }
  throw std::logic_error("role_to_string: bad role");
}

inline ManifestRole role_from_string(const std::string& s) {
  if (s == "speech") return ManifestRole::kSpeech;
  if (s == "noise") return ManifestRole::kNoise;
  if (s == "noisy_speech") return ManifestRole::kNoisySpeech;
  throw std::runtime_error("manifest: unknown role '" + s + "'");
}

/// One corpus clip. rir_path optionally names a WAV holding the impulse
/// response recorded with this clip.
struct ManifestEntry {
  std::string path;
  ManifestRole role = ManifestRole::kSpeech;
  std::string rir_path;
};

inline void write_manifest(const std::string& path,
                           const std::vector<ManifestEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json item;
    item["path"] = e.path;
    item["role"] = role_to_string(e.role);
    if (!e.rir_path.empty()) item["rir_path"] = e.rir_path;
    arr.push_back(std::move(item));
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_manifest: cannot open " + path);
  }
  out << arr.dump(2) << "\n";
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_manifest: cannot open " + path);
  }
  const nlohmann::json arr = nlohmann::json::parse(in, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) {
    throw std::runtime_error("read_manifest: " + path +
                             " is not a JSON array");
  }
  std::vector<ManifestEntry> entries;
  entries.reserve(arr.size());
  for (const auto& item : arr) {
    if (!item.is_object()) {
      throw std::runtime_error("read_manifest: entry is not an object");
    }
    for (const auto& [key, value] : item.items()) {
      (void)value;
      if (key != "path" && key != "role" && key != "rir_path") {
        throw std::runtime_error("read_manifest: unknown key '" + key + "'");
      }
    }
    if (!item.contains("path") || !item["path"].is_string() ||
        !item.contains("role") || !item["role"].is_string()) {
      throw std::runtime_error(
          "read_manifest: entries need string 'path' and 'role'");
    }
    ManifestEntry e;
    e.path = item["path"].get<std::string>();
    e.role = role_from_string(item["role"].get<std::string>());
    if (item.contains("rir_path")) {
      if (!item["rir_path"].is_string()) {
        throw std::runtime_error("read_manifest: rir_path must be a string");
      }
      e.rir_path = item["rir_path"].get<std::string>();
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

enum class DataSource { kSynthetic, kManifest };
enum class BatchMode { kSupervised, kUnsupervised, kSemiSupervised };

/// Stream configuration. epoch_size counts examples per epoch (paper: 5120;
/// desk default 128) and must divide evenly into batches. pool_size > 0
/// freezes each sub-stream to that many distinct examples, cycled in order.
struct DataConfig {
  int sample_rate = 16000;
  double clip_seconds = 10.0;
  double snr_min_db = -5.0;
  double snr_max_db = 20.0;
  TargetPolicy target_policy = TargetPolicy::kReverberantTarget;
  bool use_rir = false;
  int batch_size = 4;
  int epoch_size = 128;
  int pool_size = 0;
  DataSource source = DataSource::kSynthetic;
  std::string manifest_path;

  void validate() const {
    if (sample_rate <= 0) {
      throw std::invalid_argument("DataConfig: sample_rate must be positive");
    }
    if (!(clip_seconds > 0.0)) {
      throw std::invalid_argument("DataConfig: clip_seconds must be positive");
    }
    if (!std::isfinite(snr_min_db) || !std::isfinite(snr_max_db) ||
        snr_min_db > snr_max_db) {
      throw std::invalid_argument("DataConfig: bad SNR range");
    }
    if (batch_size <= 0 || epoch_size <= 0 || epoch_size % batch_size != 0) {
      throw std::invalid_argument(
          "DataConfig: epoch_size must be a positive multiple of batch_size");
    }
    if (pool_size < 0) {
      throw std::invalid_argument("DataConfig: pool_size must not be negative");
    }
    if (source == DataSource::kManifest && manifest_path.empty()) {
      throw std::invalid_argument(
          "DataConfig: manifest source needs manifest_path");
    }
  }
};

/// One step's worth of examples. Semi-supervised batches fill both vectors.
struct Batch {
  std::vector<TrainingExample> supervised;
  std::vector<TrainingExample> unsupervised;
};

/// Deterministic batch stream. Two iterators built from equal (config, mode,
/// seed) yield identical sequences; batches are immutable once returned.
class BatchIterator {
 public:
  BatchIterator(const DataConfig& config, BatchMode mode, std::uint64_t seed)
      : config_(config), mode_(mode), root_seed_(seed) {
    config_.validate();
    if (config_.source == DataSource::kManifest) {
      load_pools();
    }
    check_pools();
  }

  int steps_per_epoch() const { return config_.epoch_size / config_.batch_size; }
  std::int64_t step() const { return step_; }
  std::int64_t epoch() const { return step_ / steps_per_epoch(); }

  Batch next() {
    Batch batch;
    if (mode_ != BatchMode::kUnsupervised) {
      batch.supervised.reserve(config_.batch_size);
      for (int i = 0; i < config_.batch_size; ++i) {
        batch.supervised.push_back(
            cached_example(supervised_cache_, supervised_counter_++, true));
      }
    }
    if (mode_ != BatchMode::kSupervised) {
      batch.unsupervised.reserve(config_.batch_size);
      for (int i = 0; i < config_.batch_size; ++i) {
        batch.unsupervised.push_back(
            cached_example(unsupervised_cache_, unsupervised_counter_++, false));
      }
    }
    ++step_;
    return batch;
  }

 private:
  struct PoolClip {
    dsp::Waveform wave;
    std::vector<double> rir;
  };

  detail::SeededRng example_rng(std::uint64_t index) const {
    return detail::SeededRng(
        detail::derive_seed(root_seed_, detail::splitmix64(index)));
  }

  TrainingExample cached_example(
      std::unordered_map<std::uint64_t, TrainingExample>& cache,
      std::uint64_t counter, bool supervised) {
    const std::uint64_t index =
        config_.pool_size > 0
            ? counter % static_cast<std::uint64_t>(config_.pool_size)
            : counter;
    if (config_.pool_size > 0) {
      const auto it = cache.find(index);
      if (it != cache.end()) return it->second;
    }
    TrainingExample ex = supervised ? make_supervised(index)
                                    : make_unsupervised_example(index);
    if (config_.pool_size > 0) cache.emplace(index, ex);
    return ex;
  }

  NoiseKind pick_kind(detail::SeededRng& rng) const {
    static constexpr NoiseKind kKinds[] = {NoiseKind::kWhite, NoiseKind::kPink,
                                           NoiseKind::kBabbleLike,
                                           NoiseKind::kHum};
    return kKinds[rng.uniform_int(4)];
  }

  TrainingExample make_supervised(std::uint64_t index) {
    detail::SeededRng rng = example_rng(index);
    MixSpec spec;
    spec.seed = index;
    spec.snr_db = rng.uniform(config_.snr_min_db, config_.snr_max_db);
    spec.clip_seconds = config_.clip_seconds;
    spec.target_policy = config_.target_policy;

    if (config_.source == DataSource::kSynthetic) {
      const dsp::Waveform speech =
          synth_speech(rng.raw(), config_.clip_seconds, config_.sample_rate);
      const NoiseKind kind = pick_kind(rng);
      const dsp::Waveform noise = synth_noise(
          rng.raw(), config_.clip_seconds, config_.sample_rate, kind);
      if (config_.use_rir) {
        spec.rir = synth_rir(rng.raw(), config_.sample_rate);
      }
      return mix(speech, noise, spec);
    }
    const PoolClip& speech = speech_pool_[rng.uniform_int(
        static_cast<int>(speech_pool_.size()))];
    const PoolClip& noise =
        noise_pool_[rng.uniform_int(static_cast<int>(noise_pool_.size()))];
    if (config_.use_rir && !speech.rir.empty()) {
      spec.rir = speech.rir;
    }
    return mix(speech.wave, noise.wave, spec);
  }

  TrainingExample make_unsupervised_example(std::uint64_t index) {
    detail::SeededRng rng = example_rng(index);
    const double snr_x = rng.uniform(config_.snr_min_db, config_.snr_max_db);
    const double snr_n = rng.uniform(config_.snr_min_db, config_.snr_max_db);

    dsp::Waveform noisy;
    if (config_.source == DataSource::kSynthetic) {
      MixSpec spec;
      spec.seed = index;
      spec.snr_db = snr_x;
      spec.clip_seconds = config_.clip_seconds;
      spec.target_policy = TargetPolicy::kNoisyTarget;
      const dsp::Waveform speech =
          synth_speech(rng.raw(), config_.clip_seconds, config_.sample_rate);
      const dsp::Waveform noise = synth_noise(
          rng.raw(), config_.clip_seconds, config_.sample_rate, pick_kind(rng));
      if (config_.use_rir) {
        spec.rir = synth_rir(rng.raw(), config_.sample_rate);
      }
      noisy = mix(speech, noise, spec).input;
    } else {
      noisy = noisy_pool_[rng.uniform_int(
                              static_cast<int>(noisy_pool_.size()))]
                  .wave;
    }

    dsp::Waveform extra;
    if (config_.source == DataSource::kSynthetic) {
      extra = synth_noise(rng.raw(), config_.clip_seconds, config_.sample_rate,
                          pick_kind(rng));
    } else {
      extra = noise_pool_[rng.uniform_int(
                              static_cast<int>(noise_pool_.size()))]
                  .wave;
    }
    const double noisy_rms = active_rms(noisy);
    const double extra_rms = detail::rms(extra.samples);
    if (!(noisy_rms > 0.0) || !(extra_rms > 0.0)) {
      throw std::invalid_argument("batch_iter: silent unsupervised component");
    }
    const double gain =
        noisy_rms / (extra_rms * std::pow(10.0, snr_n / 20.0));
    for (double& v : extra.samples) v *= gain;
    return make_unsupervised(noisy, extra);
  }

  dsp::Waveform fit_clip(const dsp::Waveform& w) const {
    const std::size_t n =
        detail::clip_samples(config_.clip_seconds, config_.sample_rate);
    if (w.samples.empty()) {
      throw std::invalid_argument("batch_iter: empty manifest clip");
    }
    dsp::Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = w.samples[i % w.samples.size()];
    }
    return out;
  }

  void load_pools() {
    const auto entries = read_manifest(config_.manifest_path);
    for (const auto& e : entries) {
      PoolClip clip;
      clip.wave = wav::read_wav(e.path);
      if (clip.wave.sample_rate != config_.sample_rate) {
        throw std::invalid_argument("batch_iter: " + e.path +
                                    " sample rate differs from config");
      }
      clip.wave = fit_clip(clip.wave);
      if (!e.rir_path.empty()) {
        clip.rir = wav::read_wav(e.rir_path).samples;
      }
      switch (e.role) {
        case ManifestRole::kSpeech: speech_pool_.push_back(std::move(clip)); break;
        case ManifestRole::kNoise: noise_pool_.push_back(std::move(clip)); break;
        case ManifestRole::kNoisySpeech:
          noisy_pool_.push_back(std::move(clip));
          break;
      }
    }
  }

  void check_pools() const {
    if (config_.source == DataSource::kSynthetic) return;
    const bool wants_supervised = mode_ != BatchMode::kUnsupervised;
    const bool wants_unsupervised = mode_ != BatchMode::kSupervised;
    if (wants_supervised && speech_pool_.empty()) {
      throw std::invalid_argument("batch_iter: manifest has no speech clips");
    }
    if (wants_unsupervised && noisy_pool_.empty()) {
      throw std::invalid_argument(
          "batch_iter: manifest has no noisy_speech clips");
    }
    if (noise_pool_.empty()) {
      throw std::invalid_argument("batch_iter: manifest has no noise clips");
    }
  }

  DataConfig config_;
  BatchMode mode_;
  std::uint64_t root_seed_ = 0;
  std::int64_t step_ = 0;
  std::uint64_t supervised_counter_ = 0;
  std::uint64_t unsupervised_counter_ = 0;
  std::unordered_map<std::uint64_t, TrainingExample> supervised_cache_;
  std::unordered_map<std::uint64_t, TrainingExample> unsupervised_cache_;
  std::vector<PoolClip> speech_pool_;
  std::vector<PoolClip> noise_pool_;
  std::vector<PoolClip> noisy_pool_;
};

}  // namespace datagen
}  // namespace mixse
