// include/mixse/gradcheck.hpp

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

// Finite-difference verification of the reverse-mode gradients behind every
// training objective. Each case builds one loss (Eqs. 1 through 6) on a
// small model, backpropagates once, then re-evaluates the loss twice per
// scalar parameter with central differences and reports the worst relative
// disagreement. The re-evaluation path shares no code with the backward
// pass, so agreement certifies the tape.

#ifndef MIXSE_GRADCHECK_HPP_
#define MIXSE_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixse/autodiff.hpp"
#include "mixse/embedder.hpp"
#include "mixse/losses.hpp"
#include "mixse/model.hpp"
#include "mixse/tensor.hpp"

namespace mixse {
namespace gradcheck {

struct GradCheckConfig {
  model::ModelConfig model;
  embedder::EmbedderConfig embedder;
  losses::LossConfig loss;
  int frames = 8;
  double fd_step = 1e-4;
  // Error denominator floor. The losses here sum over every bin, so |L| is
  // O(100) and a central difference resolves no better than a few ULPs of
  // L divided by 2h, about 1e-9 absolute. Gradients below the floor are
  // checked against that absolute scale rather than their own magnitude.
  double rel_floor = 1e-5;
  // A central difference that straddles a non-smooth point (leaky-ReLU
  // corner, MixIT argmin switch, compressed-magnitude kink) reports a
  // large error even though the gradient is right. Elements above this
  // threshold are re-probed at fd_step/10 and fd_step/100 and keep their
  // best result; a genuinely wrong gradient fails at every step size.
  double retry_threshold = 1e-4;
  std::uint64_t seed = 2024;

  void validate() const {
    model.validate();
    embedder.validate();
    loss.validate();
    if (frames < 1) {
      throw std::invalid_argument("GradCheckConfig: frames must be >= 1");
    }
    if (!(fd_step > 0.0) || !(rel_floor > 0.0) || !(retry_threshold > 0.0)) {
      throw std::invalid_argument(
          "GradCheckConfig: fd_step, rel_floor, and retry_threshold must be "
          "positive");
    }
  }
};

/// The reference configuration: 2 encoder layers at base width 4, two
/// parallel GRUs, 32 frequency bins, 8 frames. Small enough that central
/// differences over every scalar parameter finish in well under two
/// minutes, large enough that every code path (strided convs, GRU split,
/// skips, three decoder branches, embedder) is exercised.
inline GradCheckConfig tiny_config() {
  GradCheckConfig cfg;
  cfg.model.num_layers = 2;
  cfg.model.base_channels = 4;
  cfg.model.num_gru = 2;
  cfg.model.freq_bins = 32;
  cfg.embedder.num_mels = 8;
  cfg.embedder.dim = 6;
  return cfg;
}

struct CaseResult {
  std::string name;
  double max_rel_error = 0.0;
  std::int64_t params_checked = 0;
};

struct SuiteResult {
  std::vector<CaseResult> cases;
  double max_rel_error = 0.0;
  std::int64_t params_checked = 0;
};

namespace detail {

inline double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Tensor random_spectrum(std::vector<int> shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    t.data()[i] = dist(rng);
  }
  return t;
}

/// Same magnitude compression as dsp::compress, applied to a raw
/// [2, F, T] tensor to form the (constant) model input features.
inline Tensor compress_bins(const Tensor& bins, double c, double eps) {
  Tensor out = bins;
  const int freq = bins.dim(1);
  const int frames = bins.dim(2);
  for (int k = 0; k < freq; ++k) {
    for (int n = 0; n < frames; ++n) {
      const double re = bins.at(0, k, n);
      const double im = bins.at(1, k, n);
      const double mag = std::hypot(re, im);
      const double gain = std::pow(mag + eps, c - 1.0) * mag / (mag + eps);
      out.at(0, k, n) = gain * re;
      out.at(1, k, n) = gain * im;
    }
  }
  return out;
}

using LossBuilder = std::function<Value(Tape&, const model::TapeParams&)>;

/// One equation: reverse-mode once, then two forward evaluations per
/// scalar parameter. The params tensor is perturbed in place and restored.
inline CaseResult check_case(const std::string& name,
                             model::ModelParams& params,
                             const LossBuilder& build, double h,
                             double floor, double retry_threshold) {
  Tape t;
  const model::TapeParams tp = model::put_on_tape(t, params, true);
  Value loss = build(t, tp);
  if (loss.val().numel() != 1) {
    throw std::invalid_argument("gradcheck: loss must be scalar in case " +
                                name);
  }
  t.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(tp.ordered.size());
  for (const auto& [param_name, value] : tp.ordered) {
    (void)param_name;
    grads.push_back(value.grad());
  }

  const auto eval = [&]() {
    Tape ft;
    const model::TapeParams ftp = model::put_on_tape(ft, params, false);
    return build(ft, ftp).val().scalar();
  };

  CaseResult result;
  result.name = name;
  std::size_t gi = 0;
  params.for_each_param([&](const std::string&, Tensor& tensor) {
    const Tensor& g = grads[gi++];
    for (std::int64_t e = 0; e < tensor.numel(); ++e) {
      double* slot = &tensor.data()[e];
      const double keep = *slot;
      const double ad = g.data()[e];
      const auto probe = [&](double hh) {
        *slot = keep + hh;
        const double up = eval();
        *slot = keep - hh;
        const double down = eval();
        *slot = keep;
        return rel_err((up - down) / (2.0 * hh), ad, floor);
      };
      double rel = probe(h);
      if (rel > retry_threshold) {
        rel = std::min(rel, probe(h * 0.1));
      }
      if (rel > retry_threshold) {
        rel = std::min(rel, probe(h * 0.01));
      }
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.params_checked;
    }
  });
  return result;
}

}  // namespace detail

/// Runs all six equations against central finite differences and returns
/// the per-case and overall worst relative errors. Inputs are fixed random
/// spectra derived from cfg.seed; the mixture batch satisfies Y = X + N by
/// construction so the MixIT case runs on a valid mixture of mixtures.
inline SuiteResult run_suite(const GradCheckConfig& cfg = tiny_config()) {
  cfg.validate();
  if (cfg.model.num_decoder_branches < 3) {
    throw std::invalid_argument("gradcheck: MixIT needs 3 decoder branches");
  }

  std::mt19937_64 rng(cfg.seed);
  const std::vector<int> shape{2, cfg.model.freq_bins, cfg.frames};
  const Tensor x = detail::random_spectrum(shape, rng);
  const Tensor n = detail::random_spectrum(shape, rng);
  const Tensor s_ref = detail::random_spectrum(shape, rng);
  const losses::MixtureBatch batch = losses::MixtureBatch::Make(x, n);
  const Tensor input_feat = detail::compress_bins(
      batch.Y, cfg.model.compression_c, cfg.model.compression_eps);

  model::ModelParams params = model::init_params(cfg.model, cfg.seed);
  const embedder::Embedder emb(cfg.embedder, cfg.model.freq_bins, 16000);

  const auto separate = [&](Tape& t, const model::TapeParams& tp) {
    Value input = t.constant(input_feat);
    const std::vector<Value> masks = model::forward(t, cfg.model, tp, input);
    Value y = t.constant(batch.Y);
    return std::vector<Value>{mul_complex(masks[0], y),
                              mul_complex(masks[1], y),
                              mul_complex(masks[2], y)};
  };

  losses::LossConfig full = cfg.loss;
  if (full.alpha_e == 0.0) full.alpha_e = 0.004;
  if (full.alpha_d == 0.0) full.alpha_d = 0.0005;

  std::vector<std::pair<std::string, detail::LossBuilder>> cases;
  cases.emplace_back(
      "eq1_spectral", [&](Tape& t, const model::TapeParams& tp) {
        const std::vector<Value> est = separate(t, tp);
        return losses::spectral_loss(t, t.constant(s_ref), est[0], cfg.loss);
      });
  cases.emplace_back(
      "eq2_mixit", [&](Tape& t, const model::TapeParams& tp) {
        const std::vector<Value> est = separate(t, tp);
        return losses::mixit_loss(t, est[0], est[1], est[2], batch, cfg.loss);
      });
  cases.emplace_back(
      "eq3_embedding", [&](Tape& t, const model::TapeParams& tp) {
        const std::vector<Value> est = separate(t, tp);
        return losses::embedding_loss(t, emb.embed(t, est[0]),
                                      emb.embed(t, t.constant(batch.X)));
      });
  cases.emplace_back(
      "eq4_disentanglement", [&](Tape& t, const model::TapeParams& tp) {
        const std::vector<Value> est = separate(t, tp);
        return losses::disentanglement_loss(t, emb.embed(t, est[0]),
                                            emb.embed(t, est[1]),
                                            emb.embed(t, est[2]), full);
      });
  cases.emplace_back(
      "eq5_unsupervised_total", [&](Tape& t, const model::TapeParams& tp) {
        const std::vector<Value> est = separate(t, tp);
        return losses::unsupervised_loss(t, est[0], est[1], est[2], batch,
                                         emb, full)
            .total;
      });
  cases.emplace_back(
      "eq6_semi_supervised", [&](Tape& t, const model::TapeParams& tp) {
        const std::vector<Value> est = separate(t, tp);
        Value sup = losses::spectral_loss(t, t.constant(s_ref), est[0],
                                          cfg.loss);
        Value unsup = losses::unsupervised_loss(t, est[0], est[1], est[2],
                                                batch, emb, full)
                          .total;
        return losses::semi_supervised_loss(sup, scale(unsup, 0.5));
      });

  SuiteResult suite;
  for (const auto& [name, build] : cases) {
    CaseResult r = detail::check_case(name, params, build, cfg.fd_step,
                                      cfg.rel_floor, cfg.retry_threshold);
    suite.max_rel_error = std::max(suite.max_rel_error, r.max_rel_error);
    suite.params_checked += r.params_checked;
    suite.cases.push_back(std::move(r));
  }
  return suite;
}

}  // namespace gradcheck
}  // namespace mixse

#endif  // MIXSE_GRADCHECK_HPP_
