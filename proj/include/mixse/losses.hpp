// mixse/losses.hpp

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

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixse/autodiff.hpp"
#include "mixse/dsp.hpp"
#include "mixse/embedder.hpp"
#include "mixse/tensor.hpp"

namespace mixse {
namespace losses {

struct LossConfig {
  double lambda = 0.3;
  dsp::CompressionExponent c{0.3};
  double alpha_e = 0.004;
  double alpha_d = 0.0005;
  double eps = 1e-12;
  // Eq. 4 leaves the dot product un-normalized; the raw form is scale-gameable
  // so per-sequence L2 normalization is the default.
  bool normalized_disentanglement = true;

  void validate() const {
    if (lambda < 0.0 || lambda > 1.0) {
      throw std::invalid_argument("LossConfig: lambda must lie in [0, 1]");
    }
    c.validate();
    if (alpha_e < 0.0 || alpha_d < 0.0) {
      throw std::invalid_argument("LossConfig: alpha weights must be >= 0");
    }
    if (!(eps > 0.0)) {
      throw std::invalid_argument("LossConfig: eps must be positive");
    }
  }
};

/// One unsupervised training item: noisy recording X, extra noise N, and the
/// network input Y = X + N, all as [2, F, T] spectra.
struct MixtureBatch {
  Tensor X;
  Tensor N;
  Tensor Y;

  static MixtureBatch Make(const Tensor& x, const Tensor& n) {
    x.require_same_shape(n, "MixtureBatch");
    MixtureBatch b;
    b.X = x;
    b.N = n;
    b.Y = x;
    b.Y += n;
    return b;
  }

  void validate() const {
    X.require_same_shape(N, "MixtureBatch");
    X.require_same_shape(Y, "MixtureBatch");
    for (std::int64_t i = 0; i < Y.numel(); ++i) {
      const double want = X.data()[i] + N.data()[i];
      if (std::abs(Y.data()[i] - want) > 1e-12) {
        throw std::invalid_argument("MixtureBatch: Y != X + N");
      }
    }
  }
};

namespace detail {

struct CompressedSpec {
  Value re;     // [F, T]
  Value im;     // [F, T]
  Value mag_c;  // [F, T], the compressed magnitude |y|^c
};

/// Differentiable |y|^c * y / |y| with the same gain formula as
/// dsp::compress. The magnitude is sqrt(re^2 + im^2 + eps^2) so its gradient
/// stays finite at silent bins.
inline CompressedSpec compress_on_tape(Tape&, Value spec,
                                       const LossConfig& cfg) {
  const Tensor& v = spec.val();
  if (v.rank() != 3 || v.shape()[0] != 2) {
    throw std::invalid_argument("compress_on_tape: expected [2, F, T], got " +
                                v.shape_str());
  }
  const int freq = v.shape()[1];
  const int frames = v.shape()[2];
  Value re = reshape(slice(spec, 0, 0, 1), {freq, frames});
  Value im = reshape(slice(spec, 0, 1, 1), {freq, frames});
  Value mag = pow_scalar(
      add_scalar(add(mul(re, re), mul(im, im)), cfg.eps * cfg.eps), 0.5);
  Value gain = mul(mag, pow_scalar(add_scalar(mag, cfg.eps), cfg.c.c - 2.0));
  CompressedSpec out;
  out.re = mul(gain, re);
  out.im = mul(gain, im);
  out.mag_c = mul(gain, mag);
  return out;
}

}  // namespace detail

/// Eq. 1: (1-lambda) * sum (|S|^c - |S_hat|^c)^2
///        + lambda * sum ||S|^c S/|S| - |S_hat|^c S_hat/|S_hat||^2.
inline Value spectral_loss(Tape& t, Value s, Value s_hat,
                           const LossConfig& cfg) {
  cfg.validate();
  s.val().require_same_shape(s_hat.val(), "spectral_loss");
  const detail::CompressedSpec a = detail::compress_on_tape(t, s, cfg);
  const detail::CompressedSpec b = detail::compress_on_tape(t, s_hat, cfg);
  Value dmag = sub(a.mag_c, b.mag_c);
  Value mag_term = sum(mul(dmag, dmag));
  Value dre = sub(a.re, b.re);
  Value dim = sub(a.im, b.im);
  Value cplx_term = sum(add(mul(dre, dre), mul(dim, dim)));
  return add(scale(mag_term, 1.0 - cfg.lambda), scale(cplx_term, cfg.lambda));
}

/// Eq. 2: hard minimum over the two noise assignments. The speech estimate
/// always pairs with X; gradient flows only through the winning sum.
inline Value mixit_loss(Tape& t, Value s_hat, Value n1, Value n2,
                        const MixtureBatch& batch, const LossConfig& cfg) {
  s_hat.val().require_same_shape(n1.val(), "mixit_loss");
  s_hat.val().require_same_shape(n2.val(), "mixit_loss");
  s_hat.val().require_same_shape(batch.X, "mixit_loss");
  Value x = t.constant(batch.X);
  Value n = t.constant(batch.N);
  Value sum_a = add(spectral_loss(t, x, add(s_hat, n1), cfg),
                    spectral_loss(t, n, n2, cfg));
  Value sum_b = add(spectral_loss(t, x, add(s_hat, n2), cfg),
                    spectral_loss(t, n, n1, cfg));
  return sum_a.val().scalar() <= sum_b.val().scalar() ? sum_a : sum_b;
}

/// Eq. 3: mean squared error between embedding sequences.
inline Value embedding_loss(Tape&, Value s_emb, Value x_emb) {
  s_emb.val().require_same_shape(x_emb.val(), "embedding_loss");
  Value d = sub(s_emb, x_emb);
  return mean(mul(d, d));
}

/// Eq. 4: <S_emb, N1_emb> + <S_emb, N2_emb> over flattened sequences,
/// L2-normalized per sequence unless configured raw.
inline Value disentanglement_loss(Tape&, Value s_emb, Value n1_emb,
                                  Value n2_emb, const LossConfig& cfg) {
  s_emb.val().require_same_shape(n1_emb.val(), "disentanglement_loss");
  s_emb.val().require_same_shape(n2_emb.val(), "disentanglement_loss");
  if (!cfg.normalized_disentanglement) {
    return add(dot(s_emb, n1_emb), dot(s_emb, n2_emb));
  }
  auto norm = [&](Value e) {
    return pow_scalar(add_scalar(sum(mul(e, e)), cfg.eps * cfg.eps), 0.5);
  };
  Value ns = norm(s_emb);
  auto cosine = [&](Value other) {
    Value denom = mul(ns, norm(other));
    return mul(dot(s_emb, other), pow_scalar(denom, -1.0));
  };
  return add(cosine(n1_emb), cosine(n2_emb));
}

struct UnsupervisedTerms {
  Value total;
  Value mixit;
  Value emb;  // valid only when alpha_e > 0
  Value dis;  // valid only when alpha_d > 0
  bool has_emb = false;
  bool has_dis = false;
};

/// Eq. 5: L_MixIT-SE + alpha_e L_emb + alpha_d L_dis. Zero-weight terms are
/// skipped entirely so the reduction to Eq. 2 is bit-exact.
inline UnsupervisedTerms unsupervised_loss(Tape& t, Value s_hat, Value n1,
                                           Value n2,
                                           const MixtureBatch& batch,
                                           const embedder::Embedder& emb,
                                           const LossConfig& cfg) {
  cfg.validate();
  UnsupervisedTerms out;
  out.mixit = mixit_loss(t, s_hat, n1, n2, batch, cfg);
  out.total = out.mixit;
  if (cfg.alpha_e > 0.0 || cfg.alpha_d > 0.0) {
    Value s_emb = emb.embed(t, s_hat);
    if (cfg.alpha_e > 0.0) {
      Value x_emb = emb.embed(t, t.constant(batch.X));
      out.emb = embedding_loss(t, s_emb, x_emb);
      out.has_emb = true;
      out.total = add(out.total, scale(out.emb, cfg.alpha_e));
    }
    if (cfg.alpha_d > 0.0) {
      Value n1_emb = emb.embed(t, n1);
      Value n2_emb = emb.embed(t, n2);
      out.dis = disentanglement_loss(t, s_emb, n1_emb, n2_emb, cfg);
      out.has_dis = true;
      out.total = add(out.total, scale(out.dis, cfg.alpha_d));
    }
  }
  return out;
}

/// Eq. 6: plain sum of the supervised and unsupervised terms.
inline Value semi_supervised_loss(Value supervised, Value unsupervised) {
  if (supervised.val().numel() != 1 || unsupervised.val().numel() != 1) {
    throw std::invalid_argument("semi_supervised_loss: terms must be scalar");
  }
  return add(supervised, unsupervised);
}

}  // namespace losses
}  // namespace mixse
