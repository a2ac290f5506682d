// mixse/model.hpp

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
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mixse/autodiff.hpp"
#include "mixse/dsp.hpp"
#include "mixse/serialize.hpp"
#include "mixse/tensor.hpp"

namespace mixse {
namespace model {

/// Miniature CRUSE: strided conv encoder, J parallel GRUs over the flattened
/// bottleneck, and 1 or 3 mirrored transposed-conv decoder branches with
/// 1x1-convolved additive skips. Activations are [C, F, T].
struct ModelConfig {
  int num_layers = 3;
  int base_channels = 4;
  int num_gru = 2;
  int input_channels = 2;
  int output_channels = 2;
  int num_decoder_branches = 3;
  int freq_bins = 32;
  int stride_time = 1;
  int stride_freq = 2;
  int kernel_time = 2;
  int kernel_freq = 3;
  // The network eats compressed spectra; inference must compress the same
  // way training did, so the exponent travels with the model.
  double compression_c = 0.3;
  double compression_eps = 1e-12;

  int channels(int layer) const {  // layer 0 is the input
    return layer == 0 ? input_channels : base_channels << (layer - 1);
  }
  int freq_at(int layer) const {
    int f = freq_bins;
    for (int l = 0; l < layer; ++l) f /= stride_freq;
    return f;
  }
  int bottleneck_channels() const { return channels(num_layers); }
  int bottleneck_freq() const { return freq_at(num_layers); }
  int bottleneck_dim() const {
    return bottleneck_channels() * bottleneck_freq();
  }
  int gru_width() const { return bottleneck_dim() / num_gru; }

  void validate() const {
    if (num_layers <= 0 || base_channels <= 0 || num_gru <= 0 ||
        freq_bins <= 0) {
      throw std::invalid_argument("ModelConfig: sizes must be positive");
    }
    if (input_channels != 2 || output_channels != 2) {
      throw std::invalid_argument(
          "ModelConfig: spectra have exactly 2 channels (re, im)");
    }
    if (num_decoder_branches != 1 && num_decoder_branches != 3) {
      throw std::invalid_argument(
          "ModelConfig: num_decoder_branches must be 1 or 3");
    }
    if (stride_time <= 0 || stride_freq <= 0 ||
        kernel_time < stride_time || kernel_freq < stride_freq) {
      throw std::invalid_argument(
          "ModelConfig: kernels must cover their strides");
    }
    std::int64_t div = 1;
    for (int l = 0; l < num_layers; ++l) div *= stride_freq;
    if (freq_bins % div != 0) {
      throw std::invalid_argument(
          "ModelConfig: freq_bins must be divisible by stride_freq^L");
    }
    if (bottleneck_dim() % num_gru != 0) {
      throw std::invalid_argument(
          "ModelConfig: bottleneck dim must split evenly across GRUs");
    }
    if (!(compression_c > 0.0) || compression_c > 1.0 ||
        !(compression_eps > 0.0)) {
      throw std::invalid_argument("ModelConfig: bad compression settings");
    }
  }
};

struct ConvParam {
  Tensor w;
  Tensor b;
};

struct GruParam {
  Tensor w_ih;  // [D, 3H], gate order r, z, n
  Tensor w_hh;  // [H, 3H]
  Tensor b_ih;  // [1, 3H]
  Tensor b_hh;  // [1, 3H]
};

struct BranchParam {
  std::vector<ConvParam> deconvs;  // depth L first, final mask layer last
  std::vector<ConvParam> skips;    // matching depths
};

struct ModelParams {
  ModelConfig config;
  std::vector<ConvParam> encoder;
  std::vector<GruParam> grus;
  std::vector<BranchParam> branches;

  template <class Fn>
  void for_each_param(Fn&& fn) {
    for_each_impl(*this, fn);
  }
  template <class Fn>
  void for_each_param(Fn&& fn) const {
    for_each_impl(*this, fn);
  }

  std::int64_t num_params() const {
    std::int64_t n = 0;
    for_each_param([&](const std::string&, const Tensor& t) { n += t.numel(); });
    return n;
  }

 private:
  template <class Self, class Fn>
  static void for_each_impl(Self& self, Fn& fn) {
    const int layers = self.config.num_layers;
    for (int l = 1; l <= layers; ++l) {
      fn("enc" + std::to_string(l) + ".w", self.encoder[l - 1].w);
      fn("enc" + std::to_string(l) + ".b", self.encoder[l - 1].b);
    }
    for (size_t j = 0; j < self.grus.size(); ++j) {
      const std::string g = "gru" + std::to_string(j + 1);
      fn(g + ".w_ih", self.grus[j].w_ih);
      fn(g + ".w_hh", self.grus[j].w_hh);
      fn(g + ".b_ih", self.grus[j].b_ih);
      fn(g + ".b_hh", self.grus[j].b_hh);
    }
    for (size_t br = 0; br < self.branches.size(); ++br) {
      const std::string b = "branch" + std::to_string(br + 1);
      for (int l = layers; l >= 1; --l) {
        const int i = layers - l;
        fn(b + ".dec" + std::to_string(l) + ".w",
           self.branches[br].deconvs[i].w);
        fn(b + ".dec" + std::to_string(l) + ".b",
           self.branches[br].deconvs[i].b);
        fn(b + ".skip" + std::to_string(l) + ".w",
           self.branches[br].skips[i].w);
        fn(b + ".skip" + std::to_string(l) + ".b",
           self.branches[br].skips[i].b);
      }
    }
  }
};

namespace detail {

class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [-limit, limit]; raw engine output keeps this portable.
  double next(double limit) {
    const double u = (engine_() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * limit;
  }

 private:
  std::mt19937_64 engine_;
};

inline void xavier_fill(Tensor& t, double fan_in, double fan_out,
                        SeededUniform& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.next(limit);
}

}  // namespace detail

/// Allocates zero-valued parameters with shapes fully determined by cfg.
inline ModelParams make_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  const int kh = cfg.kernel_freq, kw = cfg.kernel_time;
  for (int l = 1; l <= cfg.num_layers; ++l) {
    p.encoder.push_back(
        {Tensor({cfg.channels(l), cfg.channels(l - 1), kh, kw}, 0.0),
         Tensor({cfg.channels(l)}, 0.0)});
  }
  const int h = cfg.gru_width();
  for (int j = 0; j < cfg.num_gru; ++j) {
    p.grus.push_back({Tensor({h, 3 * h}, 0.0), Tensor({h, 3 * h}, 0.0),
                      Tensor({1, 3 * h}, 0.0), Tensor({1, 3 * h}, 0.0)});
  }
  for (int br = 0; br < cfg.num_decoder_branches; ++br) {
    BranchParam branch;
    for (int l = cfg.num_layers; l >= 1; --l) {
      const int out_ch = l == 1 ? cfg.output_channels : cfg.channels(l - 1);
      branch.deconvs.push_back(
          {Tensor({cfg.channels(l), out_ch, kh, kw}, 0.0),
           Tensor({out_ch}, 0.0)});
      branch.skips.push_back(
          {Tensor({cfg.channels(l), cfg.channels(l), 1, 1}, 0.0),
           Tensor({cfg.channels(l)}, 0.0)});
    }
    p.branches.push_back(std::move(branch));
  }
  return p;
}

/// Xavier-uniform weights, zero biases, reproducible from the seed.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = make_params(cfg);
  detail::SeededUniform rng(seed);
  const int kh = cfg.kernel_freq, kw = cfg.kernel_time;
  for (int l = 1; l <= cfg.num_layers; ++l) {
    detail::xavier_fill(p.encoder[l - 1].w,
                        cfg.channels(l - 1) * kh * kw,
                        cfg.channels(l) * kh * kw, rng);
  }
  const int h = cfg.gru_width();
  for (auto& g : p.grus) {
    detail::xavier_fill(g.w_ih, h, 3.0 * h, rng);
    detail::xavier_fill(g.w_hh, h, 3.0 * h, rng);
  }
  for (auto& branch : p.branches) {
    for (int l = cfg.num_layers; l >= 1; --l) {
      const int i = cfg.num_layers - l;
      const int out_ch = l == 1 ? cfg.output_channels : cfg.channels(l - 1);
      detail::xavier_fill(branch.deconvs[i].w, cfg.channels(l) * kh * kw,
                          out_ch * kh * kw, rng);
      detail::xavier_fill(branch.skips[i].w, cfg.channels(l),
                          cfg.channels(l), rng);
    }
  }
  return p;
}

struct TapeConv {
  Value w, b;
};
struct TapeGru {
  Value w_ih, w_hh, b_ih, b_hh;
};
struct TapeBranch {
  std::vector<TapeConv> deconvs;
  std::vector<TapeConv> skips;
};

/// Parameter tensors mirrored onto a tape; `ordered` matches for_each_param
/// order so gradients can be read back against names.
struct TapeParams {
  std::vector<TapeConv> encoder;
  std::vector<TapeGru> grus;
  std::vector<TapeBranch> branches;
  std::vector<std::pair<std::string, Value>> ordered;
};

inline TapeParams put_on_tape(Tape& t, const ModelParams& p, bool trainable) {
  TapeParams tp;
  std::vector<Value> flat;
  p.for_each_param([&](const std::string& name, const Tensor& tensor) {
    Value v = trainable ? t.leaf(tensor) : t.constant(tensor);
    tp.ordered.emplace_back(name, v);
    flat.push_back(v);
  });
  size_t at = 0;
  for (int l = 0; l < p.config.num_layers; ++l) {
    tp.encoder.push_back({flat[at], flat[at + 1]});
    at += 2;
  }
  for (size_t j = 0; j < p.grus.size(); ++j) {
    tp.grus.push_back({flat[at], flat[at + 1], flat[at + 2], flat[at + 3]});
    at += 4;
  }
  for (size_t br = 0; br < p.branches.size(); ++br) {
    TapeBranch branch;
    for (int l = p.config.num_layers; l >= 1; --l) {
      branch.deconvs.push_back({flat[at], flat[at + 1]});
      branch.skips.push_back({flat[at + 2], flat[at + 3]});
      at += 4;
    }
    tp.branches.push_back(std::move(branch));
  }
  return tp;
}

/// One GRU over [T, D] input, zero initial state, returns [T, H].
/// Gate order r, z, n: h' = (1-z) n + z h with n = tanh(W_n x + r (U_n h)).
inline Value gru_forward(Tape& t, const TapeGru& g, Value seq) {
  const int steps = seq.val().dim(0);
  const int hidden = g.w_hh.val().dim(0);
  Value h = t.constant(Tensor({1, hidden}, 0.0));
  std::vector<Value> outputs;
  outputs.reserve(steps);
  for (int n = 0; n < steps; ++n) {
    Value x = slice(seq, 0, n, 1);
    Value gi = add(matmul(x, g.w_ih), g.b_ih);
    Value gh = add(matmul(h, g.w_hh), g.b_hh);
    Value r = sigmoid(add(slice(gi, 1, 0, hidden), slice(gh, 1, 0, hidden)));
    Value z = sigmoid(
        add(slice(gi, 1, hidden, hidden), slice(gh, 1, hidden, hidden)));
    Value nn = tanh_act(add(slice(gi, 1, 2 * hidden, hidden),
                            mul(r, slice(gh, 1, 2 * hidden, hidden))));
    h = add(sub(nn, mul(z, nn)), mul(z, h));
    outputs.push_back(h);
  }
  return concat(outputs, 0);
}

namespace detail {

inline Conv2dGeom geometry(const ModelConfig& cfg) {
  Conv2dGeom geom;
  geom.stride_h = cfg.stride_freq;
  geom.stride_w = cfg.stride_time;
  const int pad_f = cfg.kernel_freq - cfg.stride_freq;
  geom.pad_h0 = pad_f - pad_f / 2;
  geom.pad_h1 = pad_f / 2;
  geom.pad_w0 = cfg.kernel_time - cfg.stride_time;  // causal: all in the past
  geom.pad_w1 = 0;
  return geom;
}

inline Conv2dGeom skip_geometry() { return Conv2dGeom{}; }

}  // namespace detail

/// Full differentiable forward pass: compressed spectrum in, one complex
/// mask per decoder branch out, each shaped like the input.
inline std::vector<Value> forward(Tape& t, const ModelConfig& cfg,
                                  const TapeParams& params, Value input) {
  cfg.validate();
  const Tensor& iv = input.val();
  if (iv.rank() != 3 || iv.dim(0) != cfg.input_channels ||
      iv.dim(1) != cfg.freq_bins) {
    throw std::invalid_argument("forward: expected input [2, " +
                                std::to_string(cfg.freq_bins) + ", T], got " +
                                iv.shape_str());
  }
  const int frames = iv.dim(2);
  const Conv2dGeom geom = detail::geometry(cfg);

  // Encoder; keep each level's activation for the skips.
  std::vector<Value> enc;
  Value x = input;
  for (int l = 1; l <= cfg.num_layers; ++l) {
    x = leaky_relu(
        conv2d(x, params.encoder[l - 1].w, params.encoder[l - 1].b, geom),
        0.2);
    enc.push_back(x);
  }

  // Bottleneck: flatten [C, F] per frame, run J GRUs side by side.
  const int dim = cfg.bottleneck_dim();
  const int width = cfg.gru_width();
  Value seq = transpose2d(reshape(x, {dim, frames}));  // [T, D]
  std::vector<Value> gru_outs;
  for (int j = 0; j < cfg.num_gru; ++j) {
    Value part = slice(seq, 1, j * width, width);
    gru_outs.push_back(gru_forward(t, params.grus[j], part));
  }
  Value merged = cfg.num_gru == 1 ? gru_outs[0] : concat(gru_outs, 1);
  Value bottleneck = reshape(transpose2d(merged),
                             {cfg.bottleneck_channels(),
                              cfg.bottleneck_freq(), frames});

  // Decoder branches: mirrored transposed convs with 1x1-conv skips.
  std::vector<Value> masks;
  for (const TapeBranch& branch : params.branches) {
    Value d = bottleneck;
    for (int l = cfg.num_layers; l >= 1; --l) {
      const int i = cfg.num_layers - l;
      Value skip = conv2d(enc[l - 1], branch.skips[i].w, branch.skips[i].b,
                          detail::skip_geometry());
      Value joined = add(d, skip);
      Value up = conv2d_transposed(joined, branch.deconvs[i].w,
                                   branch.deconvs[i].b, geom,
                                   cfg.freq_at(l - 1), frames);
      d = l == 1 ? up : leaky_relu(up, 0.2);
    }
    masks.push_back(d);
  }
  return masks;
}

/// Inference-style forward on plain tensors.
inline std::vector<Tensor> forward_masks(const ModelParams& p,
                                         const Tensor& input) {
  Tape t;
  TapeParams tp = put_on_tape(t, p, false);
  std::vector<Value> masks = forward(t, p.config, tp, t.constant(input));
  std::vector<Tensor> out;
  out.reserve(masks.size());
  for (const Value& m : masks) out.push_back(m.val());
  return out;
}

/// Applies the speech mask to the raw spectrum: compress, crop the Nyquist
/// bin if present, run the speech branch, replicate the top mask row back
/// over Nyquist, multiply. N1/N2 branches are never evaluated here.
inline dsp::ComplexSpectrogram enhance(const ModelParams& p,
                                       const dsp::ComplexSpectrogram& y) {
  y.validate();
  const int bins = y.num_bins();
  const int freq = p.config.freq_bins;
  if (bins != freq && bins != freq + 1) {
    throw std::invalid_argument(
        "enhance: spectrogram bins incompatible with model freq_bins");
  }
  const int frames = y.num_frames();
  const dsp::ComplexSpectrogram comp = dsp::compress(
      y, {p.config.compression_c}, p.config.compression_eps);

  Tensor input({2, freq, frames});
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < freq; ++k) {
      for (int n = 0; n < frames; ++n) {
        input.at(c, k, n) = comp.bins.at(c, k, n);
      }
    }
  }

  Tape t;
  TapeParams tp = put_on_tape(t, p, false);
  // Only the speech branch is needed at inference.
  TapeParams speech_only;
  speech_only.encoder = tp.encoder;
  speech_only.grus = tp.grus;
  speech_only.branches.push_back(tp.branches[0]);
  const Tensor mask =
      forward(t, p.config, speech_only, t.constant(input))[0].val();

  dsp::ComplexSpectrogram g = y;
  g.bins = Tensor({2, bins, frames});
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < bins; ++k) {
      const int src = k < freq ? k : freq - 1;
      for (int n = 0; n < frames; ++n) {
        g.bins.at(c, k, n) = mask.at(c, src, n);
      }
    }
  }
  return dsp::apply_mask(y, g);
}

struct Checkpoint {
  ModelParams params;
  std::int64_t step = 0;
};

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"num_layers", cfg.num_layers},
                        {"base_channels", cfg.base_channels},
                        {"num_gru", cfg.num_gru},
                        {"input_channels", cfg.input_channels},
                        {"output_channels", cfg.output_channels},
                        {"num_decoder_branches", cfg.num_decoder_branches},
                        {"freq_bins", cfg.freq_bins},
                        {"stride_time", cfg.stride_time},
                        {"stride_freq", cfg.stride_freq},
                        {"kernel_time", cfg.kernel_time},
                        {"kernel_freq", cfg.kernel_freq},
                        {"compression_c", cfg.compression_c},
                        {"compression_eps", cfg.compression_eps}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.base_channels = j.at("base_channels").get<int>();
  cfg.num_gru = j.at("num_gru").get<int>();
  cfg.input_channels = j.at("input_channels").get<int>();
  cfg.output_channels = j.at("output_channels").get<int>();
  cfg.num_decoder_branches = j.at("num_decoder_branches").get<int>();
  cfg.freq_bins = j.at("freq_bins").get<int>();
  cfg.stride_time = j.at("stride_time").get<int>();
  cfg.stride_freq = j.at("stride_freq").get<int>();
  cfg.kernel_time = j.at("kernel_time").get<int>();
  cfg.kernel_freq = j.at("kernel_freq").get<int>();
  cfg.compression_c = j.at("compression_c").get<double>();
  cfg.compression_eps = j.at("compression_eps").get<double>();
  cfg.validate();
  return cfg;
}

inline void save_checkpoint(const std::string& path, const ModelParams& p,
                            std::int64_t step) {
  nlohmann::json j;
  j["format"] = "mixse-checkpoint";
  j["version"] = 1;
  j["step"] = step;
  j["config"] = config_to_json(p.config);
  nlohmann::json params = nlohmann::json::array();
  p.for_each_param([&](const std::string& name, const Tensor& t) {
    params.push_back({{"name", name},
                      {"shape", t.shape()},
                      {"data", serialize::encode_doubles(t.data(),
                                                         t.numel())}});
  });
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << j.dump(1) << "\n";
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "mixse-checkpoint" ||
      j.value("version", 0) != 1) {
    throw std::runtime_error("checkpoint: unrecognized format in " + path);
  }
  Checkpoint ckpt;
  ckpt.step = j.at("step").get<std::int64_t>();
  ckpt.params = make_params(config_from_json(j.at("config")));

  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& entry : j.at("params")) {
    by_name[entry.at("name").get<std::string>()] = &entry;
  }
  size_t used = 0;
  ckpt.params.for_each_param([&](const std::string& name, Tensor& t) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint: missing parameter " + name);
    }
    const auto shape = it->second->at("shape").get<std::vector<int>>();
    if (shape != t.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    const std::vector<double> values =
        serialize::decode_doubles(it->second->at("data").get<std::string>());
    if (static_cast<std::int64_t>(values.size()) != t.numel()) {
      throw std::runtime_error("checkpoint: size mismatch for " + name);
    }
    std::copy(values.begin(), values.end(), t.data());
    ++used;
  });
  if (used != by_name.size()) {
    throw std::runtime_error("checkpoint: extra parameters in " + path);
  }
  return ckpt;
}

}  // namespace model
}  // namespace mixse
