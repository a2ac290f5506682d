// include/mixse/config.hpp

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

// One JSON document with the sections stft, model, loss, train, data and
// embedder drives every tool. Missing keys fall back to the compiled-in
// defaults, unknown keys are rejected, and to_json emits a complete document
// so an echoed config reproduces the run that printed it. The loss section
// maps onto train.loss; batch and epoch sizes live in the train section only.

#ifndef MIXSE_CONFIG_HPP_
#define MIXSE_CONFIG_HPP_

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixse/datagen.hpp"
#include "mixse/dsp.hpp"
#include "mixse/embedder.hpp"
#include "mixse/losses.hpp"
#include "mixse/model.hpp"
#include "mixse/trainer.hpp"

namespace mixse {
namespace config {

inline std::string window_to_string(dsp::Window w) {
  switch (w) {
    case dsp::Window::kSqrtHann: return "sqrt_hann";
  }
  throw std::logic_error("window_to_string: bad window");
}

inline dsp::Window window_from_string(const std::string& s) {
  if (s == "sqrt_hann") return dsp::Window::kSqrtHann;
  throw std::invalid_argument("config: unknown window '" + s + "'");
}

inline std::string target_policy_to_string(datagen::TargetPolicy p) {
  switch (p) {
    case datagen::TargetPolicy::kReverberantTarget: return "reverberant";
    case datagen::TargetPolicy::kWindowedRirTarget: return "windowed_rir";
    case datagen::TargetPolicy::kNoisyTarget: return "noisy";
  }
  throw std::logic_error("target_policy_to_string: bad policy");
}

inline datagen::TargetPolicy target_policy_from_string(const std::string& s) {
  if (s == "reverberant") return datagen::TargetPolicy::kReverberantTarget;
  if (s == "windowed_rir") return datagen::TargetPolicy::kWindowedRirTarget;
  if (s == "noisy") return datagen::TargetPolicy::kNoisyTarget;
  throw std::invalid_argument("config: unknown target_policy '" + s + "'");
}

inline std::string data_source_to_string(datagen::DataSource s) {
  switch (s) {
    case datagen::DataSource::kSynthetic: return "synthetic";
    case datagen::DataSource::kManifest: return "manifest";
  }
  throw std::logic_error("data_source_to_string: bad source");
}

inline datagen::DataSource data_source_from_string(const std::string& s) {
  if (s == "synthetic") return datagen::DataSource::kSynthetic;
  if (s == "manifest") return datagen::DataSource::kManifest;
  throw std::invalid_argument("config: unknown data source '" + s + "'");
}

inline trainer::TrainMode train_mode_from_string(const std::string& s) {
  if (s == "supervised") return trainer::TrainMode::kSupervised;
  if (s == "unsupervised") return trainer::TrainMode::kUnsupervised;
  if (s == "semi_supervised") return trainer::TrainMode::kSemiSupervised;
  throw std::invalid_argument("config: unknown train mode '" + s + "'");
}

inline std::string exp_id_to_string(trainer::ExpId id) {
  if (id == trainer::ExpId::kCustom) return "custom";
  const int n = static_cast<int>(id) - static_cast<int>(trainer::ExpId::kExp1);
  return "exp" + std::to_string(n + 1);
}

inline trainer::ExpId exp_id_from_string(const std::string& s) {
  if (s == "custom") return trainer::ExpId::kCustom;
  if (s.size() == 4 && s.rfind("exp", 0) == 0 && s[3] >= '1' && s[3] <= '9') {
    return static_cast<trainer::ExpId>(
        static_cast<int>(trainer::ExpId::kExp1) + (s[3] - '1'));
  }
  throw std::invalid_argument("config: unknown experiment id '" + s + "'");
}

inline std::string embedder_kind_to_string(embedder::EmbedderKind k) {
  switch (k) {
    case embedder::EmbedderKind::kLogmelProjection: return "logmel_projection";
  }
  throw std::logic_error("embedder_kind_to_string: bad kind");
}

inline embedder::EmbedderKind embedder_kind_from_string(const std::string& s) {
  if (s == "logmel_projection") {
    return embedder::EmbedderKind::kLogmelProjection;
  }
  throw std::invalid_argument("config: unknown embedder kind '" + s + "'");
}

namespace detail {

inline void require_object(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: " + where + " must be an object");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::string& where,
                           const std::vector<std::string>& known) {
  for (const auto& item : j.items()) {
    bool found = false;
    for (const auto& k : known) {
      if (item.key() == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw std::invalid_argument("config: unknown key '" + item.key() +
                                  "' in section " + where);
    }
  }
}

template <class T>
void read(const nlohmann::json& j, const std::string& key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has the wrong type");
  }
}

inline void read_string(const nlohmann::json& j, const std::string& key,
                        std::string& out) {
  read<std::string>(j, key, out);
}

}  // namespace detail

inline nlohmann::json stft_to_json(const dsp::StftConfig& c) {
  return {{"frame_length", c.frame_length},
          {"hop_length", c.hop_length},
          {"window", window_to_string(c.window)}};
}

inline dsp::StftConfig stft_from_json(const nlohmann::json& j,
                                      dsp::StftConfig c = {}) {
  detail::require_object(j, "stft");
  detail::reject_unknown(j, "stft", {"frame_length", "hop_length", "window"});
  detail::read(j, "frame_length", c.frame_length);
  detail::read(j, "hop_length", c.hop_length);
  std::string window = window_to_string(c.window);
  detail::read_string(j, "window", window);
  c.window = window_from_string(window);
  c.validate();
  return c;
}

inline nlohmann::json model_to_json(const model::ModelConfig& c) {
  return model::config_to_json(c);
}

inline model::ModelConfig model_from_json(const nlohmann::json& j,
                                          model::ModelConfig c = {}) {
  detail::require_object(j, "model");
  detail::reject_unknown(
      j, "model",
      {"num_layers", "base_channels", "num_gru", "input_channels",
       "output_channels", "num_decoder_branches", "freq_bins", "stride_time",
       "stride_freq", "kernel_time", "kernel_freq", "compression_c",
       "compression_eps"});
  detail::read(j, "num_layers", c.num_layers);
  detail::read(j, "base_channels", c.base_channels);
  detail::read(j, "num_gru", c.num_gru);
  detail::read(j, "input_channels", c.input_channels);
  detail::read(j, "output_channels", c.output_channels);
  detail::read(j, "num_decoder_branches", c.num_decoder_branches);
  detail::read(j, "freq_bins", c.freq_bins);
  detail::read(j, "stride_time", c.stride_time);
  detail::read(j, "stride_freq", c.stride_freq);
  detail::read(j, "kernel_time", c.kernel_time);
  detail::read(j, "kernel_freq", c.kernel_freq);
  detail::read(j, "compression_c", c.compression_c);
  detail::read(j, "compression_eps", c.compression_eps);
  c.validate();
  return c;
}

inline nlohmann::json loss_to_json(const losses::LossConfig& c) {
  return {{"lambda", c.lambda},
          {"c", c.c.c},
          {"alpha_e", c.alpha_e},
          {"alpha_d", c.alpha_d},
          {"eps", c.eps},
          {"normalized_disentanglement", c.normalized_disentanglement}};
}

inline losses::LossConfig loss_from_json(const nlohmann::json& j,
                                         losses::LossConfig c = {}) {
  detail::require_object(j, "loss");
  detail::reject_unknown(j, "loss",
                         {"lambda", "c", "alpha_e", "alpha_d", "eps",
                          "normalized_disentanglement"});
  detail::read(j, "lambda", c.lambda);
  detail::read(j, "c", c.c.c);
  detail::read(j, "alpha_e", c.alpha_e);
  detail::read(j, "alpha_d", c.alpha_d);
  detail::read(j, "eps", c.eps);
  detail::read(j, "normalized_disentanglement", c.normalized_disentanglement);
  c.validate();
  return c;
}

inline nlohmann::json train_to_json(const trainer::TrainConfig& c) {
  return {{"mode", trainer::mode_to_string(c.mode)},
          {"lr_supervised", c.lr_supervised},
          {"lr_unsupervised", c.lr_unsupervised},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"plateau_patience_epochs", c.plateau_patience_epochs},
          {"eval_every_epochs", c.eval_every_epochs},
          {"epoch_size", c.epoch_size},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"dev_size", c.dev_size},
          {"grad_clip_norm", c.grad_clip_norm},
          {"exp_id", exp_id_to_string(c.exp_id)}};
}

inline trainer::TrainConfig train_from_json(const nlohmann::json& j,
                                            trainer::TrainConfig c = {}) {
  detail::require_object(j, "train");
  detail::reject_unknown(
      j, "train",
      {"mode", "lr_supervised", "lr_unsupervised", "weight_decay", "beta1",
       "beta2", "plateau_patience_epochs", "eval_every_epochs", "epoch_size",
       "batch_size", "max_epochs", "dev_size", "grad_clip_norm", "exp_id"});
  std::string mode = trainer::mode_to_string(c.mode);
  detail::read_string(j, "mode", mode);
  c.mode = train_mode_from_string(mode);
  detail::read(j, "lr_supervised", c.lr_supervised);
  detail::read(j, "lr_unsupervised", c.lr_unsupervised);
  detail::read(j, "weight_decay", c.weight_decay);
  detail::read(j, "beta1", c.beta1);
  detail::read(j, "beta2", c.beta2);
  detail::read(j, "plateau_patience_epochs", c.plateau_patience_epochs);
  detail::read(j, "eval_every_epochs", c.eval_every_epochs);
  detail::read(j, "epoch_size", c.epoch_size);
  detail::read(j, "batch_size", c.batch_size);
  detail::read(j, "max_epochs", c.max_epochs);
  detail::read(j, "dev_size", c.dev_size);
  detail::read(j, "grad_clip_norm", c.grad_clip_norm);
  std::string exp_id = exp_id_to_string(c.exp_id);
  detail::read_string(j, "exp_id", exp_id);
  c.exp_id = exp_id_from_string(exp_id);
  return c;
}

inline nlohmann::json data_to_json(const datagen::DataConfig& c) {
  return {{"sample_rate", c.sample_rate},
          {"clip_seconds", c.clip_seconds},
          {"snr_min_db", c.snr_min_db},
          {"snr_max_db", c.snr_max_db},
          {"target_policy", target_policy_to_string(c.target_policy)},
          {"use_rir", c.use_rir},
          {"pool_size", c.pool_size},
          {"source", data_source_to_string(c.source)},
          {"manifest_path", c.manifest_path}};
}

inline datagen::DataConfig data_from_json(const nlohmann::json& j,
                                          datagen::DataConfig c = {}) {
  detail::require_object(j, "data");
  detail::reject_unknown(j, "data",
                         {"sample_rate", "clip_seconds", "snr_min_db",
                          "snr_max_db", "target_policy", "use_rir",
                          "pool_size", "source", "manifest_path"});
  detail::read(j, "sample_rate", c.sample_rate);
  detail::read(j, "clip_seconds", c.clip_seconds);
  detail::read(j, "snr_min_db", c.snr_min_db);
  detail::read(j, "snr_max_db", c.snr_max_db);
  std::string policy = target_policy_to_string(c.target_policy);
  detail::read_string(j, "target_policy", policy);
  c.target_policy = target_policy_from_string(policy);
  detail::read(j, "use_rir", c.use_rir);
  detail::read(j, "pool_size", c.pool_size);
  std::string source = data_source_to_string(c.source);
  detail::read_string(j, "source", source);
  c.source = data_source_from_string(source);
  detail::read_string(j, "manifest_path", c.manifest_path);
  return c;
}

inline nlohmann::json embedder_to_json(const embedder::EmbedderConfig& c) {
  return {{"kind", embedder_kind_to_string(c.kind)},
          {"num_mels", c.num_mels},
          {"dim", c.dim},
          {"seed", c.seed}};
}

inline embedder::EmbedderConfig embedder_from_json(
    const nlohmann::json& j, embedder::EmbedderConfig c = {}) {
  detail::require_object(j, "embedder");
  detail::reject_unknown(j, "embedder", {"kind", "num_mels", "dim", "seed"});
  std::string kind = embedder_kind_to_string(c.kind);
  detail::read_string(j, "kind", kind);
  c.kind = embedder_kind_from_string(kind);
  detail::read(j, "num_mels", c.num_mels);
  detail::read(j, "dim", c.dim);
  detail::read(j, "seed", c.seed);
  c.validate();
  return c;
}

inline nlohmann::json to_json(const trainer::TrainSetup& s) {
  return {{"stft", stft_to_json(s.stft)},
          {"model", model_to_json(s.model)},
          {"loss", loss_to_json(s.train.loss)},
          {"train", train_to_json(s.train)},
          {"data", data_to_json(s.data)},
          {"embedder", embedder_to_json(s.embedder)}};
}

inline trainer::TrainSetup from_json(const nlohmann::json& j,
                                     trainer::TrainSetup s = {}) {
  detail::require_object(j, "config");
  detail::reject_unknown(
      j, "config", {"stft", "model", "loss", "train", "data", "embedder"});
  if (j.contains("stft")) s.stft = stft_from_json(j.at("stft"), s.stft);
  if (j.contains("model")) s.model = model_from_json(j.at("model"), s.model);
  if (j.contains("train")) s.train = train_from_json(j.at("train"), s.train);
  if (j.contains("loss")) {
    s.train.loss = loss_from_json(j.at("loss"), s.train.loss);
  }
  if (j.contains("data")) s.data = data_from_json(j.at("data"), s.data);
  if (j.contains("embedder")) {
    s.embedder = embedder_from_json(j.at("embedder"), s.embedder);
  }
  return s;
}

inline trainer::TrainSetup load_file(const std::string& path,
                                     trainer::TrainSetup s = {}) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open " + path);
  }
  const nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw std::invalid_argument("config: " + path + " is not valid JSON");
  }
  return from_json(j, std::move(s));
}

inline void save_file(const std::string& path, const trainer::TrainSetup& s) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("config: cannot write " + path);
  }
  out << to_json(s).dump(2) << "\n";
  if (!out) {
    throw std::runtime_error("config: write failed: " + path);
  }
}

/// Applies one `section.key=value` assignment to a JSON document. Values
/// parse as JSON when possible (numbers, booleans) and fall back to strings,
/// so `train.max_epochs=8` and `data.target_policy=noisy` both work. Typos
/// surface later as unknown-key rejections in from_json.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("config: override must look like key=value: " +
                                assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(
        begin, dot == std::string::npos ? std::string::npos : dot - begin);
    if (key.empty()) {
      throw std::invalid_argument("config: bad override path: " + path);
    }
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

/// Default directory for run artifacts; overridden by --out on the CLI.
inline std::string output_root() {
  const char* env = std::getenv("MIXSE_OUTPUT_ROOT");
  return (env != nullptr && env[0] != '\0') ? env : ".";
}

}  // namespace config
}  // namespace mixse

#endif  // MIXSE_CONFIG_HPP_
