// tools/mixse_cli.cpp

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

// Command-line front end: dataset synthesis, the Exp1..Exp9 training presets,
// WAV enhancement with a trained checkpoint, metric reports and the
// finite-difference gradient suite. Configuration comes from one JSON file
// with sections stft/model/loss/train/data/embedder plus --set overrides;
// the effective config is echoed next to every training run so any run can
// be reproduced from its artifacts. Exit codes: 0 success, 1 config error,
// 2 runtime failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixse/config.hpp"
#include "mixse/datagen.hpp"
#include "mixse/dsp.hpp"
#include "mixse/gradcheck.hpp"
#include "mixse/metrics.hpp"
#include "mixse/model.hpp"
#include "mixse/trainer.hpp"
#include "mixse/wav.hpp"

namespace {

namespace fs = std::filesystem;
using mixse::dsp::Waveform;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = mixse::config::output_root();
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
};

/// Desk-scale defaults that validate and train in minutes; a config file or
/// --set overrides replace any of them.
mixse::trainer::TrainSetup cli_defaults() {
  mixse::trainer::TrainSetup s;
  s.stft.frame_length = 128;
  s.stft.hop_length = 64;
  s.model.freq_bins = 64;
  s.data.clip_seconds = 0.5;
  return s;
}

mixse::trainer::TrainSetup load_setup(const CommonArgs& args,
                                      const std::string& preset,
                                      mixse::trainer::TrainSetup base) {
  nlohmann::json doc = nlohmann::json::object();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) {
      throw std::invalid_argument("config: cannot open " + args.config_path);
    }
    doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
      throw std::invalid_argument("config: " + args.config_path +
                                  " is not valid JSON");
    }
  }
  mixse::trainer::TrainSetup setup =
      mixse::config::from_json(doc, std::move(base));
  if (!preset.empty()) {
    setup = mixse::trainer::apply_preset(
        mixse::config::exp_id_from_string(preset), setup);
  }
  // Overrides land after the preset so an explicit --set wins.
  nlohmann::json effective = mixse::config::to_json(setup);
  for (const auto& assignment : args.overrides) {
    mixse::config::apply_override(effective, assignment);
  }
  return mixse::config::from_json(effective);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory " + dir + ": " +
                             ec.message());
  }
}

std::uint64_t fnv1a64(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_waveform(std::uint64_t h, const Waveform& w) {
  h = fnv1a64(h, &w.sample_rate, sizeof(w.sample_rate));
  return w.samples.empty()
             ? h
             : fnv1a64(h, w.samples.data(),
                       w.samples.size() * sizeof(double));
}

/// Hash of the first two batches the trainer will draw. Two runs with equal
/// fingerprints consumed identical data streams.
std::string data_fingerprint(const mixse::trainer::TrainSetup& setup,
                             std::uint64_t seed) {
  mixse::datagen::BatchIterator it(
      setup.effective_data(), mixse::trainer::to_batch_mode(setup.train.mode),
      mixse::datagen::detail::derive_seed(seed,
                                          mixse::trainer::detail::kBatchStream));
  std::uint64_t h = 1469598103934665603ull;
  for (int b = 0; b < 2; ++b) {
    const mixse::datagen::Batch batch = it.next();
    for (const auto& ex : batch.supervised) {
      h = hash_waveform(h, ex.input);
      h = hash_waveform(h, ex.target);
    }
    for (const auto& ex : batch.unsupervised) {
      h = hash_waveform(h, ex.input);
      h = hash_waveform(h, ex.noisy_speech);
      h = hash_waveform(h, ex.extra_noise);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_wav(const std::string& path, const Waveform& w, bool pcm16) {
  if (pcm16) {
    mixse::wav::write_wav_pcm16(path, w);
  } else {
    mixse::wav::write_wav_float32(path, w);
  }
}

int run_synth_data(const CommonArgs& args, int count, double seconds,
                   int sample_rate, bool with_rir, bool pcm16) {
  namespace dg = mixse::datagen;
  if (count < 1) {
    throw std::invalid_argument("synth-data: --count must be >= 1");
  }
  if (!(seconds > 0.0)) {
    throw std::invalid_argument("synth-data: --seconds must be positive");
  }
  if (sample_rate <= 0) {
    throw std::invalid_argument("synth-data: --sample-rate must be positive");
  }
  ensure_dir(args.out_dir);

  const dg::NoiseKind kinds[] = {dg::NoiseKind::kWhite, dg::NoiseKind::kPink,
                                 dg::NoiseKind::kBabbleLike,
                                 dg::NoiseKind::kHum};
  std::vector<dg::ManifestEntry> entries;
  char name[64];
  for (int i = 0; i < count; ++i) {
    const auto sub = [&](std::uint64_t stream) {
      return dg::detail::derive_seed(args.seed,
                                     stream + static_cast<std::uint64_t>(i));
    };

    dg::ManifestEntry speech;
    std::snprintf(name, sizeof(name), "speech_%04d.wav", i);
    speech.path = (fs::path(args.out_dir) / name).string();
    speech.role = dg::ManifestRole::kSpeech;
    write_wav(speech.path, dg::synth_speech(sub(0x1000), seconds, sample_rate),
              pcm16);
    if (with_rir) {
      std::snprintf(name, sizeof(name), "rir_%04d.wav", i);
      Waveform rir;
      rir.sample_rate = sample_rate;
      rir.samples = dg::synth_rir(sub(0x2000), sample_rate);
      speech.rir_path = (fs::path(args.out_dir) / name).string();
      write_wav(speech.rir_path, rir, pcm16);
    }
    entries.push_back(speech);

    dg::ManifestEntry noise;
    std::snprintf(name, sizeof(name), "noise_%04d.wav", i);
    noise.path = (fs::path(args.out_dir) / name).string();
    noise.role = dg::ManifestRole::kNoise;
    write_wav(noise.path,
              dg::synth_noise(sub(0x3000), seconds, sample_rate, kinds[i % 4]),
              pcm16);
    entries.push_back(noise);

    dg::MixSpec spec;
    dg::detail::SeededRng rng(sub(0x4000));
    spec.snr_db = rng.uniform(0.0, 20.0);
    spec.seed = sub(0x5000);
    spec.clip_seconds = seconds;
    const dg::TrainingExample ex =
        dg::mix(dg::synth_speech(sub(0x6000), seconds, sample_rate),
                dg::synth_noise(sub(0x7000), seconds, sample_rate,
                                kinds[(i + 1) % 4]),
                spec);
    dg::ManifestEntry noisy;
    std::snprintf(name, sizeof(name), "noisy_%04d.wav", i);
    noisy.path = (fs::path(args.out_dir) / name).string();
    noisy.role = dg::ManifestRole::kNoisySpeech;
    write_wav(noisy.path, ex.input, pcm16);
    entries.push_back(noisy);
  }

  const std::string manifest =
      (fs::path(args.out_dir) / "manifest.json").string();
  dg::write_manifest(manifest, entries);
  std::cout << "wrote " << entries.size() << " clips and " << manifest
            << "\n";
  return 0;
}

int run_train(const CommonArgs& args, const std::string& preset) {
  const mixse::trainer::TrainSetup setup =
      load_setup(args, preset, cli_defaults());
  setup.validate();
  ensure_dir(args.out_dir);

  const std::string config_path =
      (fs::path(args.out_dir) / "effective_config.json").string();
  mixse::config::save_file(config_path, setup);

  const std::string log_path =
      (fs::path(args.out_dir) / "train_log.jsonl").string();
  std::ofstream log(log_path);
  if (!log) {
    throw std::runtime_error("train: cannot write " + log_path);
  }

  const std::string fingerprint = data_fingerprint(setup, args.seed);
  const mixse::trainer::TrainResult result =
      mixse::trainer::train(setup, args.seed, &log, args.out_dir);

  nlohmann::json run;
  run["seed"] = args.seed;
  run["exp_id"] = mixse::config::exp_id_to_string(setup.train.exp_id);
  run["mode"] = mixse::trainer::mode_to_string(setup.train.mode);
  run["data_fingerprint"] = fingerprint;
  run["steps"] = result.loss_curve.size();
  run["loss_curve"] = result.loss_curve;
  run["best_step"] = result.best.step;
  run["best_metric"] = result.best_metric;
  run["final_lr_multiplier"] = result.final_lr_multiplier;
  run["config"] = mixse::config::to_json(setup);
  const std::string run_path = (fs::path(args.out_dir) / "run.json").string();
  std::ofstream run_out(run_path);
  if (!run_out) {
    throw std::runtime_error("train: cannot write " + run_path);
  }
  run_out << run.dump(2) << "\n";

  std::cout << "config: " << config_path << "\n"
            << "steps: " << result.loss_curve.size() << "\n"
            << "final_loss: " << result.loss_curve.back() << "\n"
            << "best_step: " << result.best.step << "\n"
            << "best_metric: " << result.best_metric << "\n"
            << "artifacts: " << args.out_dir << "\n";
  return 0;
}

int run_enhance(const CommonArgs& args, const std::string& checkpoint_path,
                const std::vector<std::string>& inputs,
                const std::string& suffix, bool pcm16) {
  const mixse::trainer::TrainSetup setup =
      load_setup(args, "", cli_defaults());
  const mixse::model::Checkpoint ckpt =
      mixse::model::load_checkpoint(checkpoint_path);
  ensure_dir(args.out_dir);

  for (const auto& input : inputs) {
    const Waveform w = mixse::wav::read_wav(input);
    const mixse::dsp::ComplexSpectrogram spec =
        mixse::dsp::stft(w, setup.stft);
    const mixse::dsp::ComplexSpectrogram enhanced =
        mixse::model::enhance(ckpt.params, spec);
    Waveform out = mixse::dsp::istft(enhanced);
    if (out.samples.size() > w.samples.size()) {
      out.samples.resize(w.samples.size());
    }
    const fs::path in_path(input);
    const std::string out_path =
        (fs::path(args.out_dir) / (in_path.stem().string() + suffix + ".wav"))
            .string();
    write_wav(out_path, out, pcm16);
    std::cout << input << " -> " << out_path << "\n";
  }
  return 0;
}

int run_evaluate(const std::vector<std::string>& refs,
                 const std::vector<std::string>& ests,
                 const std::string& pairs_path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (refs.size() != ests.size()) {
    throw std::invalid_argument(
        "evaluate: --ref and --est must be given in pairs");
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    pairs.emplace_back(refs[i], ests[i]);
  }
  if (!pairs_path.empty()) {
    std::ifstream in(pairs_path);
    if (!in) {
      throw std::invalid_argument("evaluate: cannot open " + pairs_path);
    }
    const nlohmann::json arr = nlohmann::json::parse(in, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) {
      throw std::invalid_argument("evaluate: " + pairs_path +
                                  " is not a JSON array");
    }
    for (const auto& item : arr) {
      if (!item.is_object() || !item.contains("reference") ||
          !item.contains("estimate")) {
        throw std::invalid_argument(
            "evaluate: pair entries need 'reference' and 'estimate'");
      }
      pairs.emplace_back(item.at("reference").get<std::string>(),
                         item.at("estimate").get<std::string>());
    }
  }
  if (pairs.empty()) {
    throw std::invalid_argument(
        "evaluate: give --ref/--est pairs or --pairs FILE");
  }

  for (const auto& [ref_path, est_path] : pairs) {
    const Waveform ref = mixse::wav::read_wav(ref_path);
    const Waveform est = mixse::wav::read_wav(est_path);
    try {
      const mixse::metrics::MetricReport report =
          mixse::metrics::evaluate(ref, est);
      std::cout << mixse::metrics::to_json_line(est_path, report) << "\n";
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("evaluate: " + est_path + ": " + e.what());
    }
  }
  return 0;
}

int run_gradcheck(const CommonArgs& args, int frames, double fd_step,
                  double threshold) {
  mixse::gradcheck::GradCheckConfig cfg = mixse::gradcheck::tiny_config();
  if (!args.config_path.empty() || !args.overrides.empty()) {
    mixse::trainer::TrainSetup base;
    base.model = cfg.model;
    base.embedder = cfg.embedder;
    base.train.loss = cfg.loss;
    const mixse::trainer::TrainSetup setup = load_setup(args, "", base);
    cfg.model = setup.model;
    cfg.embedder = setup.embedder;
    cfg.loss = setup.train.loss;
  }
  if (frames > 0) cfg.frames = frames;
  if (fd_step > 0.0) cfg.fd_step = fd_step;
  cfg.seed = args.seed != 0 ? args.seed : cfg.seed;

  const mixse::gradcheck::SuiteResult suite = mixse::gradcheck::run_suite(cfg);
  for (const auto& c : suite.cases) {
    std::cout << c.name << ": max_rel_error=" << c.max_rel_error
              << " params_checked=" << c.params_checked << "\n";
  }
  std::cout << "max_rel_error=" << suite.max_rel_error
            << " params_checked=" << suite.params_checked << "\n";
  if (!(suite.max_rel_error < threshold)) {
    std::cerr << "gradcheck: max relative error " << suite.max_rel_error
              << " exceeds threshold " << threshold << "\n";
    return 2;
  }
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs* args, bool with_out) {
  cmd->add_option("--config", args->config_path,
                  "JSON config file (sections stft/model/loss/train/data/"
                  "embedder)");
  cmd->add_option("--seed", args->seed, "master RNG seed");
  cmd->add_option("--set", args->overrides,
                  "config override, e.g. train.max_epochs=8 (repeatable)")
      ->take_all();
  if (with_out) {
    cmd->add_option("--out", args->out_dir,
                    "output directory (default: $MIXSE_OUTPUT_ROOT or .)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixse: speech enhancement trained on mixtures of mixtures"};
  app.require_subcommand(1);

  CommonArgs synth_args;
  int synth_count = 8;
  double synth_seconds = 2.0;
  int synth_rate = 16000;
  bool synth_rir = false;
  bool synth_pcm16 = false;
  auto* synth = app.add_subcommand(
      "synth-data", "write a synthetic speech/noise corpus and its manifest");
  add_common(synth, &synth_args, true);
  synth->add_option("--count", synth_count, "clips per role");
  synth->add_option("--seconds", synth_seconds, "clip length in seconds");
  synth->add_option("--sample-rate", synth_rate, "sample rate in Hz");
  synth->add_flag("--rir", synth_rir, "attach room impulse responses");
  synth->add_flag("--pcm16", synth_pcm16, "write 16-bit PCM instead of float");

  CommonArgs train_args;
  std::string train_preset;
  auto* train = app.add_subcommand(
      "train", "run a training preset and write checkpoints and logs");
  add_common(train, &train_args, true);
  train->add_option("--preset", train_preset,
                    "experiment preset exp1..exp9");

  CommonArgs enhance_args;
  std::string enhance_checkpoint;
  std::vector<std::string> enhance_inputs;
  std::string enhance_suffix = "_enhanced";
  bool enhance_pcm16 = false;
  auto* enhance = app.add_subcommand(
      "enhance", "denoise WAV files with a trained checkpoint");
  add_common(enhance, &enhance_args, true);
  enhance->add_option("--checkpoint", enhance_checkpoint, "checkpoint JSON")
      ->required();
  enhance->add_option("--in", enhance_inputs, "input WAV files")
      ->required()
      ->take_all();
  enhance->add_option("--suffix", enhance_suffix, "output filename suffix");
  enhance->add_flag("--pcm16", enhance_pcm16,
                    "write 16-bit PCM instead of float");

  std::vector<std::string> eval_refs;
  std::vector<std::string> eval_ests;
  std::string eval_pairs;
  auto* evaluate = app.add_subcommand(
      "evaluate", "print metric reports for reference/estimate pairs");
  evaluate->add_option("--ref", eval_refs, "reference WAV (repeatable)")
      ->take_all();
  evaluate->add_option("--est", eval_ests, "estimate WAV (repeatable)")
      ->take_all();
  evaluate->add_option("--pairs", eval_pairs,
                       "JSON array of {reference, estimate}");

  CommonArgs grad_args;
  int grad_frames = 0;
  double grad_fd_step = 0.0;
  double grad_threshold = 1e-3;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of all six loss gradients");
  add_common(gradcheck, &grad_args, false);
  gradcheck->add_option("--frames", grad_frames,
                        "spectrogram frames (default 8)");
  gradcheck->add_option("--fd-step", grad_fd_step,
                        "central-difference step (default 1e-4)");
  gradcheck->add_option("--threshold", grad_threshold,
                        "fail above this max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (synth->parsed()) {
      return run_synth_data(synth_args, synth_count, synth_seconds, synth_rate,
                            synth_rir, synth_pcm16);
    }
    if (train->parsed()) {
      return run_train(train_args, train_preset);
    }
    if (enhance->parsed()) {
      return run_enhance(enhance_args, enhance_checkpoint, enhance_inputs,
                         enhance_suffix, enhance_pcm16);
    }
    if (evaluate->parsed()) {
      return run_evaluate(eval_refs, eval_ests, eval_pairs);
    }
    if (gradcheck->parsed()) {
      return run_gradcheck(grad_args, grad_frames, grad_fd_step,
                           grad_threshold);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
