#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fusion/sprt.hpp"
#include "metric/losses.hpp"
#include "signal/noise.hpp"
#include "signal/spectrogram.hpp"
#include "threat/attack.hpp"

namespace gaitfuse::app {

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | csv
  std::size_t subjects = 8;
  double duration_s = 96.0;  // 14 images at the default STFT
  double sample_rate = 25.0;
  std::uint64_t seed = 1;
  std::string prefix = "s";
  // csv source: directory written by `synth` (manifest.json) or explicit files
  std::string csv_dir;
  std::vector<std::string> csv_files;
  std::size_t train_images = 8;  // per subject; the rest are held out
};

struct ModelConfig {
  std::string arch = "lenet4";
  std::uint64_t seed = 3;
};

struct TrainBlock {
  double lr = 0.01;
  std::size_t batch_size = 20;
  std::size_t epochs = 20;
  std::size_t reservoir = 0;  // R per half; 0 means r^2
  std::uint64_t seed = 5;
  double stop_below = 0.0;
  bool defense = false;  // add noised/denoised defense pairs
  std::size_t defense_realizations = 8;
};

struct TransferBlock {
  std::string source;  // checkpoint path; empty means <out>/model.gfck
  std::size_t k = 3;
  // Loss of the target model, for both arms; the source keeps its own.
  metric::LossMode loss_mode = metric::LossMode::Contrastive;
  bool baseline = true;  // also train from scratch for comparison
  std::size_t max_epochs = 200;
  double target_loss = 0.05;
  std::uint64_t target_seed = 71;
  std::size_t train_images = 8;
  std::size_t test_images = 6;
};

struct FusionBlock {
  fusion::SPRTConfig sprt;
  std::size_t feedback_threshold = 3;
  std::string stream = "model";  // model | wald | drift
  std::size_t sessions = 100;
  std::uint64_t seed = 11;
};

// Second recording session of the same walkers and the feedback retrain.
struct DriftBlock {
  double cadence_shift_hz = 0.3;
  double amp_change = 0.3;
  std::size_t session_images = 10;  // per walker in session 2
  double new_fraction = 0.2;        // of those, used for fine-tuning
  double lr = 0.001;
  std::size_t epochs = 10;
  std::size_t max_logins = 30;  // genuine logins tried before giving up on a signal
  std::uint64_t seed = 13;
};

struct ThreatBlock {
  std::vector<threat::AttackScenario> scenarios;
  signal::NoiseSpec noise;
  std::size_t attack_subjects = 50;
  std::size_t attack_images = 8;
  std::uint64_t attack_seed = 4242;
};

struct RunConfig {
  DatasetConfig dataset;
  signal::STFTConfig preprocessing;
  ModelConfig model;
  metric::LossConfig loss;
  TrainBlock train;
  TransferBlock transfer;
  FusionBlock fusion;
  DriftBlock drift;
  ThreatBlock threat;

  // Defaults, with the standard attack matrix and std_scale 0.5 Gaussian noise.
  static RunConfig defaults();
  void validate() const;
};

// Missing keys keep their defaults; unknown keys and wrong types are Config
// errors naming the offending path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
// Canonical form: every key present, fixed order, 2-space indent.
std::string to_json(const RunConfig& cfg);

}  // namespace gaitfuse::app
