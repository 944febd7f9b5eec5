#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nn/model.hpp"
#include "signal/denoise.hpp"
#include "signal/noise.hpp"
#include "signal/spectrogram.hpp"

namespace gaitfuse::threat {

enum class AttackKind { Passive, Active };
const char* to_string(AttackKind k) noexcept;
AttackKind attack_kind_from_string(const std::string& name);

struct AttackScenario {
  AttackKind kind = AttackKind::Passive;
  signal::DenoiserKind denoiser = signal::DenoiserKind::None;
  std::size_t batch_fusion_size = 1;
  std::size_t trials = 1000;  // per victim
  std::uint64_t seed = 0;
  void validate() const;
};

// Batch sizes accepted for fusion.
inline constexpr std::size_t kFusionSizes[] = {1, 4, 8, 16, 32};

// Attacker's parameter grid per denoiser kind (lambda for TV, sigma in samples
// for the Gaussian filter). None has the single entry {None, 0}.
std::vector<signal::Denoiser> denoiser_grid(signal::DenoiserKind kind);

// A victim as the authenticator sees them: enrolled embeddings.
struct Victim {
  std::string id;
  std::vector<std::vector<double>> training;
};

struct SubjectRatio {
  std::string subject;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double ratio = 0.0;
};

struct AttackReport {
  AttackScenario scenario;
  std::string arm;  // caller's label, e.g. "defended"
  double threshold = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_ratio = 0.0;
  std::vector<SubjectRatio> subjects;  // one per victim
  std::string denoiser_used;           // winning grid entry for active attacks
  std::optional<double> pedometer_error;
};

// Replay images already embedded, one set per victim (same order as victims).
// A trial draws batch_fusion_size probes from the victim's set and as many
// enrolled embeddings; each probe is paired with one enrolled sample and the
// trial succeeds when the mean pair distance is below the threshold. Draws are
// without replacement and restart from a fresh permutation once a pool is
// exhausted.
AttackReport score_replays(const std::vector<Victim>& victims,
                           const std::vector<std::vector<std::vector<double>>>& probes,
                           double threshold, const AttackScenario& scenario);

// Every victim is attacked with images of the database subjects (unknown to
// the model). A trial picks one attacker subject uniformly, then fuses as in
// score_replays. Throws EmptyInput on an empty database.
struct AttackSample {
  nn::Tensor pixels;
  std::string subject;
};
AttackReport passive_attack(const nn::Model& trunk, double threshold,
                            const std::vector<Victim>& victims,
                            const std::vector<AttackSample>& database,
                            const AttackScenario& scenario);

// Obfuscates each victim's trace with the noise spec (seed mixed per victim),
// denoises it with every grid entry of the scenario's denoiser, cuts images
// with `stft` and replays them. The grid entry with the highest total success
// is reported. victim_traces[i] belongs to victims[i].
AttackReport active_attack(const nn::Model& trunk, double threshold,
                           const std::vector<Victim>& victims,
                           const std::vector<signal::SensorTrace>& victim_traces,
                           const signal::NoiseSpec& noise, const signal::STFTConfig& stft,
                           const AttackScenario& scenario);

// Same replay path with no obfuscation and no denoiser: how often the genuine
// owner's own held-out data is accepted.
AttackReport genuine_acceptance(const nn::Model& trunk, double threshold,
                                const std::vector<Victim>& victims,
                                const std::vector<signal::SensorTrace>& victim_traces,
                                const signal::STFTConfig& stft, const AttackScenario& scenario);

// Mean pedometer error between each trace and its obfuscated copy (noise seed
// mixed per trace as in active_attack). Traces must be at least 10 s long.
double usability_report(const std::vector<signal::SensorTrace>& victim_traces,
                        const signal::NoiseSpec& noise);

// Per-victim noise seed used by active_attack and usability_report.
std::uint64_t victim_noise_seed(std::uint64_t base, std::size_t victim);

// Images of a trace: consecutive spectrograms, each standardized.
std::vector<nn::Tensor> trace_images(const signal::SensorTrace& trace,
                                     const signal::STFTConfig& stft);

}  // namespace gaitfuse::threat
