#include "threat/attack.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "metric/losses.hpp"
#include "metric/siamese.hpp"
#include "signal/pedometer.hpp"

namespace gaitfuse::threat {

namespace {

// Index source that hands out a shuffled permutation of [0, n) and reshuffles
// when it runs out.
class Cycler {
 public:
  Cycler(std::size_t n, std::mt19937_64& rng) : perm_(n), rng_(&rng) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    pos_ = n;
  }
  std::size_t next() {
    if (pos_ == perm_.size()) {
      std::shuffle(perm_.begin(), perm_.end(), *rng_);
      pos_ = 0;
    }
    return perm_[pos_++];
  }

 private:
  std::vector<std::size_t> perm_;
  std::size_t pos_;
  std::mt19937_64* rng_;
};

bool fused_trial(const std::vector<std::vector<double>>& probes, Cycler& probe_idx,
                 const std::vector<std::vector<double>>& training, Cycler& train_idx,
                 std::size_t batch, double threshold) {
  double sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b)
    sum += metric::distance(probes[probe_idx.next()], training[train_idx.next()]);
  return sum / static_cast<double>(batch) < threshold;
}

void finish(AttackReport& r) {
  r.trials = 0;
  r.successes = 0;
  for (auto& s : r.subjects) {
    s.ratio = s.trials ? static_cast<double>(s.successes) / static_cast<double>(s.trials) : 0.0;
    r.trials += s.trials;
    r.successes += s.successes;
  }
  r.success_ratio =
      r.trials ? static_cast<double>(r.successes) / static_cast<double>(r.trials) : 0.0;
}

std::vector<std::vector<double>> embed_images(const nn::Model& trunk,
                                              const std::vector<nn::Tensor>& images) {
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(metric::embed(trunk, img));
  return out;
}

void check_victims(const std::vector<Victim>& victims) {
  require(!victims.empty(), ErrorCode::EmptyInput, "no victims to attack");
  for (const auto& v : victims)
    require(!v.training.empty(), ErrorCode::EmptyInput,
            "victim '" + v.id + "' has no enrolled samples");
}

}  // namespace

const char* to_string(AttackKind k) noexcept {
  return k == AttackKind::Passive ? "passive" : "active";
}

AttackKind attack_kind_from_string(const std::string& name) {
  if (name == "passive") return AttackKind::Passive;
  if (name == "active") return AttackKind::Active;
  fail(ErrorCode::InvalidArgument, "unknown attack kind '" + name + "'");
}

void AttackScenario::validate() const {
  require(trials >= 1, ErrorCode::InvalidArgument, "attack trials must be >= 1");
  require(std::find(std::begin(kFusionSizes), std::end(kFusionSizes), batch_fusion_size) !=
              std::end(kFusionSizes),
          ErrorCode::InvalidArgument,
          "batch_fusion_size must be one of 1, 4, 8, 16, 32 (got " +
              std::to_string(batch_fusion_size) + ")");
}

std::vector<signal::Denoiser> denoiser_grid(signal::DenoiserKind kind) {
  using signal::DenoiserKind;
  switch (kind) {
    case DenoiserKind::None: return {{DenoiserKind::None, 0.0}};
    case DenoiserKind::TotalVariation:
      return {{kind, 0.1}, {kind, 0.5}, {kind, 1.0}};
    case DenoiserKind::GaussianFilter:
      return {{kind, 2.0}, {kind, 5.0}, {kind, 10.0}};
  }
  return {};
}

std::uint64_t victim_noise_seed(std::uint64_t base, std::size_t victim) {
  return splitmix(base ^ splitmix(0xa77ac4ULL + victim));
}

std::vector<nn::Tensor> trace_images(const signal::SensorTrace& trace,
                                     const signal::STFTConfig& stft) {
  std::vector<nn::Tensor> out;
  for (auto& s : signal::spectrogram(trace, stft)) out.push_back(std::move(s.pixels));
  return out;
}

AttackReport score_replays(const std::vector<Victim>& victims,
                           const std::vector<std::vector<std::vector<double>>>& probes,
                           double threshold, const AttackScenario& scenario) {
  scenario.validate();
  check_victims(victims);
  require(probes.size() == victims.size(), ErrorCode::ShapeMismatch,
          "one probe set per victim is required");
  AttackReport r;
  r.scenario = scenario;
  r.threshold = threshold;
  for (std::size_t v = 0; v < victims.size(); ++v) {
    require(!probes[v].empty(), ErrorCode::EmptyInput,
            "no replay images for victim '" + victims[v].id + "'");
    std::mt19937_64 rng(splitmix(scenario.seed + v));
    Cycler pi(probes[v].size(), rng), ti(victims[v].training.size(), rng);
    SubjectRatio s{victims[v].id, scenario.trials, 0, 0.0};
    for (std::size_t t = 0; t < scenario.trials; ++t)
      if (fused_trial(probes[v], pi, victims[v].training, ti, scenario.batch_fusion_size,
                      threshold))
        ++s.successes;
    r.subjects.push_back(s);
  }
  finish(r);
  return r;
}

AttackReport passive_attack(const nn::Model& trunk, double threshold,
                            const std::vector<Victim>& victims,
                            const std::vector<AttackSample>& database,
                            const AttackScenario& scenario) {
  scenario.validate();
  check_victims(victims);
  require(!database.empty(), ErrorCode::EmptyInput, "attack database is empty");

  // Group the database by attacker subject, preserving first appearance.
  std::vector<std::vector<std::vector<double>>> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& a : database) {
    auto [it, fresh] = index.emplace(a.subject, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(metric::embed(trunk, a.pixels));
  }

  AttackReport r;
  r.scenario = scenario;
  r.threshold = threshold;
  r.denoiser_used = "none";
  for (std::size_t v = 0; v < victims.size(); ++v) {
    std::mt19937_64 rng(splitmix(scenario.seed + v));
    std::uniform_int_distribution<std::size_t> pick(0, groups.size() - 1);
    std::vector<Cycler> per_group;
    per_group.reserve(groups.size());
    for (const auto& g : groups) per_group.emplace_back(g.size(), rng);
    Cycler ti(victims[v].training.size(), rng);
    SubjectRatio s{victims[v].id, scenario.trials, 0, 0.0};
    for (std::size_t t = 0; t < scenario.trials; ++t) {
      const std::size_t g = pick(rng);
      if (fused_trial(groups[g], per_group[g], victims[v].training, ti,
                      scenario.batch_fusion_size, threshold))
        ++s.successes;
    }
    r.subjects.push_back(s);
  }
  finish(r);
  return r;
}

AttackReport active_attack(const nn::Model& trunk, double threshold,
                           const std::vector<Victim>& victims,
                           const std::vector<signal::SensorTrace>& victim_traces,
                           const signal::NoiseSpec& noise, const signal::STFTConfig& stft,
                           const AttackScenario& scenario) {
  scenario.validate();
  check_victims(victims);
  require(victim_traces.size() == victims.size(), ErrorCode::ShapeMismatch,
          "one trace per victim is required");

  std::vector<signal::SensorTrace> sniffed;
  for (std::size_t v = 0; v < victim_traces.size(); ++v) {
    signal::NoiseSpec n = noise;
    n.seed = victim_noise_seed(noise.seed, v);
    sniffed.push_back(signal::inject_noise(victim_traces[v], n));
  }

  std::optional<AttackReport> best;
  for (const auto& d : denoiser_grid(scenario.denoiser)) {
    std::vector<std::vector<std::vector<double>>> probes;
    for (const auto& tr : sniffed)
      probes.push_back(embed_images(trunk, trace_images(signal::denoise_trace(tr, d), stft)));
    AttackReport r = score_replays(victims, probes, threshold, scenario);
    r.denoiser_used = d.label();
    if (!best || r.success_ratio > best->success_ratio) best = std::move(r);
  }
  const bool long_enough = std::all_of(victim_traces.begin(), victim_traces.end(),
                                       [](const auto& t) { return t.duration() >= 10.0 - 1e-9; });
  if (long_enough) best->pedometer_error = usability_report(victim_traces, noise);
  return *best;
}

AttackReport genuine_acceptance(const nn::Model& trunk, double threshold,
                                const std::vector<Victim>& victims,
                                const std::vector<signal::SensorTrace>& victim_traces,
                                const signal::STFTConfig& stft, const AttackScenario& scenario) {
  require(victim_traces.size() == victims.size(), ErrorCode::ShapeMismatch,
          "one trace per victim is required");
  std::vector<std::vector<std::vector<double>>> probes;
  for (const auto& tr : victim_traces) probes.push_back(embed_images(trunk, trace_images(tr, stft)));
  AttackReport r = score_replays(victims, probes, threshold, scenario);
  r.denoiser_used = "none";
  return r;
}

double usability_report(const std::vector<signal::SensorTrace>& victim_traces,
                        const signal::NoiseSpec& noise) {
  require(!victim_traces.empty(), ErrorCode::EmptyInput, "no traces for the usability report");
  double sum = 0.0;
  for (std::size_t v = 0; v < victim_traces.size(); ++v) {
    const auto& tr = victim_traces[v];
    require(tr.duration() >= 10.0 - 1e-9, ErrorCode::InvalidArgument,
            "usability report needs traces of at least 10 s");
    signal::NoiseSpec n = noise;
    n.seed = victim_noise_seed(noise.seed, v);
    sum += signal::pedometer_error(tr, signal::inject_noise(tr, n));
  }
  return sum / static_cast<double>(victim_traces.size());
}

}  // namespace gaitfuse::threat
