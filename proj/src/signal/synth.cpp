#include "signal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "common/error.hpp"

namespace gaitfuse::signal {

void SyntheticSubjectSpec::validate() const {
  require(fundamental_hz >= kMinCadenceHz && fundamental_hz <= kMaxCadenceHz,
          ErrorCode::InvalidArgument, "fundamental frequency outside [1.4, 2.6] Hz");
  for (int a = 0; a < 3; ++a) {
    require(amplitudes[a].size() == phases[a].size(), ErrorCode::InvalidArgument,
            "amplitude and phase counts differ");
    for (double v : amplitudes[a])
      require(v >= 0.0 && std::isfinite(v), ErrorCode::InvalidArgument,
              "harmonic amplitudes must be non-negative");
  }
  require(noise_std >= 0.0 && cadence_jitter >= 0.0 && cadence_jitter < 0.5,
          ErrorCode::InvalidArgument, "noise_std and cadence_jitter out of range");
}

SensorTrace synth_gait(const SyntheticSubjectSpec& spec, double duration_s, double sample_rate) {
  spec.validate();
  require(sample_rate > 0.0 && duration_s * sample_rate >= 1.0, ErrorCode::InvalidArgument,
          "duration * sample_rate must be at least 1");
  const auto n = static_cast<std::size_t>(std::floor(duration_s * sample_rate));
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Slow cadence wander: two sub-0.1 Hz tones with random phases.
  const double w1 = 0.03 + 0.04 * unit(rng), w2 = 0.07 + 0.05 * unit(rng);
  const double p1 = 2.0 * std::numbers::pi * unit(rng), p2 = 2.0 * std::numbers::pi * unit(rng);

  SensorTrace t;
  t.sample_rate = sample_rate;
  t.subject_id = spec.subject_id;
  for (auto& a : t.axes) a.resize(n);
  double cycle_phase = 0.0;  // integral of 2 pi f(t) dt
  const double dt = 1.0 / sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = static_cast<double>(i) * dt;
    for (int a = 0; a < 3; ++a) {
      double v = spec.offset[a];
      for (std::size_t k = 0; k < spec.amplitudes[a].size(); ++k)
        v += spec.amplitudes[a][k] *
             std::sin(static_cast<double>(k + 1) * cycle_phase + spec.phases[a][k]);
      t.axes[a][i] = v;
    }
    double f = spec.fundamental_hz;
    if (spec.cadence_jitter > 0.0)
      f *= 1.0 + spec.cadence_jitter * 0.5 *
                     (std::sin(2.0 * std::numbers::pi * w1 * ti + p1) +
                      std::sin(2.0 * std::numbers::pi * w2 * ti + p2));
    cycle_phase += 2.0 * std::numbers::pi * f * dt;
  }
  if (spec.noise_std > 0.0)
    for (auto& a : t.axes)
      for (double& v : a) v += spec.noise_std * gauss(rng);
  return t;
}

SyntheticSubjectSpec random_subject(std::uint64_t seed, std::string subject_id) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticSubjectSpec s;
  s.subject_id = std::move(subject_id);
  s.seed = seed ^ 0x9e3779b97f4a7c15ULL;
  s.fundamental_hz = kMinCadenceHz + (kMaxCadenceHz - kMinCadenceHz) * unit(rng);
  // Vertical (z) dominant, lateral weakest; harmonic decay varies per person.
  const std::array<double, 3> scale{1.2, 0.8, 2.5};
  for (int a = 0; a < 3; ++a) {
    s.amplitudes[a].resize(3);
    s.phases[a].resize(3);
    for (int k = 0; k < 3; ++k) {
      s.amplitudes[a][k] = scale[a] * (0.15 + 0.85 * unit(rng)) / (1.0 + 0.5 * k);
      s.phases[a][k] = 2.0 * std::numbers::pi * unit(rng);
    }
  }
  // Keep the cadence harmonic clearly dominant on z so steps are countable.
  s.amplitudes[2][0] = std::max(s.amplitudes[2][0], 1.5);
  s.offset = {0.0, 0.0, kGravity};
  s.noise_std = 0.25;
  s.cadence_jitter = 0.02;
  return s;
}

SyntheticSubjectSpec drifted_session(const SyntheticSubjectSpec& base, double cadence_shift_hz,
                                     double amp_change, std::uint64_t seed) {
  base.validate();
  require(!base.amplitudes[2].empty(), ErrorCode::InvalidArgument,
          "drifted session needs a vertical harmonic");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticSubjectSpec s = base;
  double f = base.fundamental_hz + cadence_shift_hz;
  if (f > kMaxCadenceHz || f < kMinCadenceHz) f = base.fundamental_hz - cadence_shift_hz;
  s.fundamental_hz = std::clamp(f, kMinCadenceHz, kMaxCadenceHz);
  for (int a = 0; a < 3; ++a)
    for (std::size_t k = 0; k < s.amplitudes[a].size(); ++k) {
      s.amplitudes[a][k] *= 1.0 + amp_change * (2.0 * unit(rng) - 1.0);
      s.phases[a][k] = 2.0 * std::numbers::pi * unit(rng);
    }
  s.amplitudes[2][0] = std::max(s.amplitudes[2][0], 1.5);
  s.seed = seed ^ base.seed;
  return s;
}

}  // namespace gaitfuse::signal
