#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "signal/trace.hpp"

namespace gaitfuse::signal {

enum class NoiseKind { Gaussian, Laplacian, Uniform, Sinusoid };

const char* to_string(NoiseKind kind) noexcept;
NoiseKind noise_kind_from_string(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  std::size_t moving_window = 0;  // samples; 0 means one second of samples
  double std_scale = 1.0;
  double sinusoid_freq = 2.0;  // Hz
  double sinusoid_amp_ratio = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Causal moving-window standard deviation: sample i uses x[i-w+1..i]; the
// first w-1 samples reuse the first full window. Shorter series use their
// overall deviation.
std::vector<double> moving_window_std(std::span<const double> x, std::size_t window);

// Additive obfuscation. Random kinds are zero mean with per-sample standard
// deviation std_scale * moving_window_std; the sinusoid has amplitude
// sinusoid_amp_ratio * (whole-axis std) and a seeded per-axis phase.
SensorTrace inject_noise(const SensorTrace& trace, const NoiseSpec& spec);

}  // namespace gaitfuse::signal

namespace gaitfuse::signal {

// Secret low-frequency fingerprint for one device: frequency drawn from the
// gait band [1.4, 2.6] Hz, amplitude ratio 0.1, phase derived from the seed.
NoiseSpec fingerprint_spec(std::uint64_t device_seed);

}  // namespace gaitfuse::signal
