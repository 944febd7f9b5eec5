#include "signal/noise.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "common/error.hpp"

namespace gaitfuse::signal {

namespace {

double stddev(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(x.size()));
}

}  // namespace

const char* to_string(NoiseKind kind) noexcept {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Laplacian: return "laplacian";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Sinusoid: return "sinusoid";
  }
  return "?";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  for (auto k : {NoiseKind::Gaussian, NoiseKind::Laplacian, NoiseKind::Uniform,
                 NoiseKind::Sinusoid})
    if (name == to_string(k)) return k;
  fail(ErrorCode::InvalidArgument, "unknown noise kind '" + name + "'");
}

void NoiseSpec::validate() const {
  require(std_scale >= 0.0 && std::isfinite(std_scale), ErrorCode::InvalidArgument,
          "std_scale must be non-negative");
  require(sinusoid_amp_ratio >= 0.0 && std::isfinite(sinusoid_amp_ratio),
          ErrorCode::InvalidArgument, "sinusoid_amp_ratio must be non-negative");
  require(sinusoid_freq > 0.0 && std::isfinite(sinusoid_freq), ErrorCode::InvalidArgument,
          "sinusoid_freq must be positive");
}

std::vector<double> moving_window_std(std::span<const double> x, std::size_t window) {
  require(window >= 1, ErrorCode::InvalidArgument, "moving window must be >= 1");
  std::vector<double> out(x.size());
  if (x.size() < window) {
    std::fill(out.begin(), out.end(), stddev(x));
    return out;
  }
  for (std::size_t i = window - 1; i < x.size(); ++i)
    out[i] = stddev(x.subspan(i + 1 - window, window));
  for (std::size_t i = 0; i + 1 < window; ++i) out[i] = out[window - 1];
  return out;
}

SensorTrace inject_noise(const SensorTrace& trace, const NoiseSpec& spec) {
  spec.validate();
  trace.validate();
  SensorTrace out = trace;
  std::mt19937_64 rng(spec.seed);
  const std::size_t window =
      spec.moving_window ? spec.moving_window
                         : std::max<std::size_t>(1, static_cast<std::size_t>(
                                                        std::lround(trace.sample_rate)));

  if (spec.kind == NoiseKind::Sinusoid) {
    if (spec.sinusoid_amp_ratio == 0.0) return out;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int a = 0; a < 3; ++a) {
      const double amp = spec.sinusoid_amp_ratio * stddev(trace.axes[a]);
      const double ph = phase(rng);
      for (std::size_t i = 0; i < trace.size(); ++i) {
        const double t = static_cast<double>(i) / trace.sample_rate;
        out.axes[a][i] += amp * std::sin(2.0 * std::numbers::pi * spec.sinusoid_freq * t + ph);
      }
    }
    return out;
  }

  if (spec.std_scale == 0.0) return out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Unit-variance Laplace has scale 1/sqrt(2); unit-variance uniform spans +-sqrt(3).
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> uni(-std::sqrt(3.0), std::sqrt(3.0));
  std::bernoulli_distribution coin(0.5);
  for (int a = 0; a < 3; ++a) {
    const auto sd = moving_window_std(trace.axes[a], window);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      double z = 0.0;
      switch (spec.kind) {
        case NoiseKind::Gaussian: z = gauss(rng); break;
        case NoiseKind::Laplacian:
          z = (coin(rng) ? 1.0 : -1.0) * expo(rng) / std::sqrt(2.0);
          break;
        case NoiseKind::Uniform: z = uni(rng); break;
        case NoiseKind::Sinusoid: break;
      }
      out.axes[a][i] += spec.std_scale * sd[i] * z;
    }
  }
  return out;
}

}  // namespace gaitfuse::signal

namespace gaitfuse::signal {

NoiseSpec fingerprint_spec(std::uint64_t device_seed) {
  std::mt19937_64 rng(device_seed);
  NoiseSpec s;
  s.kind = NoiseKind::Sinusoid;
  s.sinusoid_freq = std::uniform_real_distribution<double>(1.4, 2.6)(rng);
  s.sinusoid_amp_ratio = 0.1;
  s.seed = rng();
  return s;
}

}  // namespace gaitfuse::signal
