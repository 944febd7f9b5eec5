#include "signal/pedometer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "signal/denoise.hpp"

namespace gaitfuse::signal {

std::size_t count_steps(const SensorTrace& trace) {
  trace.validate();
  require(trace.duration() >= 1.0 - 1e-12, ErrorCode::InvalidArgument,
          "step counting needs at least one second of data");
  const std::size_t n = trace.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i)
    mag[i] = std::sqrt(trace.axes[0][i] * trace.axes[0][i] + trace.axes[1][i] * trace.axes[1][i] +
                       trace.axes[2][i] * trace.axes[2][i]);
  const auto smooth = gaussian_filter(mag, 0.04 * trace.sample_rate);

  const double mean = std::accumulate(smooth.begin(), smooth.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : smooth) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (sd < 1e-9 * std::max(1.0, std::abs(mean))) return 0;
  const double threshold = mean + 0.5 * sd;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (smooth[i] > threshold && smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1])
      candidates.push_back(i);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return smooth[a] > smooth[b]; });

  const auto min_gap = static_cast<std::size_t>(std::ceil(0.25 * trace.sample_rate));
  std::vector<std::size_t> kept;
  for (std::size_t c : candidates) {
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return (c > k ? c - k : k - c) < min_gap;
    });
    if (!clash) kept.push_back(c);
  }
  return kept.size();
}

double pedometer_error(const SensorTrace& clean, const SensorTrace& noised) {
  const auto c = static_cast<double>(count_steps(clean));
  const auto m = static_cast<double>(count_steps(noised));
  if (c == 0.0) return m == 0.0 ? 0.0 : 1.0;
  return std::abs(m - c) / c;
}

}  // namespace gaitfuse::signal
