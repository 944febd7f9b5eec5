#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gaitfuse::signal {

// Uniformly sampled 3-axis accelerometer series (m/s^2).
struct SensorTrace {
  double sample_rate = 0.0;  // Hz
  std::array<std::vector<double>, 3> axes;
  std::string subject_id;

  std::size_t size() const noexcept { return axes[0].size(); }
  double duration() const noexcept {
    return sample_rate > 0.0 ? static_cast<double>(size()) / sample_rate : 0.0;
  }

  // Throws InvalidArgument unless the trace is non-empty, finite, consistently
  // sized and has a positive rate.
  void validate() const;

  // Samples [begin, begin + count) as a new trace.
  SensorTrace slice(std::size_t begin, std::size_t count) const;

  bool operator==(const SensorTrace&) const = default;
};

// Reads a `t,ax,ay,az` CSV (columns found by header name, extra columns
// ignored) and resamples it onto a uniform grid by linear interpolation. When
// no rate is given, the mean sampling interval of the file is used.
SensorTrace ingest_csv(const std::filesystem::path& path,
                       std::optional<double> sample_rate = std::nullopt);

// Writes the trace as `t,ax,ay,az` with shortest round-trip number formatting.
void write_csv(const SensorTrace& trace, const std::filesystem::path& path);

}  // namespace gaitfuse::signal
