#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "signal/trace.hpp"

namespace gaitfuse::signal {

inline constexpr double kMinCadenceHz = 1.4;
inline constexpr double kMaxCadenceHz = 2.6;
inline constexpr double kGravity = 9.81;

// Per axis a: sum_k amplitudes[a][k] * sin(2 pi (k+1) f t + phases[a][k]),
// plus offset[a] and N(0, noise_std^2). cadence_jitter > 0 lets the
// instantaneous cadence wander slowly by that relative amount.
struct SyntheticSubjectSpec {
  double fundamental_hz = 2.0;
  std::array<std::vector<double>, 3> amplitudes;
  std::array<std::vector<double>, 3> phases;
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  double noise_std = 0.0;
  double cadence_jitter = 0.0;
  std::uint64_t seed = 0;
  std::string subject_id;

  void validate() const;
};

SensorTrace synth_gait(const SyntheticSubjectSpec& spec, double duration_s, double sample_rate);

// Draws a plausible walker: cadence in [1.4, 2.6] Hz, three harmonics per
// axis with the vertical axis dominant, gravity on z.
SyntheticSubjectSpec random_subject(std::uint64_t seed, std::string subject_id);

// Same walker on another day: cadence shifted by `cadence_shift_hz` (kept in
// range), harmonic amplitudes rescaled by factors in [1-amp_change, 1+amp_change]
// and phases redrawn.
SyntheticSubjectSpec drifted_session(const SyntheticSubjectSpec& base, double cadence_shift_hz,
                                     double amp_change, std::uint64_t seed);

}  // namespace gaitfuse::signal
