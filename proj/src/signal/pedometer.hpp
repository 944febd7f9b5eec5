#pragma once

#include <cstddef>

#include "signal/trace.hpp"

namespace gaitfuse::signal {

// Peaks of the Gaussian-smoothed (sigma = 0.04 s) acceleration magnitude
// that exceed mean + 0.5 * std of the smoothed magnitude, at least 0.25 s
// apart; taller peaks win conflicts. Requires at least one second of data.
std::size_t count_steps(const SensorTrace& trace);

// |steps(noised) - steps(clean)| / steps(clean); zero when both counts are zero.
double pedometer_error(const SensorTrace& clean, const SensorTrace& noised);

}  // namespace gaitfuse::signal
