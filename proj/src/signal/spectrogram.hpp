#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nn/tensor.hpp"
#include "signal/trace.hpp"

namespace gaitfuse::signal {

enum class WindowKind { Hann, Rectangular };

struct STFTConfig {
  std::size_t window_len = 32;
  std::size_t hop = 0;  // 0: derive from trace length so one image spans it
  std::size_t fft_len = 32;
  std::size_t freq_bins_kept = 11;
  std::size_t frames_kept = 42;
  double log_floor = -10.0;
  WindowKind window = WindowKind::Hann;

  void validate() const;
  // Samples needed for one full image at the given hop.
  std::size_t required_length(std::size_t hop_used) const {
    return window_len + hop_used * (frames_kept - 1);
  }
};

inline constexpr std::size_t kImageRows = 33;
inline constexpr std::size_t kImageCols = 42;

// 33x42 model input; pixels is shaped [1, 33, 42] so it feeds the trunk as is.
struct SpectrogramImage {
  nn::Tensor pixels;
  std::string subject_id;
  std::size_t segment_index = 0;
};

std::size_t effective_hop(const STFTConfig& cfg, std::size_t trace_len);

// Log-magnitude STFT of image `index`, rows [11a, 11a+11) holding axis a,
// before standardization. Pixels are max(log|X|, log_floor).
nn::Tensor raw_log_spectrogram(const SensorTrace& trace, const STFTConfig& cfg,
                               std::size_t index = 0);

// Zero mean and unit (population) standard deviation. A constant image is
// only centred.
void standardize(nn::Tensor& image);

// Every complete image in the trace: frames are laid on one hop grid and
// grouped 42 at a time. Throws InvalidArgument stating the required length
// when not even one image fits.
std::vector<SpectrogramImage> spectrogram(const SensorTrace& trace, const STFTConfig& cfg);

// Debug dump: 33 lines of 42 comma-separated values.
std::string spectrogram_csv(const nn::Tensor& image);

}  // namespace gaitfuse::signal
