#include "signal/spectrogram.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>

#include "common/error.hpp"

namespace gaitfuse::signal {

namespace {

// The FFTW planner is not thread-safe; plans are created once per size under
// a lock and executed through the new-array interface afterwards.
fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<double> in(n);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                     reinterpret_cast<fftw_complex*>(out.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, p);
  return p;
}

std::vector<double> make_window(const STFTConfig& cfg) {
  std::vector<double> w(cfg.window_len, 1.0);
  if (cfg.window == WindowKind::Hann) {
    const double n = static_cast<double>(cfg.window_len);
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  return w;
}

}  // namespace

void STFTConfig::validate() const {
  require(window_len >= 1 && window_len <= fft_len, ErrorCode::InvalidArgument,
          "need 1 <= window_len <= fft_len");
  require(hop <= window_len, ErrorCode::InvalidArgument, "hop must not exceed window_len");
  require(freq_bins_kept * 3 == kImageRows, ErrorCode::InvalidArgument,
          "freq_bins_kept must be 11 (3 stacked axes = 33 rows)");
  require(frames_kept == kImageCols, ErrorCode::InvalidArgument, "frames_kept must be 42");
  require(freq_bins_kept <= fft_len / 2 + 1, ErrorCode::InvalidArgument,
          "fft_len too small for the kept bins");
  require(std::isfinite(log_floor), ErrorCode::InvalidArgument, "log_floor must be finite");
}

std::size_t effective_hop(const STFTConfig& cfg, std::size_t trace_len) {
  if (cfg.hop != 0) return cfg.hop;
  if (trace_len <= cfg.window_len) return 1;
  const std::size_t hop = (trace_len - cfg.window_len) / (cfg.frames_kept - 1);
  return std::clamp<std::size_t>(hop, 1, cfg.window_len);
}

nn::Tensor raw_log_spectrogram(const SensorTrace& trace, const STFTConfig& cfg,
                               std::size_t index) {
  cfg.validate();
  trace.validate();
  const std::size_t hop = effective_hop(cfg, trace.size());
  const std::size_t first = index * cfg.frames_kept;
  const std::size_t needed = first * hop + cfg.required_length(hop);
  if (trace.size() < needed)
    fail(ErrorCode::InvalidArgument,
         "trace of " + std::to_string(trace.size()) + " samples is too short: image " +
             std::to_string(index) + " needs " + std::to_string(needed) + " samples");

  const auto window = make_window(cfg);
  const fftw_plan plan = r2c_plan(cfg.fft_len);
  std::vector<double> buf(cfg.fft_len, 0.0);
  std::vector<std::complex<double>> spec(cfg.fft_len / 2 + 1);

  nn::Tensor img({1, kImageRows, kImageCols});
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& x = trace.axes[a];
    for (std::size_t f = 0; f < cfg.frames_kept; ++f) {
      const std::size_t start = (first + f) * hop;
      std::fill(buf.begin(), buf.end(), 0.0);
      for (std::size_t i = 0; i < cfg.window_len; ++i) buf[i] = x[start + i] * window[i];
      fftw_execute_dft_r2c(plan, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
      for (std::size_t b = 0; b < cfg.freq_bins_kept; ++b) {
        const double mag = std::abs(spec[b]);
        const double v = mag > 0.0 ? std::max(std::log(mag), cfg.log_floor) : cfg.log_floor;
        img[(a * cfg.freq_bins_kept + b) * kImageCols + f] = v;
      }
    }
  }
  return img;
}

void standardize(nn::Tensor& image) {
  const double n = static_cast<double>(image.size());
  double mean = 0.0;
  for (double v : image.values()) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : image.values()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : image.values()) v = sd > 0.0 ? (v - mean) / sd : v - mean;
}

std::vector<SpectrogramImage> spectrogram(const SensorTrace& trace, const STFTConfig& cfg) {
  cfg.validate();
  trace.validate();
  const std::size_t hop = effective_hop(cfg, trace.size());
  if (trace.size() < cfg.required_length(hop))
    fail(ErrorCode::InvalidArgument,
         "trace of " + std::to_string(trace.size()) + " samples is too short; need at least " +
             std::to_string(cfg.required_length(hop)) + " samples");
  const std::size_t frames = (trace.size() - cfg.window_len) / hop + 1;
  const std::size_t images = frames / cfg.frames_kept;
  std::vector<SpectrogramImage> out;
  out.reserve(images);
  for (std::size_t i = 0; i < images; ++i) {
    SpectrogramImage s{raw_log_spectrogram(trace, cfg, i), trace.subject_id, i};
    standardize(s.pixels);
    out.push_back(std::move(s));
  }
  return out;
}

std::string spectrogram_csv(const nn::Tensor& image) {
  require(image.size() == kImageRows * kImageCols, ErrorCode::ShapeMismatch,
          "spectrogram must hold 33x42 pixels");
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < kImageRows; ++r) {
    for (std::size_t c = 0; c < kImageCols; ++c) {
      if (c) out += ',';
      auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), image[r * kImageCols + c]);
      out.append(buf, p);
    }
    out += '\n';
  }
  return out;
}

}  // namespace gaitfuse::signal
