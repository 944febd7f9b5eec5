#pragma once

#include <span>
#include <string>
#include <vector>

#include "signal/trace.hpp"

namespace gaitfuse::signal {

// Exact minimizer of 0.5*||u - x||^2 + lambda * sum_i |u[i+1] - u[i]|,
// computed with Condat's direct (taut-string style) O(n) scan.
std::vector<double> tv_denoise(std::span<const double> x, double lambda);

// Truncated (radius ceil(4 sigma)) normalized Gaussian kernel, length 2r+1.
std::vector<double> gaussian_kernel(double sigma);

// Convolution with gaussian_kernel(sigma) using half-sample symmetric
// ("reflect") extension at both ends.
std::vector<double> gaussian_filter(std::span<const double> x, double sigma);

enum class DenoiserKind { None, TotalVariation, GaussianFilter };

const char* to_string(DenoiserKind kind) noexcept;
DenoiserKind denoiser_kind_from_string(const std::string& name);

struct Denoiser {
  DenoiserKind kind = DenoiserKind::None;
  double param = 0.0;  // lambda for TV, sigma (samples) for the Gaussian filter

  std::string label() const;
};

// Applies the denoiser to each axis independently.
SensorTrace denoise_trace(const SensorTrace& trace, const Denoiser& d);

}  // namespace gaitfuse::signal
