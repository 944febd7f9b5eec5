#include "signal/denoise.hpp"

#include <cmath>
#include <cstdio>

#include "common/error.hpp"

namespace gaitfuse::signal {

std::vector<double> tv_denoise(std::span<const double> x, double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument,
          "tv lambda must be positive");
  const std::size_t n = x.size();
  std::vector<double> out(n);
  if (n == 0) return out;

  // Dual variable u is kept between -lambda and lambda; [vmin, vmax] brackets
  // the value of the segment that starts at k0.
  std::size_t k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = x[0] - lambda, vmax = x[0] + lambda;

  auto emit = [&](double v, std::size_t last) {
    do {
      out[k0++] = v;
    } while (k0 <= last);
  };

  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {  // segment value too high: negative jump
        emit(vmin, kminus);
        k = kminus = k0;
        vmin = x[k0];
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {  // too low: positive jump
        emit(vmax, kplus);
        k = kplus = k0;
        vmax = x[k0];
        umax = -lambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        emit(vmin, k);
        return out;
      }
    }
    umin += x[k + 1] - vmin;
    if (umin < -lambda) {
      emit(vmin, kminus);
      k = kminus = kplus = k0;
      vmin = x[k0];
      vmax = vmin + 2.0 * lambda;
      umin = lambda;
      umax = -lambda;
      continue;
    }
    umax += x[k + 1] - vmax;
    if (umax > lambda) {
      emit(vmax, kplus);
      k = kminus = kplus = k0;
      vmax = x[k0];
      vmin = vmax - 2.0 * lambda;
      umin = lambda;
      umax = -lambda;
      continue;
    }
    ++k;
    if (umin >= lambda) {
      kminus = k;
      vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
      umin = lambda;
    }
    if (umax <= -lambda) {
      kplus = k;
      vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
      umax = -lambda;
    }
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument,
          "gaussian sigma must be positive");
  const auto r = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> gaussian_filter(std::span<const double> x, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size(), 0.0);
  if (n == 0) return out;
  const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::ptrdiff_t period = 2 * n;
  // Half-sample symmetric extension is periodic with period 2n.
  auto at = [&](std::ptrdiff_t i) {
    std::ptrdiff_t m = ((i % period) + period) % period;
    if (m >= n) m = period - 1 - m;
    return x[static_cast<std::size_t>(m)];
  };
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    if (i >= r && i + r < n) {
      for (std::ptrdiff_t j = -r; j <= r; ++j)
        acc += kernel[static_cast<std::size_t>(j + r)] * x[static_cast<std::size_t>(i - j)];
    } else {
      for (std::ptrdiff_t j = -r; j <= r; ++j)
        acc += kernel[static_cast<std::size_t>(j + r)] * at(i - j);
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

const char* to_string(DenoiserKind kind) noexcept {
  switch (kind) {
    case DenoiserKind::None: return "none";
    case DenoiserKind::TotalVariation: return "tv";
    case DenoiserKind::GaussianFilter: return "gaussian_filter";
  }
  return "?";
}

DenoiserKind denoiser_kind_from_string(const std::string& name) {
  for (auto k : {DenoiserKind::None, DenoiserKind::TotalVariation, DenoiserKind::GaussianFilter})
    if (name == to_string(k)) return k;
  fail(ErrorCode::InvalidArgument, "unknown denoiser '" + name + "'");
}

std::string Denoiser::label() const {
  if (kind == DenoiserKind::None) return "none";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s(%g)", to_string(kind), param);
  return buf;
}

SensorTrace denoise_trace(const SensorTrace& trace, const Denoiser& d) {
  SensorTrace out = trace;
  if (d.kind == DenoiserKind::None) return out;
  for (int a = 0; a < 3; ++a)
    out.axes[a] = d.kind == DenoiserKind::TotalVariation ? tv_denoise(trace.axes[a], d.param)
                                                         : gaussian_filter(trace.axes[a], d.param);
  return out;
}

}  // namespace gaitfuse::signal
