#include "fusion/sprt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"
#include "metric/losses.hpp"

namespace gaitfuse::fusion {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

void SPRTConfig::validate() const {
  require(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0, ErrorCode::InvalidArgument,
          "alpha and beta must lie in (0, 1)");
  require(B() < A(), ErrorCode::InvalidArgument, "thresholds need B < A (alpha + beta < 1)");
  require(sigma_sq > 0.0 && std::isfinite(sigma_sq) && std::isfinite(mu),
          ErrorCode::InvalidArgument, "sigma_sq must be positive");
  require(k >= 1, ErrorCode::InvalidArgument, "k must be at least 1");
  require(max_observations >= 1, ErrorCode::InvalidArgument, "max_observations must be >= 1");
}

double spatial_distance(std::span<const double> probe,
                        const std::vector<std::vector<double>>& training, std::size_t k,
                        std::mt19937_64& rng) {
  require(k >= 1 && k <= training.size(), ErrorCode::InvalidArgument,
          "k = " + std::to_string(k) + " but the training set has " +
              std::to_string(training.size()) + " samples");
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(training.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
    std::swap(idx[j], idx[pick(rng)]);
    sum += metric::distance(probe, training[idx[j]]);
  }
  return sum / static_cast<double>(k);
}

namespace {

double zscore(double d, double mu, double sigma_sq, bool use_sigma) {
  return (d - mu) / (use_sigma ? std::sqrt(sigma_sq) : sigma_sq);
}

}  // namespace

double similarity_probability(double d, double mu, double sigma_sq, bool use_sigma) {
  require(sigma_sq > 0.0, ErrorCode::InvalidArgument, "sigma_sq must be positive");
  return 1.0 - normal_cdf(zscore(d, mu, sigma_sq, use_sigma));
}

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Continue: return "continue";
    case Outcome::Accept: return "accept";
    case Outcome::Reject: return "reject";
  }
  return "?";
}

SPRTState SPRTState::start(const SPRTConfig& cfg) {
  cfg.validate();
  SPRTState s;
  s.A = cfg.A();
  s.B = cfg.B();
  return s;
}

Outcome SPRTState::outcome() const {
  if (lambda <= B) return Outcome::Accept;
  if (lambda >= A) return Outcome::Reject;
  return Outcome::Continue;
}

double likelihood_ratio(double d, const SPRTConfig& cfg) {
  const double phi =
      std::clamp(normal_cdf(zscore(d, cfg.mu, cfg.sigma_sq, cfg.use_sigma)), 1e-12, 1.0 - 1e-12);
  return phi / (1.0 - phi);
}

void likelihood_update(SPRTState& s, double d, const SPRTConfig& cfg, bool* similar) {
  const double r = likelihood_ratio(d, cfg);
  s.log_lambda += std::log(r);
  s.lambda *= r;
  ++s.n;
  if (similar) *similar = d < cfg.mu;
}

Decision run_sprt(const std::function<std::optional<double>()>& next_distance,
                  const SPRTConfig& cfg, const std::function<void(const StepRecord&)>& on_step) {
  SPRTState s = SPRTState::start(cfg);
  Decision dec;
  while (s.n < cfg.max_observations) {
    const auto d = next_distance();
    if (!d) break;
    likelihood_update(s, *d, cfg);
    const Outcome o = s.outcome();
    if (on_step)
      on_step({s.n, *d, similarity_probability(*d, cfg.mu, cfg.sigma_sq, cfg.use_sigma), s.lambda, o});
    if (o != Outcome::Continue) {
      dec.outcome = o;
      dec.n_used = s.n;
      dec.lambda = s.lambda;
      return dec;
    }
  }
  require(s.n > 0, ErrorCode::EmptyInput, "SPRT stream produced no observations");
  dec.outcome = s.lambda < 1.0 ? Outcome::Accept : Outcome::Reject;
  dec.n_used = s.n;
  dec.lambda = s.lambda;
  dec.truncated = true;
  return dec;
}

Decision run_sprt(std::span<const std::vector<double>> probes,
                  const std::vector<std::vector<double>>& training, const SPRTConfig& cfg,
                  std::uint64_t seed, const std::function<void(const StepRecord&)>& on_step) {
  std::mt19937_64 rng(seed);
  std::size_t i = 0;
  return run_sprt(
      [&]() -> std::optional<double> {
        if (i >= probes.size()) return std::nullopt;
        return spatial_distance(probes[i++], training, cfg.k, rng);
      },
      cfg, on_step);
}

FeedbackCounter::FeedbackCounter(std::size_t threshold) : t_(threshold) {
  require(threshold >= 1, ErrorCode::InvalidArgument, "feedback threshold must be >= 1");
}

bool FeedbackCounter::record(Outcome decision, bool verified_genuine) {
  if (!(decision == Outcome::Reject && verified_genuine)) return false;
  if (++c_ < t_) return false;
  c_ = 0;
  ++signals_;
  return true;
}

double sample_model_distance(bool genuine, const SPRTConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> base(0.0, 2.0 * cfg.mu), coin(0.0, 1.0);
  for (;;) {
    const double d = base(rng);
    const double p = similarity_probability(d, cfg.mu, cfg.sigma_sq, cfg.use_sigma);
    if (coin(rng) < (genuine ? p : 1.0 - p)) return d;
  }
}

}  // namespace gaitfuse::fusion
