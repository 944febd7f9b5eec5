#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gaitfuse::fusion {

// Standard normal CDF.
double normal_cdf(double z);

struct SPRTConfig {
  double alpha = 0.01;  // false negative target
  double beta = 0.01;   // false positive target
  double mu = 0.75;     // margin / 2
  double sigma_sq = 0.25;
  std::size_t k = 8;  // training samples per spatial draw
  std::size_t max_observations = 50;
  // Divide by sigma = sqrt(sigma_sq) instead of sigma_sq.
  bool use_sigma = false;

  void validate() const;
  double A() const { return (1.0 - beta) / alpha; }
  double B() const { return beta / (1.0 - alpha); }
};

// Mean distance between the probe and k training embeddings drawn without
// replacement.
double spatial_distance(std::span<const double> probe,
                        const std::vector<std::vector<double>>& training, std::size_t k,
                        std::mt19937_64& rng);

// 1 - Phi((d - mu) / sigma^2), or over sigma when use_sigma is set.
double similarity_probability(double d, double mu, double sigma_sq, bool use_sigma = false);

enum class Outcome { Continue, Accept, Reject };
const char* to_string(Outcome o) noexcept;

struct SPRTState {
  double lambda = 1.0;
  double log_lambda = 0.0;
  std::size_t n = 0;
  double A = 0.0, B = 0.0;

  static SPRTState start(const SPRTConfig& cfg);
  // Accept iff lambda <= B, Reject iff lambda >= A.
  Outcome outcome() const;
};

// Per-step ratio Phi(z) / (1 - Phi(z)) with p clamped to [1e-12, 1 - 1e-12].
// Similar batches (d < mu) have ratio < 1, dissimilar ones > 1.
double likelihood_ratio(double d, const SPRTConfig& cfg);

// lambda <- lambda * ratio(d); n <- n + 1. The batch decision (similar iff
// d < mu) is returned through `similar` when non-null.
void likelihood_update(SPRTState& s, double d, const SPRTConfig& cfg, bool* similar = nullptr);

struct StepRecord {
  std::size_t n = 0;
  double d = 0.0;
  double p = 0.0;
  double lambda = 0.0;
  Outcome outcome = Outcome::Continue;
};

struct Decision {
  Outcome outcome = Outcome::Continue;
  std::size_t n_used = 0;
  double lambda = 1.0;
  bool truncated = false;
};

// Pulls distances until a boundary is hit. When max_observations is reached
// (or the stream runs dry) without one, Accept iff lambda < 1. Throws on an
// empty stream.
Decision run_sprt(const std::function<std::optional<double>()>& next_distance,
                  const SPRTConfig& cfg,
                  const std::function<void(const StepRecord&)>& on_step = {});

// Convenience: probes are embeddings, each scored by spatial_distance.
Decision run_sprt(std::span<const std::vector<double>> probes,
                  const std::vector<std::vector<double>>& training, const SPRTConfig& cfg,
                  std::uint64_t seed, const std::function<void(const StepRecord&)>& on_step = {});

// Counts verified false negatives (Reject on a genuine user). Reaching the
// threshold emits one retrain signal and resets the count.
class FeedbackCounter {
 public:
  explicit FeedbackCounter(std::size_t threshold = 3);
  bool record(Outcome decision, bool verified_genuine);
  std::size_t count() const noexcept { return c_; }
  std::size_t threshold() const noexcept { return t_; }
  std::size_t signals() const noexcept { return signals_; }

 private:
  std::size_t c_ = 0, t_;
  std::size_t signals_ = 0;
};

// Draws a distance from the model used by the Wald simulation: base
// distribution uniform on [0, 2 mu], kept with probability p(d) for genuine
// streams and 1 - p(d) for imposters.
double sample_model_distance(bool genuine, const SPRTConfig& cfg, std::mt19937_64& rng);

}  // namespace gaitfuse::fusion
