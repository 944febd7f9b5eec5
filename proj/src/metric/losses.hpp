#pragma once

#include <span>
#include <string>
#include <vector>

#include "nn/model.hpp"

namespace gaitfuse::metric {

enum class LossMode { Contrastive, CrossEntropy, Joint };

const char* to_string(LossMode m) noexcept;
LossMode loss_mode_from_string(const std::string& name);

struct LossConfig {
  LossMode mode = LossMode::Joint;
  double margin = 1.5;
  double alpha = 0.1;

  void validate() const;
  bool needs_head() const noexcept { return mode != LossMode::Contrastive; }
};

inline constexpr double kProbClamp = 1e-7;

// ||a - b||_2
double distance(std::span<const double> a, std::span<const double> b);

struct ScoredPair {
  double distance = 0.0;
  int label = 0;
};

// sum of y f^2 + (1 - y) max(m - f, 0)^2
double contrastive_loss(std::span<const ScoredPair> batch, double margin);

// One dense unit and a sigmoid over |phi1 - phi2|.
nn::Model make_probability_head(std::size_t embedding_dim, std::uint64_t seed);

// sigmoid(w . |phi1 - phi2| + b); throws InvalidArgument when head is null.
double pair_probability(const nn::Model* head, std::span<const double> phi1,
                        std::span<const double> phi2);

struct ProbPair {
  double p = 0.5;
  int label = 0;
};

// -sum [y log p + (1 - y) log(1 - p)], p clamped to [1e-7, 1 - 1e-7].
double cross_entropy_pair_loss(std::span<const ProbPair> batch);

// Contrastive sum plus alpha times the cross-entropy sum over the same pairs.
double joint_loss(std::span<const ScoredPair> scored, std::span<const ProbPair> probs,
                  double margin, double alpha);

// Loss of one pair under cfg together with its gradients with respect to both
// embeddings. Head parameter gradients are accumulated into head_grad when
// the mode uses the head.
struct PairTerm {
  double loss = 0.0;
  std::vector<double> d_phi1;
  std::vector<double> d_phi2;
};

PairTerm pair_term(const LossConfig& cfg, const nn::Model* head, std::span<const double> phi1,
                   std::span<const double> phi2, int label, nn::Gradients* head_grad);

}  // namespace gaitfuse::metric
