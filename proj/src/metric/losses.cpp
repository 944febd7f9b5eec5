#include "metric/losses.hpp"

#include <algorithm>
#include <cmath>

namespace gaitfuse::metric {

const char* to_string(LossMode m) noexcept {
  switch (m) {
    case LossMode::Contrastive: return "contrastive";
    case LossMode::CrossEntropy: return "cross_entropy";
    case LossMode::Joint: return "joint";
  }
  return "?";
}

LossMode loss_mode_from_string(const std::string& name) {
  for (auto m : {LossMode::Contrastive, LossMode::CrossEntropy, LossMode::Joint})
    if (name == to_string(m)) return m;
  fail(ErrorCode::InvalidArgument, "unknown loss mode '" + name + "'");
}

void LossConfig::validate() const {
  require(margin > 0.0 && std::isfinite(margin), ErrorCode::InvalidArgument,
          "margin must be positive");
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorCode::InvalidArgument,
          "alpha must be non-negative");
}

double distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch,
          "distance between vectors of length " + std::to_string(a.size()) + " and " +
              std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double contrastive_loss(std::span<const ScoredPair> batch, double margin) {
  double total = 0.0;
  for (const auto& p : batch) {
    const double hinge = std::max(margin - p.distance, 0.0);
    total += p.label ? p.distance * p.distance : hinge * hinge;
  }
  return total;
}

nn::Model make_probability_head(std::size_t embedding_dim, std::uint64_t seed) {
  nn::Model head({embedding_dim}, {nn::LayerSpec::dense(1), nn::LayerSpec::sigmoid()}, seed);
  head.initialize();
  return head;
}

namespace {

nn::Tensor abs_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "embedding lengths differ");
  nn::Tensor t({a.size()});
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = std::abs(a[i] - b[i]);
  return t;
}

double clamp_p(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double ce_term(double p, int y) {
  const double q = clamp_p(p);
  return y ? -std::log(q) : -std::log(1.0 - q);
}

}  // namespace

double pair_probability(const nn::Model* head, std::span<const double> phi1,
                        std::span<const double> phi2) {
  require(head != nullptr, ErrorCode::InvalidArgument, "probability head is absent");
  return nn::forward(*head, abs_diff(phi1, phi2)).output[0];
}

double cross_entropy_pair_loss(std::span<const ProbPair> batch) {
  double total = 0.0;
  for (const auto& p : batch) total += ce_term(p.p, p.label);
  return total;
}

double joint_loss(std::span<const ScoredPair> scored, std::span<const ProbPair> probs,
                  double margin, double alpha) {
  require(scored.size() == probs.size(), ErrorCode::InvalidArgument,
          "joint loss needs both terms for every pair");
  return contrastive_loss(scored, margin) + alpha * cross_entropy_pair_loss(probs);
}

PairTerm pair_term(const LossConfig& cfg, const nn::Model* head, std::span<const double> phi1,
                   std::span<const double> phi2, int label, nn::Gradients* head_grad) {
  const std::size_t n = phi1.size();
  require(phi2.size() == n, ErrorCode::ShapeMismatch, "embedding lengths differ");
  PairTerm t;
  t.d_phi1.assign(n, 0.0);
  t.d_phi2.assign(n, 0.0);

  if (cfg.mode != LossMode::CrossEntropy) {
    const double f = distance(phi1, phi2);
    const ScoredPair sp{f, label};
    t.loss += contrastive_loss({&sp, 1}, cfg.margin);
    // dL/df, then df/dphi1 = (phi1 - phi2) / f. At f = 0 the subgradient 0 is used.
    double dldf = 0.0;
    if (label) dldf = 2.0 * f;
    else if (f < cfg.margin) dldf = -2.0 * (cfg.margin - f);
    if (label) {
      for (std::size_t i = 0; i < n; ++i) {
        t.d_phi1[i] += 2.0 * (phi1[i] - phi2[i]);
        t.d_phi2[i] -= 2.0 * (phi1[i] - phi2[i]);
      }
    } else if (dldf != 0.0 && f > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double g = dldf * (phi1[i] - phi2[i]) / f;
        t.d_phi1[i] += g;
        t.d_phi2[i] -= g;
      }
    }
  }

  if (cfg.needs_head()) {
    require(head != nullptr, ErrorCode::InvalidArgument, "probability head is absent");
    const double w = cfg.mode == LossMode::Joint ? cfg.alpha : 1.0;
    const nn::Tensor x = abs_diff(phi1, phi2);
    auto fr = nn::forward(*head, x);
    const double p = fr.output[0];
    t.loss += w * ce_term(p, label);
    // The clamp is flat outside [1e-7, 1 - 1e-7].
    double dldp = 0.0;
    if (p > kProbClamp && p < 1.0 - kProbClamp) dldp = label ? -1.0 / p : 1.0 / (1.0 - p);
    dldp *= w;
    if (dldp != 0.0) {
      nn::Gradients local = nn::Gradients::zeros_like(*head);
      nn::Gradients& g = head_grad ? *head_grad : local;
      nn::Tensor dx;
      nn::backward_accumulate(*head, fr.cache, nn::Tensor({1}, dldp), g, &dx);
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = phi1[i] - phi2[i];
        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        t.d_phi1[i] += dx[i] * s;
        t.d_phi2[i] -= dx[i] * s;
      }
    }
  }
  return t;
}

}  // namespace gaitfuse::metric
