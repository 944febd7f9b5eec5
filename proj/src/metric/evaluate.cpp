#include "metric/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gaitfuse::metric {

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 58; ++i) t.push_back(0.1 + 0.05 * i);
  return t;
}

EvalReport evaluate_distances(const std::vector<LabelledDistance>& scored,
                              const std::vector<double>& thresholds, double margin) {
  require(!thresholds.empty() && std::is_sorted(thresholds.begin(), thresholds.end()),
          ErrorCode::InvalidArgument, "thresholds must be non-empty and ascending");
  EvalReport r;
  for (const auto& s : scored) (s.label ? r.positives : r.negatives)++;
  require(r.positives > 0 && r.negatives > 0, ErrorCode::InvalidArgument,
          "evaluation needs at least one positive and one negative pair");

  for (double t : thresholds) {
    std::size_t fa = 0, fr = 0;
    for (const auto& s : scored) {
      const bool similar = s.distance < t;
      if (s.label && !similar) ++fr;
      if (!s.label && similar) ++fa;
    }
    r.curve.push_back({t, double(fa) / double(r.negatives), double(fr) / double(r.positives)});
  }

  bool found = false;
  for (std::size_t i = 0; i < r.curve.size() && !found; ++i) {
    const auto& c = r.curve[i];
    const double g = c.far - c.frr;
    if (g == 0.0) {
      r.eer = c.far;
      r.eer_threshold = c.threshold;
      found = true;
    } else if (i > 0) {
      const auto& p = r.curve[i - 1];
      const double gp = p.far - p.frr;
      if (gp < 0.0 && g > 0.0) {
        const double w = -gp / (g - gp);
        r.eer = p.far + w * (c.far - p.far);
        r.eer_threshold = p.threshold + w * (c.threshold - p.threshold);
        found = true;
      }
    }
  }
  if (!found) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.curve.size(); ++i)
      if (std::abs(r.curve[i].far - r.curve[i].frr) <
          std::abs(r.curve[best].far - r.curve[best].frr))
        best = i;
    r.eer = 0.5 * (r.curve[best].far + r.curve[best].frr);
    r.eer_threshold = r.curve[best].threshold;
  }

  r.decision_threshold = margin / 2.0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per;  // correct, total
  for (const auto& s : scored) {
    auto& [ok, n] = per[s.subject];
    ok += ((s.distance < r.decision_threshold) == (s.label == 1)) ? 1 : 0;
    ++n;
  }
  double sum = 0.0;
  for (const auto& [subject, v] : per) {
    const double acc = double(v.first) / double(v.second);
    r.subjects.push_back({subject, acc, v.second});
    sum += acc;
  }
  r.map = sum / double(per.size());
  return r;
}

EvalReport evaluate(const SiameseModel& model, const pairing::SampleStore& store,
                    const std::vector<EvalPair>& pairs, const std::vector<double>& thresholds) {
  std::map<std::size_t, std::vector<double>> emb;
  auto phi = [&](std::size_t id) -> const std::vector<double>& {
    auto it = emb.find(id);
    if (it == emb.end()) it = emb.emplace(id, embed(model.trunk, store[id].pixels)).first;
    return it->second;
  };
  std::vector<LabelledDistance> scored;
  scored.reserve(pairs.size());
  for (const auto& p : pairs)
    scored.push_back({distance(phi(p.pair.left), phi(p.pair.right)), p.pair.label, p.subject});
  return evaluate_distances(scored, thresholds, model.loss.margin);
}

}  // namespace gaitfuse::metric
