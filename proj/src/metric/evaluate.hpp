#pragma once

#include <string>
#include <vector>

#include "metric/siamese.hpp"

namespace gaitfuse::metric {

struct CurvePoint {
  double threshold = 0.0;
  double far = 0.0;  // negatives with distance < threshold
  double frr = 0.0;  // positives with distance >= threshold
};

struct SubjectScore {
  std::string subject;
  double accuracy = 0.0;
  std::size_t pairs = 0;
};

struct EvalReport {
  double map = 0.0;  // mean over subjects of accuracy at margin / 2
  double decision_threshold = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::vector<CurvePoint> curve;
  std::vector<SubjectScore> subjects;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// 0.1, 0.15, ..., 3.0
std::vector<double> default_thresholds();

struct LabelledDistance {
  double distance = 0.0;
  int label = 0;
  std::string subject;  // owner the pair belongs to
};

// Similar iff distance < threshold. EER is read where FAR - FRR changes sign,
// interpolating linearly between the two bracketing thresholds; without a
// crossing the point with the smallest |FAR - FRR| is used.
EvalReport evaluate_distances(const std::vector<LabelledDistance>& scored,
                              const std::vector<double>& thresholds, double margin);

struct EvalPair {
  pairing::PairRecord pair;
  std::string subject;
};

EvalReport evaluate(const SiameseModel& model, const pairing::SampleStore& store,
                    const std::vector<EvalPair>& pairs, const std::vector<double>& thresholds);

}  // namespace gaitfuse::metric
