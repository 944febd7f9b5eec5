#pragma once

#include <cstddef>
#include <vector>

#include "app/pipeline.hpp"

namespace gaitfuse::app {

struct DriftEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;
  double acceptance = 0.0;           // genuine session-2 pairs accepted
  double imposter_acceptance = 0.0;  // other walkers' session-2 pairs accepted
};

struct DriftReport {
  double untreated_acceptance = 0.0;
  double untreated_imposter_acceptance = 0.0;
  // Genuine SPRT logins on session-2 data until the feedback counter fired.
  std::size_t logins_before_signal = 0;
  std::size_t rejected_logins = 0;
  bool retrain_signalled = false;
  std::size_t new_images_per_subject = 0;
  std::vector<DriftEpoch> epochs;  // empty when no signal fired
  double final_acceptance = 0.0;
  double final_imposter_acceptance = 0.0;
  double mean_acceptance = 0.0;  // over fine-tuning epochs
};

// Session-2 recordings of the session-1 walkers in `data` (synthetic source
// only). Genuine session-2 logins run through SPRT against the session-1
// enrolment; each reject counts as a verified false negative. When the
// counter fires, `model` is fine-tuned from its weights on pairs that add the
// first new_fraction of each walker's session-2 images. Acceptance is always
// scored against the session-1 enrolment on the held-back session-2 images.
DriftReport run_drift(const RunConfig& cfg, metric::SiameseModel& model, Dataset& data,
                      const Log& log = {});

}  // namespace gaitfuse::app
