#include "app/drift.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "fusion/sprt.hpp"

namespace gaitfuse::app {

namespace {

struct Acceptance {
  double genuine = 0.0, imposter = 0.0;
};

// Single-pair decisions of every session-2 held-back image against every
// session-1 enrolment image of each owner.
Acceptance score(const nn::Model& trunk, const pairing::SampleStore& store,
                 const std::vector<Subject>& session1, const std::vector<Subject>& session2,
                 double threshold) {
  std::vector<std::vector<std::vector<double>>> enrolled, probes;
  for (std::size_t i = 0; i < session1.size(); ++i) {
    enrolled.push_back(metric::embed_all(trunk, store, session1[i].train));
    probes.push_back(metric::embed_all(trunk, store, session2[i].test));
  }
  std::size_t g = 0, g_ok = 0, im = 0, im_ok = 0;
  for (std::size_t o = 0; o < enrolled.size(); ++o)
    for (std::size_t c = 0; c < probes.size(); ++c)
      for (const auto& p : probes[c])
        for (const auto& e : enrolled[o]) {
          const bool ok = metric::distance(p, e) < threshold;
          if (c == o) {
            ++g;
            g_ok += ok;
          } else {
            ++im;
            im_ok += ok;
          }
        }
  return {g ? double(g_ok) / double(g) : 0.0, im ? double(im_ok) / double(im) : 0.0};
}

void say(const Log& log, const char* fmt, double a, double b) {
  if (!log) return;
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  log(buf);
}

}  // namespace

DriftReport run_drift(const RunConfig& cfg, metric::SiameseModel& model, Dataset& data,
                      const Log& log) {
  require(cfg.dataset.source == "synthetic", ErrorCode::Config,
          "drift needs dataset.source = synthetic (walker specs)");
  const auto& d = cfg.drift;
  const double threshold = cfg.loss.margin / 2.0;
  const std::size_t n_new = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(d.new_fraction * double(d.session_images))));
  require(n_new < d.session_images, ErrorCode::Config,
          "drift: new_fraction leaves no held-back session-2 images");

  std::vector<Subject> session2;
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    const auto spec = signal::drifted_session(data.subjects[i].spec, d.cadence_shift_hz,
                                              d.amp_change, splitmix(d.seed + i));
    session2.push_back(make_subject(data.store, spec, n_new, d.session_images - n_new,
                                    cfg.preprocessing, cfg.dataset.sample_rate));
  }

  DriftReport rep;
  rep.new_images_per_subject = n_new;
  const auto before = score(model.trunk, data.store, data.subjects, session2, threshold);
  rep.untreated_acceptance = before.genuine;
  rep.untreated_imposter_acceptance = before.imposter;
  say(log, "session 2 untreated: acceptance %.3f, imposter %.3f", before.genuine,
      before.imposter);

  // Genuine logins with session-2 probes; the owner verifies by other means
  // after each reject.
  fusion::FeedbackCounter counter(cfg.fusion.feedback_threshold);
  fusion::SPRTConfig sprt = cfg.fusion.sprt;
  std::mt19937_64 rng(splitmix(d.seed ^ 0x10a1));
  const auto victims = enrolled_victims(model.trunk, data);
  std::vector<std::vector<std::vector<double>>> probes;
  for (const auto& s : session2) probes.push_back(metric::embed_all(model.trunk, data.store, s.test));
  for (std::size_t login = 0; login < d.max_logins && !rep.retrain_signalled; ++login) {
    const std::size_t owner = login % victims.size();
    sprt.k = std::min(cfg.fusion.sprt.k, victims[owner].training.size());
    const auto decision = fusion::run_sprt(probes[owner], victims[owner].training, sprt, rng());
    rep.rejected_logins += decision.outcome != fusion::Outcome::Accept;
    rep.retrain_signalled = counter.record(decision.outcome, true);
    rep.logins_before_signal = login + 1;
  }
  if (!rep.retrain_signalled) {
    rep.final_acceptance = rep.mean_acceptance = before.genuine;
    rep.final_imposter_acceptance = before.imposter;
    return rep;
  }

  // Fine-tune from the current weights on session 1 plus the new images.
  std::vector<Subject> extended = data.subjects;
  for (std::size_t i = 0; i < extended.size(); ++i)
    extended[i].train.insert(extended[i].train.end(), session2[i].train.begin(),
                             session2[i].train.end());
  pairing::PairPool pool;
  for (std::size_t o = 0; o < extended.size(); ++o)
    pool.append(pairing::PairPool::from(
        owner_buffer(extended, o, {}, splitmix(d.seed + 0x5e55 + o), cfg.train.reservoir)));

  metric::TrainConfig tc;
  tc.lr = d.lr;
  tc.epochs = d.epochs;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = splitmix(d.seed + 0xf17e);
  double sum = 0.0;
  metric::train(model, data.store, pool, tc, [&](const metric::EpochStats& s) {
    const auto a = score(model.trunk, data.store, data.subjects, session2, threshold);
    rep.epochs.push_back({s.epoch, s.loss, a.genuine, a.imposter});
    sum += a.genuine;
    say(log, "fine-tune: acceptance %.3f, imposter %.3f", a.genuine, a.imposter);
  });
  if (!rep.epochs.empty()) {
    rep.final_acceptance = rep.epochs.back().acceptance;
    rep.final_imposter_acceptance = rep.epochs.back().imposter_acceptance;
    rep.mean_acceptance = sum / double(rep.epochs.size());
  }
  return rep;
}

}  // namespace gaitfuse::app
