#include <doctest.h>

#include <random>

#include "metric/siamese.hpp"
#include "signal/synth.hpp"
#include "threat/attack.hpp"

using namespace gaitfuse;
using namespace gaitfuse::threat;

namespace {

// No layers: the embedding is the input itself, so distances are set directly.
nn::Model identity_trunk() { return nn::Model({2}, {}, 0); }

nn::Tensor point(double x, double y) { return nn::Tensor({2}, {x, y}); }

signal::STFTConfig stft() {
  signal::STFTConfig c;
  c.hop = 4;
  return c;
}

std::vector<signal::SensorTrace> walker_traces(std::size_t n, double seconds) {
  std::vector<signal::SensorTrace> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(signal::synth_gait(signal::random_subject(900 + i, "w" + std::to_string(i)),
                                     seconds, 25.0));
  return out;
}

}  // namespace

TEST_CASE("scenario validation") {
  AttackScenario s;
  CHECK_NOTHROW(s.validate());
  s.trials = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s.trials = 5;
  s.batch_fusion_size = 3;
  CHECK_THROWS_AS(s.validate(), Error);
  for (std::size_t b : kFusionSizes) {
    s.batch_fusion_size = b;
    CHECK_NOTHROW(s.validate());
  }
  CHECK(attack_kind_from_string("active") == AttackKind::Active);
  CHECK_THROWS_AS(attack_kind_from_string("loud"), Error);
}

TEST_CASE("denoiser grid") {
  CHECK(denoiser_grid(signal::DenoiserKind::None).size() == 1);
  const auto tv = denoiser_grid(signal::DenoiserKind::TotalVariation);
  REQUIRE(tv.size() == 3);
  CHECK(tv[0].param == 0.1);
  CHECK(tv[2].param == 1.0);
  const auto g = denoiser_grid(signal::DenoiserKind::GaussianFilter);
  REQUIRE(g.size() == 3);
  CHECK(g[1].param == 5.0);
}

TEST_CASE("replaying the enrolled samples always succeeds") {
  const auto trunk = identity_trunk();
  std::vector<Victim> victims{{"v", {{0.3, -0.2}}}};
  std::vector<AttackSample> db{{point(0.3, -0.2), "atk"}};
  AttackScenario s;
  s.trials = 50;
  for (std::size_t b : kFusionSizes) {
    s.batch_fusion_size = b;
    const auto r = passive_attack(trunk, 0.75, victims, db, s);
    CHECK(r.success_ratio == 1.0);
    CHECK(r.trials == 50);
  }
}

TEST_CASE("passive attack errors") {
  const auto trunk = identity_trunk();
  std::vector<Victim> victims{{"v", {{0.0, 0.0}}}};
  AttackScenario s;
  CHECK_THROWS_AS(passive_attack(trunk, 0.75, victims, {}, s), Error);
  try {
    passive_attack(trunk, 0.75, victims, {}, s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  std::vector<Victim> none;
  CHECK_THROWS_AS(passive_attack(trunk, 0.75, none, {{point(0, 0), "a"}}, s), Error);
}

TEST_CASE("totals are the trial-weighted mean of per-victim ratios") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.8);
  std::vector<Victim> victims;
  std::vector<std::vector<std::vector<double>>> probes;
  for (int v = 0; v < 5; ++v) {
    Victim vic{"v" + std::to_string(v), {}};
    for (int i = 0; i < 4; ++i) vic.training.push_back({g(rng), g(rng)});
    victims.push_back(vic);
    probes.emplace_back();
    for (int i = 0; i < 7; ++i) probes.back().push_back({g(rng), g(rng)});
  }
  AttackScenario s;
  s.trials = 333;
  const auto r = score_replays(victims, probes, 0.75, s);
  REQUIRE(r.subjects.size() == 5);
  double weighted = 0.0;
  std::size_t n = 0;
  for (const auto& sub : r.subjects) {
    CHECK(sub.ratio >= 0.0);
    CHECK(sub.ratio <= 1.0);
    weighted += sub.ratio * static_cast<double>(sub.trials);
    n += sub.trials;
  }
  CHECK(std::abs(weighted / static_cast<double>(n) - r.success_ratio) < 1e-12);
  CHECK(r.success_ratio > 0.0);
  CHECK(r.success_ratio < 1.0);
}

TEST_CASE("batch fusion does not help a mostly-rejected attacker") {
  // Attack points sit around distance 1.2 from the enrolled cluster, with a
  // tail that crosses the 0.75 threshold now and then.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(1.2, 0.35);
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  std::vector<AttackSample> db;
  for (int s = 0; s < 50; ++s)
    for (int i = 0; i < 8; ++i) {
      const double r = g(rng), a = ang(rng);
      db.push_back({point(r * std::cos(a), r * std::sin(a)), "a" + std::to_string(s)});
    }
  std::vector<Victim> victims{{"v", {{0.0, 0.0}, {0.05, 0.0}, {0.0, 0.05}}}};
  const auto trunk = identity_trunk();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    AttackScenario s;
    s.trials = 4000;
    s.seed = seed;
    double prev = 2.0;
    for (std::size_t b : kFusionSizes) {
      s.batch_fusion_size = b;
      const double ratio = passive_attack(trunk, 0.75, victims, db, s).success_ratio;
      CHECK(ratio <= prev);
      prev = ratio;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("passive attack is deterministic per seed") {
  std::vector<AttackSample> db{{point(0.5, 0), "a"}, {point(0.9, 0), "a"}, {point(0, 0.7), "b"}};
  std::vector<Victim> victims{{"v", {{0.0, 0.0}, {0.1, 0.1}}}};
  AttackScenario s;
  s.trials = 200;
  s.seed = 17;
  const auto trunk = identity_trunk();
  const auto r1 = passive_attack(trunk, 0.75, victims, db, s);
  const auto r2 = passive_attack(trunk, 0.75, victims, db, s);
  CHECK(r1.successes == r2.successes);
}

TEST_CASE("usability report") {
  const auto traces = walker_traces(4, 30.0);
  signal::NoiseSpec none;
  none.std_scale = 0.0;
  CHECK(usability_report(traces, none) == 0.0);

  signal::NoiseSpec gauss;
  gauss.seed = 5;
  const double ge = usability_report(traces, gauss);
  MESSAGE("gaussian std_scale=1 pedometer error " << ge);
  CHECK(ge >= 0.0);
  CHECK(ge <= 0.23);

  signal::NoiseSpec sine;
  sine.kind = signal::NoiseKind::Sinusoid;
  sine.sinusoid_amp_ratio = 0.1;
  sine.seed = 5;
  CHECK(usability_report(traces, sine) < ge);

  CHECK_THROWS_AS(usability_report(walker_traces(1, 5.0), gauss), Error);
}

TEST_CASE("zero-amplitude obfuscation replays genuine data") {
  const auto trunk = nn::build_model(nn::lenet4(), 3);
  const auto traces = walker_traces(2, 24.0);
  std::vector<Victim> victims;
  for (const auto& t : traces) {
    Victim v{t.subject_id, {}};
    const auto imgs = trace_images(t.slice(0, 400), stft());
    for (const auto& img : imgs) v.training.push_back(metric::embed(trunk, img));
    victims.push_back(v);
  }
  AttackScenario s;
  s.kind = AttackKind::Active;
  s.trials = 40;
  s.seed = 3;
  signal::NoiseSpec zero;
  zero.std_scale = 0.0;
  const auto attack = active_attack(trunk, 0.75, victims, traces, zero, stft(), s);
  const auto genuine = genuine_acceptance(trunk, 0.75, victims, traces, stft(), s);
  CHECK(attack.successes == genuine.successes);
  CHECK(attack.success_ratio == genuine.success_ratio);
  REQUIRE(attack.pedometer_error.has_value());
  CHECK(*attack.pedometer_error == 0.0);
}
