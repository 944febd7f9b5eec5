// One PASS/FAIL line per acceptance criterion. Usage: acceptance <scratch dir>

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "../unit/fd.hpp"
#include "app/commands.hpp"
#include "app/config.hpp"
#include "fusion/sprt.hpp"
#include "metric/siamese.hpp"
#include "nn/checkpoint.hpp"
#include "nn/model.hpp"
#include "pairing/pairs.hpp"

using namespace gaitfuse;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Tolerances, pinned.
constexpr double kGradTol = 1e-5;
constexpr double kGradSuiteSeconds = 60.0;
constexpr double kLossExactTol = 1e-12;
constexpr double kInclusionTol = 0.02;
constexpr double kChiSquareP = 0.01;
constexpr std::size_t kReservoirTrials = 20000;
constexpr std::size_t kWaldStreams = 10000;
constexpr double kWaldErrorMax = 0.02;
constexpr double kMeanObservationsMax = 8.0;
constexpr double kMapMin = 0.90;
constexpr double kEerMax = 0.10;
constexpr double kTrainSecondsMax = 600.0;
constexpr std::size_t kEpochsMax = 200;
constexpr double kUndefendedMin = 0.50;
constexpr double kDefendedMax = 0.10;
constexpr double kGenuineDropMax = 0.05;
constexpr double kPassiveAtBatch32Max = 0.03;
constexpr double kEpochRatioMin = 5.0;
constexpr double kEpochSpeedupMin = 2.0;
constexpr double kMapLossPointsMax = 5.0;
constexpr double kUntreatedMax = 0.5;
constexpr double kRetrainedMin = 0.8;
constexpr double kReferenceParams = 186360.0;
constexpr double kParamRelTol = 0.10;

int failures = 0;

void line(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s [%2d] %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::vector<std::uint8_t> bytes_of(const fs::path& p) { return nn::read_file(p); }

// ---- 1: gradients -------------------------------------------------------

nn::Tensor random_tensor(const nn::Shape& s, std::mt19937_64& rng) {
  nn::Tensor t(s);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.values()) v = u(rng);
  return t;
}

double layer_stack_err(std::vector<nn::LayerSpec> specs, nn::Shape in, std::uint64_t seed) {
  nn::Model m(in, std::move(specs), seed);
  m.initialize();
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& l : m.layers())
    for (double& v : l.bias.values()) v = u(rng);
  nn::Tensor x = random_tensor(in, rng);
  const nn::Tensor r = random_tensor(m.output_shape(), rng);
  auto f = [&] {
    const nn::Tensor y = nn::forward(m, x).output;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
  };
  auto fr = nn::forward(m, x);
  nn::Gradients g = nn::Gradients::zeros_like(m);
  nn::Tensor dx;
  nn::backward_accumulate(m, fr.cache, r, g, &dx);
  double worst = fdcheck::max_rel_err(x.values(), dx.values(), f);
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    auto& l = m.layers()[i];
    if (!l.spec.has_weights()) continue;
    worst = std::max(worst, fdcheck::max_rel_err(l.weight.values(), g.weight[i].values(), f));
    worst = std::max(worst, fdcheck::max_rel_err(l.bias.values(), g.bias[i].values(), f));
  }
  return worst;
}

double loss_through_trunk_err(metric::LossMode mode) {
  std::mt19937_64 rng(6);
  pairing::SampleStore store;
  for (std::size_t i = 0; i < 6; ++i)
    store.add({random_tensor({1, 6, 6}, rng), i < 3 ? "a" : "b", pairing::SampleOrigin::Genuine});
  const std::vector<pairing::PairRecord> batch{{0, 1, 1}, {0, 4, 0}, {2, 5, 0},
                                               {3, 3, 1}, {1, 2, 1}, {5, 1, 0}};
  const nn::ArchSpec arch{"tiny",
                          {1, 6, 6},
                          {nn::LayerSpec::conv2d(3, 3, 3, 1), nn::LayerSpec::relu(),
                           nn::LayerSpec::maxpool(2), nn::LayerSpec::flatten(),
                           nn::LayerSpec::dense(5)}};
  metric::LossConfig cfg;
  cfg.mode = mode;
  auto m = metric::make_siamese(arch, cfg, 11);
  for (auto& l : m.trunk.layers())
    for (double& b : l.bias.values()) b = 0.05;
  const auto g = metric::batch_gradient(m, store, batch);
  auto f = [&] { return metric::batch_gradient(m, store, batch).loss_sum; };
  double worst = 0.0;
  for (std::size_t i : m.trunk.weight_layer_indices()) {
    auto& l = m.trunk.layers()[i];
    worst = std::max(worst, fdcheck::max_rel_err(l.weight.values(), g.trunk.weight[i].values(), f));
    worst = std::max(worst, fdcheck::max_rel_err(l.bias.values(), g.trunk.bias[i].values(), f));
  }
  if (m.head) {
    auto& l = m.head->layers()[0];
    worst = std::max(worst, fdcheck::max_rel_err(l.weight.values(), g.head.weight[0].values(), f));
    worst = std::max(worst, fdcheck::max_rel_err(l.bias.values(), g.head.bias[0].values(), f));
  }
  return worst;
}

void criterion_gradients() {
  using nn::LayerSpec;
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> err;
  err["conv2d"] = layer_stack_err({LayerSpec::conv2d(3, 3, 3, 1)}, {2, 6, 6}, 1);
  err["conv2d/stride"] = layer_stack_err({LayerSpec::conv2d(2, 3, 2, 0, 2)}, {3, 7, 8}, 2);
  err["maxpool"] =
      layer_stack_err({LayerSpec::conv2d(2, 3, 3, 1), LayerSpec::maxpool(2)}, {2, 8, 8}, 3);
  err["relu"] = layer_stack_err({LayerSpec::conv2d(3, 3, 3), LayerSpec::relu()}, {1, 8, 8}, 4);
  err["sigmoid"] = layer_stack_err(
      {LayerSpec::flatten(), LayerSpec::dense(5), LayerSpec::sigmoid()}, {2, 3, 3}, 5);
  err["flatten+dense"] =
      layer_stack_err({LayerSpec::flatten(), LayerSpec::dense(6)}, {4, 2, 3}, 6);
  for (auto mode : {metric::LossMode::Contrastive, metric::LossMode::CrossEntropy,
                    metric::LossMode::Joint})
    err[std::string("loss/") + metric::to_string(mode)] = loss_through_trunk_err(mode);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string which;
  for (const auto& [k, v] : err)
    if (v >= worst) {
      worst = v;
      which = k;
    }
  line(1, worst < kGradTol && secs < kGradSuiteSeconds, "gradient suite",
       fmt("%zu checks, max rel err %.2e (%s) < %.0e; %.2f s < %.0f s", err.size(), worst,
           which.c_str(), kGradTol, secs, kGradSuiteSeconds));
}

// ---- 2: loss unit values --------------------------------------------------

void criterion_losses() {
  const metric::ScoredPair a{0.5, 1}, b{2.0, 0}, c{1.0, 0};
  const double la = metric::contrastive_loss({&a, 1}, 1.5);
  const double lb = metric::contrastive_loss({&b, 1}, 1.5);
  const double lc = metric::contrastive_loss({&c, 1}, 1.5);
  const bool tagged = la == 0.25 && lb == 0.0 && lc == 0.25;

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0), pu(0.0, 1.0);
  std::vector<metric::ScoredPair> s;
  std::vector<metric::ProbPair> p;
  for (int i = 0; i < 200; ++i) {
    s.push_back({u(rng), i % 2});
    p.push_back({pu(rng), i % 2});
  }
  const double con = metric::contrastive_loss(s, 1.5);
  const double joint = metric::joint_loss(s, p, 1.5, 0.0);
  const bool bitwise = std::memcmp(&con, &joint, sizeof(double)) == 0;

  const metric::ProbPair h1{0.5, 1}, h0{0.5, 0};
  const double e1 = std::abs(metric::cross_entropy_pair_loss({&h1, 1}) - std::log(2.0));
  const double e0 = std::abs(metric::cross_entropy_pair_loss({&h0, 1}) - std::log(2.0));
  const bool ce = e1 <= kLossExactTol && e0 <= kLossExactTol;
  line(2, tagged && bitwise && ce, "loss unit values",
       fmt("contrastive %.4g/%.4g/%.4g (want 0.25/0/0.25); joint(alpha=0) bitwise %s; "
           "CE log2 err %.1e/%.1e <= %.0e",
           la, lb, lc, bitwise ? "yes" : "no", e1, e0, kLossExactTol));
}

// ---- 3: reservoir -----------------------------------------------------------

struct VecStream {
  std::vector<pairing::PairRecord> v;
  std::size_t i = 0;
  std::optional<pairing::PairRecord> next() {
    if (i >= v.size()) return std::nullopt;
    return v[i++];
  }
};

void criterion_reservoir() {
  const std::size_t n = 5, R = 2;
  std::vector<double> incl(n, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, double> subsets;
  std::size_t peak = 0, bound = 0;
  for (std::size_t t = 0; t < kReservoirTrials; ++t) {
    VecStream s;
    for (std::size_t i = 0; i < n; ++i) s.v.push_back({0, i, 0});
    const auto r = pairing::reservoir_fill(s, R, 1000 + t);
    const auto x = r.items()[0].right, y = r.items()[1].right;
    incl[x] += 1;
    incl[y] += 1;
    subsets[{std::min(x, y), std::max(x, y)}] += 1;
  }
  // Instrumented buffer on real pair streams: positives 4x4, negatives 4 x 6 classes x 7.
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::vector<std::vector<std::size_t>> neg;
    for (std::size_t c = 0; c < 6; ++c) {
      neg.emplace_back();
      for (std::size_t j = 0; j < 7; ++j) neg.back().push_back(100 + 10 * c + j);
    }
    auto streams = pairing::enumerate_pairs({0, 1, 2, 3}, neg);
    const std::size_t cap = 2 + seed % 15;
    const auto buf = pairing::fill_buffer(streams, cap, seed);
    peak = std::max(peak, buf.peak_resident());
    if (buf.peak_resident() > 2 * cap) ++bound;
  }
  double worst = 0.0;
  for (double c : incl) worst = std::max(worst, std::abs(c / double(kReservoirTrials) - 0.4));
  double chi2 = 0.0;
  const double expected = double(kReservoirTrials) / 10.0;
  for (const auto& [k, c] : subsets) chi2 += (c - expected) * (c - expected) / expected;
  const double pval =
      boost::math::cdf(boost::math::complement(boost::math::chi_squared(9), chi2));
  line(3, bound == 0 && worst <= kInclusionTol && pval > kChiSquareP && subsets.size() == 10,
       "reservoir sampling",
       fmt("buffer over 2R in %zu/50 runs; inclusion |f - R/N| max %.4f <= %.2f over %zu "
           "trials; chi-square(9) %.2f, p %.3f > %.2f",
           bound, worst, kInclusionTol, kReservoirTrials, chi2, pval, kChiSquareP));
}

// ---- 4: SPRT ------------------------------------------------------------------

void criterion_sprt(double mean_n_genuine_model) {
  fusion::SPRTConfig cfg;
  std::mt19937_64 rng(77);
  std::size_t fa = 0, fr = 0;
  for (std::size_t s = 0; s < kWaldStreams; ++s) {
    for (bool genuine : {true, false}) {
      const auto d = fusion::run_sprt(
          [&]() -> std::optional<double> {
            return fusion::sample_model_distance(genuine, cfg, rng);
          },
          cfg);
      const bool acc = d.outcome == fusion::Outcome::Accept;
      fa += !genuine && acc;
      fr += genuine && !acc;
    }
  }
  const double far = double(fa) / kWaldStreams, frr = double(fr) / kWaldStreams;
  const bool ab = std::abs(cfg.A() - 99.0) < 1e-12 && std::abs(cfg.B() - 1.0 / 99.0) < 1e-15;
  line(4, ab && far <= kWaldErrorMax && frr <= kWaldErrorMax &&
              mean_n_genuine_model <= kMeanObservationsMax,
       "SPRT statistics",
       fmt("A=%.4g B=%.6f; %zu streams each: FAR %.4f, FRR %.4f <= %.2f; mean n on genuine "
           "model streams %.2f <= %.0f",
           cfg.A(), cfg.B(), kWaldStreams, far, frr, kWaldErrorMax, mean_n_genuine_model,
           kMeanObservationsMax));
}

// ---- 10: model accounting ------------------------------------------------------

std::string shape_string(const nn::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

void criterion_accounting(const fs::path& out) {
  const nn::Model m = nn::build_model(nn::lenet4(), 1);
  const metric::SiameseModel s = metric::make_siamese(nn::lenet4(), metric::LossConfig{}, 1);
  const std::size_t head = s.head ? s.head->param_count() : 0;
  const double rel = (double(m.param_count()) - kReferenceParams) / kReferenceParams;
  // Reference figures per weight layer, as published (thousands).
  const double reference[] = {0.96, 51.5, 51.4, 82.5};

  std::ostringstream r;
  r << "# LeNet4 parameter report\n\n"
    << "Input " << shape_string(m.input_shape()) << ".\n\n"
    << "| layer | in | out | derivation | params | reference | delta |\n"
    << "|---|---|---|---|---:|---:|---:|\n";
  std::size_t w = 0;
  for (const auto& l : m.layers()) {
    std::string deriv = "-", ref = "-", delta = "-";
    if (l.spec.has_weights()) {
      if (l.weight.shape().size() == 4) {
        const auto& ws = l.weight.shape();
        deriv = fmt("%zu x %zu x %zu x %zu + %zu", ws[0], ws[1], ws[2], ws[3], l.bias.size());
      } else {
        const auto& ws = l.weight.shape();
        deriv = fmt("%zu x %zu + %zu", ws[0], ws[1], l.bias.size());
      }
      ref = fmt("%.2fK", reference[w]);
      delta = fmt("%+.1f%%", 100.0 * (double(l.param_count()) / (1000.0 * reference[w]) - 1.0));
      ++w;
    }
    r << "| " << l.spec.describe() << " | " << shape_string(l.in_shape) << " | "
      << shape_string(l.out_shape) << " | " << deriv << " | " << l.param_count() << " | "
      << ref << " | " << delta << " |\n";
  }
  r << "\nTrunk total " << m.param_count() << " vs reference " << kReferenceParams << " ("
    << fmt("%+.2f%%", 100.0 * rel) << ").\n"
    << "Pair probability head (joint and cross-entropy losses): " << head << " more.\n\n"
    << "Weight counts follow from the derivation column alone. The dense layer reads the\n"
    << "flattened " << shape_string(m.layers()[m.layers().size() - 2].out_shape)
    << " map, so its size is set by the 33 x 42 input geometry. The per-layer\n"
    << "reference figures do not all match any kernel of the listed shape (a 3 x 3 conv\n"
    << "from 64 to 32 channels holds 18,464 weights, not 51.4K), so only the total is\n"
    << "held to the tolerance.\n";
  const fs::path report = out / "model_report.md";
  std::ofstream(report) << r.str();
  line(10, std::abs(rel) <= kParamRelTol && fs::exists(report), "model accounting",
       fmt("LeNet4 %zu params vs %.0f: %+.2f%% within +-%.0f%%; report %s", m.param_count(),
           kReferenceParams, 100.0 * rel, 100.0 * kParamRelTol, report.string().c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "gaitfuse_acc";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto cfg = app::RunConfig::defaults();

  criterion_gradients();
  criterion_losses();
  criterion_reservoir();

  // 5: the default end-to-end run, reused by the later criteria.
  const fs::path run = root / "run";
  auto t0 = std::chrono::steady_clock::now();
  app::cmd_train(cfg, run);
  app::cmd_eval(cfg, run / "model.gfck", run);
  const double train_s = seconds_since(t0);
  const auto ev = read_json(run / "eval.json");
  const double map = ev["map"], eer = ev["eer"];

  app::cmd_fuse(cfg, run / "model.gfck", run);
  const auto fuse = read_json(run / "fuse.json");
  criterion_sprt(fuse["mean_n_used_genuine"].get<double>());

  line(5, map >= kMapMin && eer <= kEerMax && train_s <= kTrainSecondsMax &&
              cfg.train.epochs <= kEpochsMax,
       "end-to-end authentication",
       fmt("%zu subjects, %zu epochs: mAP %.4f >= %.2f, EER %.4f <= %.2f, train+eval %.0f s "
           "<= %.0f s",
           cfg.dataset.subjects, cfg.train.epochs, map, kMapMin, eer, kEerMax, train_s,
           kTrainSecondsMax));

  // 6 and 7: the attack matrix on the trained and a defended model.
  app::cmd_attack(cfg, run / "model.gfck", run / "defended.gfck", run);
  const auto at = read_json(run / "attack.json");
  std::map<std::string, double> genuine;
  for (const auto& a : at["arms"]) genuine[a["arm"]] = a["genuine_acceptance"];
  std::map<std::string, std::map<std::string, double>> active;  // arm -> denoiser
  std::map<std::size_t, double> passive;
  for (const auto& r : at["rows"]) {
    if (r["kind"] == "active" && r["batch_fusion_size"] == 1)
      active[r["arm"]][r["denoiser"]] = r["success_ratio"];
    if (r["kind"] == "passive" && r["arm"] == "undefended")
      passive[r["batch_fusion_size"]] = r["success_ratio"];
  }
  auto best = [](const std::map<std::string, double>& m) {
    double b = 0.0;
    for (const auto& [k, v] : m) b = std::max(b, v);
    return b;
  };
  auto listing = [](const std::map<std::string, double>& m) {
    std::string s;
    for (const auto& [k, v] : m) s += (s.empty() ? "" : " ") + k + fmt("=%.3f", v);
    return s;
  };
  const double und = best(active["undefended"]), def = best(active["defended"]);
  const double drop = genuine["undefended"] - genuine["defended"];
  line(6, und >= kUndefendedMin && def <= kDefendedMax && drop <= kGenuineDropMax,
       "noise-fingerprint defense",
       fmt("best active batch-1 success undefended %.3f >= %.2f [%s], defended %.3f <= %.2f "
           "[%s]; genuine acceptance %.3f -> %.3f, drop %.1f <= %.0f points",
           und, kUndefendedMin, listing(active["undefended"]).c_str(), def, kDefendedMax,
           listing(active["defended"]).c_str(), genuine["undefended"], genuine["defended"],
           100.0 * drop, 100.0 * kGenuineDropMax));

  bool monotone = passive.size() == 5;
  double prev = 2.0;
  std::string curve;
  for (const auto& [b, v] : passive) {
    monotone = monotone && v <= prev;
    prev = v;
    curve += fmt("%s%zu:%.4f", curve.empty() ? "" : " ", b, v);
  }
  const double at32 = passive.count(32) ? passive[32] : 1.0;
  line(7, monotone && at32 <= kPassiveAtBatch32Max, "passive attack",
       fmt("%zu unseen subjects; batch 32 success %.4f <= %.2f; non-increasing %s [%s]",
           cfg.threat.attack_subjects, at32, kPassiveAtBatch32Max, monotone ? "yes" : "no",
           curve.c_str()));

  // 8: transfer from the trained model to a fresh subject.
  app::cmd_transfer(cfg, run / "model.gfck", run);
  const auto tr = read_json(run / "transfer.json");
  const auto& arm_k = tr["arms"][0];
  const auto& arm_0 = tr["arms"][1];
  const bool both = arm_k["reached"].get<bool>() && arm_0["reached"].get<bool>();
  const double ratio = both ? arm_0["epochs_to_target"].get<double>() /
                                  arm_k["epochs_to_target"].get<double>()
                            : 0.0;
  const double speed = tr["epoch_speedup"];
  const double map_loss = tr["map_loss_points"];
  auto epochs_str = [](const json& a) {
    return a["reached"].get<bool>() ? std::to_string(a["epochs_to_target"].get<int>())
                                    : "not within " + std::to_string(a["epochs_run"].get<int>());
  };
  line(8, both && ratio >= kEpochRatioMin && speed >= kEpochSpeedupMin &&
              map_loss <= kMapLossPointsMax,
       "feature transfer",
       fmt("epochs to loss %.2f: k=%d %s, scratch %s, ratio %.2f >= %.0f; per-epoch speed-up "
           "%.1fx >= %.0fx; accuracy loss %.2f <= %.0f points (mAP %.3f vs %.3f)",
           tr["target_loss"].get<double>(), tr["k"].get<int>(), epochs_str(arm_k).c_str(),
           epochs_str(arm_0).c_str(), ratio, kEpochRatioMin, speed, kEpochSpeedupMin, map_loss,
           kMapLossPointsMax, arm_k["map"].get<double>(), arm_0["map"].get<double>()));

  // 9: drift and feedback-triggered fine-tuning.
  {
    auto c = cfg;
    c.fusion.stream = "drift";
    app::cmd_fuse(c, run / "model.gfck", run);
    const auto dr = read_json(run / "drift.json");
    const double before = dr["untreated_acceptance"], after = dr["final_acceptance"];
    const bool sig = dr["retrain_signalled"];
    line(9, sig && before < kUntreatedMax && after >= kRetrainedMin, "drift feedback",
         fmt("session-2 acceptance %.3f < %.1f untreated; counter fired after %d logins "
             "(T=%zu); after fine-tuning on %d new images/subject %.3f >= %.1f (imposter %.3f)",
             before, kUntreatedMax, dr["logins_before_signal"].get<int>(),
             cfg.fusion.feedback_threshold, dr["new_images_per_subject"].get<int>(), after,
             kRetrainedMin, dr["final_imposter_acceptance"].get<double>()));
  }

  criterion_accounting(root);

  // 11: determinism and checkpoint round trip.
  {
    const fs::path again = root / "again";
    app::cmd_train(cfg, again);
    const auto a = bytes_of(run / "model.gfck"), b = bytes_of(again / "model.gfck");
    const auto back = metric::save_siamese(metric::load_siamese(a, cfg.loss));
    line(11, a == b && back == a, "determinism",
         fmt("two seeded trainings %s (%zu bytes); load/save round trip %s",
             a == b ? "bit-identical" : "differ", a.size(),
             back == a ? "bit-exact" : "differs"));
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
