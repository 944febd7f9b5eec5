#include "app/commands.hpp"
#include "app/drift.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "fusion/sprt.hpp"
#include "nn/checkpoint.hpp"

namespace gaitfuse::app {

using json = nlohmann::ordered_json;

namespace {

void say(const Log& log, const std::string& msg) {
  if (log) log(msg);
}

void ensure_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    fail(ErrorCode::Io, "cannot create output directory " + out.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) fail(ErrorCode::Io, "write failed for " + path.string());
}

json epoch_json(const metric::EpochStats& s) {
  return {{"epoch", s.epoch}, {"loss", s.loss}, {"wall_ms", s.wall_ms}};
}

metric::SiameseModel load_model(const RunConfig& cfg, const fs::path& path) {
  auto m = metric::load_siamese(nn::read_file(path), cfg.loss);
  check_arch(m.trunk, cfg.model.arch);
  return m;
}

void save_model(const metric::SiameseModel& m, const fs::path& path) {
  nn::write_file(path, metric::save_siamese(m));
}

json eval_json(const metric::EvalReport& r) {
  json curve = json::array();
  for (const auto& p : r.curve)
    curve.push_back({{"threshold", p.threshold}, {"far", p.far}, {"frr", p.frr}});
  json subjects = json::array();
  for (const auto& s : r.subjects)
    subjects.push_back({{"subject", s.subject}, {"accuracy", s.accuracy}, {"pairs", s.pairs}});
  return {{"map", r.map},
          {"decision_threshold", r.decision_threshold},
          {"eer", r.eer},
          {"eer_threshold", r.eer_threshold},
          {"positives", r.positives},
          {"negatives", r.negatives},
          {"subjects", subjects},
          {"curve", curve}};
}

json attack_json(const threat::AttackReport& r) {
  json subjects = json::array();
  for (const auto& s : r.subjects)
    subjects.push_back({{"subject", s.subject},
                        {"trials", s.trials},
                        {"successes", s.successes},
                        {"ratio", s.ratio}});
  json j = {{"arm", r.arm},
            {"kind", threat::to_string(r.scenario.kind)},
            {"denoiser", signal::to_string(r.scenario.denoiser)},
            {"denoiser_used", r.denoiser_used},
            {"batch_fusion_size", r.scenario.batch_fusion_size},
            {"seed", r.scenario.seed},
            {"threshold", r.threshold},
            {"trials", r.trials},
            {"successes", r.successes},
            {"success_ratio", r.success_ratio}};
  j["pedometer_error"] = r.pedometer_error ? json(*r.pedometer_error) : json(nullptr);
  j["subjects"] = subjects;
  return j;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string eval_report_json(const metric::EvalReport& r) { return eval_json(r).dump(2) + "\n"; }

std::string attack_report_json(const threat::AttackReport& r) {
  return attack_json(r).dump(2) + "\n";
}

void cmd_synth(const RunConfig& cfg, const fs::path& out, const Log& log) {
  require(cfg.dataset.source == "synthetic", ErrorCode::Config,
          "synth needs dataset.source = synthetic");
  ensure_dir(out);
  const auto traces = dataset_traces(cfg.dataset);
  json subjects = json::array();
  for (const auto& t : traces) {
    const std::string file = t.subject_id + ".csv";
    signal::write_csv(t, out / file);
    subjects.push_back({{"id", t.subject_id}, {"file", file}, {"samples", t.size()}});
    say(log, "wrote " + (out / file).string());
  }
  json m = {{"format", "gaitfuse-dataset"},
            {"version", 1},
            {"sample_rate", cfg.dataset.sample_rate},
            {"duration_s", cfg.dataset.duration_s},
            {"seed", cfg.dataset.seed},
            {"subjects", subjects}};
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

void cmd_train(const RunConfig& cfg, const fs::path& out, const Log& log) {
  ensure_dir(out);
  auto data = build_dataset(cfg);
  std::string history;
  auto on_epoch = [&](const metric::EpochStats& s) {
    history += epoch_json(s).dump() + "\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "epoch %zu loss %.5f (%.0f ms)", s.epoch, s.loss, s.wall_ms);
    say(log, buf);
  };
  metric::SiameseModel model;
  try {
    model = train_model(cfg, data, on_epoch);
  } catch (const Error& e) {
    write_text(out / "history.jsonl", history);
    throw;
  }
  write_text(out / "history.jsonl", history);
  save_model(model, out / "model.gfck");
  say(log, "wrote " + (out / "model.gfck").string());
}

void cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& out,
              const Log& log) {
  ensure_dir(out);
  const auto model = load_model(cfg, checkpoint);
  const auto data = build_dataset(cfg);
  const auto report =
      metric::evaluate(model, data.store, all_eval_pairs(data), metric::default_thresholds());
  write_text(out / "eval.json", eval_report_json(report));
  char buf[96];
  std::snprintf(buf, sizeof(buf), "mAP %.4f EER %.4f", report.map, report.eer);
  say(log, buf);
}

void cmd_transfer(const RunConfig& cfg, const fs::path& source, const fs::path& out,
                  const Log& log) {
  ensure_dir(out);
  const auto src = load_model(cfg, source);
  const auto& t = cfg.transfer;

  // The fresh owner joins the configured subjects, who supply the negatives.
  auto data = build_dataset(cfg);
  const auto spec = signal::random_subject(t.target_seed, "t0");
  data.subjects.push_back(make_subject(data.store, spec, t.train_images, t.test_images,
                                       cfg.preprocessing, cfg.dataset.sample_rate));
  const std::size_t owner = data.subjects.size() - 1;
  const auto pool = pairing::PairPool::from(
      owner_buffer(data.subjects, owner, {}, splitmix(cfg.train.seed + 0x7f), cfg.train.reservoir));
  const auto eval_pairs = owner_eval_pairs(data.subjects, owner);

  metric::TrainConfig tc;
  tc.lr = cfg.train.lr;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = cfg.train.seed;
  tc.epochs = t.max_epochs;
  tc.stop_below = t.target_loss;

  metric::LossConfig target_loss = cfg.loss;
  target_loss.mode = t.loss_mode;

  std::vector<std::size_t> arms{t.k};
  if (t.baseline && t.k != 0) arms.push_back(0);
  std::string history;
  json results = json::array();
  std::vector<double> epochs_to, per_epoch, maps;
  for (std::size_t k : arms) {
    auto m = metric::transfer_init(nn::arch_by_name(cfg.model.arch), src.trunk, k, target_loss,
                                   cfg.model.seed);
    const auto h = metric::train(m, data.store, pool, tc, [&](const metric::EpochStats& s) {
      json j = epoch_json(s);
      j["k"] = k;
      history += j.dump() + "\n";
    });
    const auto rep = metric::evaluate(m, data.store, eval_pairs, metric::default_thresholds());
    const bool reached = !h.empty() && h.back().loss < t.target_loss;
    double wall = 0.0;
    for (const auto& s : h) wall += s.wall_ms;
    const double mean_ms = h.empty() ? 0.0 : wall / static_cast<double>(h.size());
    json r = {{"k", k},
              {"reached", reached},
              {"epochs_to_target", reached ? json(h.size()) : json(nullptr)},
              {"epochs_run", h.size()},
              {"final_loss", h.empty() ? json(nullptr) : json(h.back().loss)},
              {"mean_epoch_ms", mean_ms},
              {"map", rep.map},
              {"eer", rep.eer}};
    results.push_back(r);
    epochs_to.push_back(reached ? static_cast<double>(h.size()) : -1.0);
    per_epoch.push_back(mean_ms);
    maps.push_back(rep.map);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "k=%zu: %zu epochs (%s), %.1f ms/epoch, mAP %.3f", k,
                  h.size(), reached ? "reached target" : "target not reached", mean_ms, rep.map);
    say(log, buf);
    if (k == t.k) save_model(m, out / "transfer.gfck");
  }
  json summary = {{"k", t.k},
                  {"loss_mode", metric::to_string(t.loss_mode)},
                  {"target_loss", t.target_loss},
                  {"owner", data.subjects[owner].id},
                  {"arms", results}};
  if (arms.size() == 2) {
    summary["epoch_ratio"] = epochs_to[0] > 0 && epochs_to[1] > 0
                                 ? json(epochs_to[1] / epochs_to[0])
                                 : json(nullptr);
    summary["epoch_speedup"] = per_epoch[0] > 0 ? json(per_epoch[1] / per_epoch[0]) : json(nullptr);
    summary["map_loss_points"] = 100.0 * (maps[1] - maps[0]);
  }
  write_text(out / "transfer_history.jsonl", history);
  write_text(out / "transfer.json", summary.dump(2) + "\n");
}

void cmd_fuse(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& out,
              const Log& log) {
  ensure_dir(out);
  const auto& f = cfg.fusion;
  if (f.stream == "drift") {
    auto model = load_model(cfg, checkpoint);
    auto data = build_dataset(cfg);
    const auto r = run_drift(cfg, model, data, log);
    json epochs = json::array();
    for (const auto& e : r.epochs)
      epochs.push_back({{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"acceptance", e.acceptance},
                        {"imposter_acceptance", e.imposter_acceptance}});
    const auto& d = cfg.drift;
    json j = {{"stream", "drift"},
              {"cadence_shift_hz", d.cadence_shift_hz},
              {"amp_change", d.amp_change},
              {"new_images_per_subject", r.new_images_per_subject},
              {"untreated_acceptance", r.untreated_acceptance},
              {"untreated_imposter_acceptance", r.untreated_imposter_acceptance},
              {"logins_before_signal", r.logins_before_signal},
              {"rejected_logins", r.rejected_logins},
              {"retrain_signalled", r.retrain_signalled},
              {"final_acceptance", r.final_acceptance},
              {"final_imposter_acceptance", r.final_imposter_acceptance},
              {"mean_acceptance", r.mean_acceptance},
              {"epochs", epochs}};
    write_text(out / "drift.json", j.dump(2) + "\n");
    if (r.retrain_signalled) save_model(model, out / "drift.gfck");
    return;
  }
  fusion::FeedbackCounter feedback(f.feedback_threshold);
  std::mt19937_64 rng(f.seed);
  std::string lines;
  std::size_t genuine_n = 0, imposter_n = 0, false_reject = 0, false_accept = 0, truncated = 0;
  double n_sum = 0.0, n_genuine_sum = 0.0;
  json sessions = json::array();

  std::optional<Dataset> data;
  std::vector<threat::Victim> victims;
  std::vector<std::vector<std::vector<double>>> probes;
  if (f.stream == "model") {
    const auto model = load_model(cfg, checkpoint);
    data = build_dataset(cfg);
    victims = enrolled_victims(model.trunk, *data);
    for (const auto& s : data->subjects)
      probes.push_back(metric::embed_all(model.trunk, data->store, s.test));
  }

  for (std::size_t session = 0; session < f.sessions; ++session) {
    const bool genuine = session % 2 == 0;
    std::function<std::optional<double>()> next;
    std::string owner_id, claimant_id;
    fusion::SPRTConfig sprt = f.sprt;
    std::vector<std::size_t> order;
    std::size_t pos = 0, owner = 0, claimant = 0;
    if (f.stream == "wald") {
      next = [&]() -> std::optional<double> {
        return fusion::sample_model_distance(genuine, sprt, rng);
      };
    } else {
      const std::size_t n = victims.size();
      owner = (session / 2) % n;
      claimant = owner;
      if (!genuine)
        claimant = (owner + 1 + std::uniform_int_distribution<std::size_t>(0, n - 2)(rng)) % n;
      owner_id = victims[owner].id;
      claimant_id = victims[claimant].id;
      sprt.k = std::min(sprt.k, victims[owner].training.size());
      order.resize(probes[claimant].size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      pos = order.size();
      next = [&]() -> std::optional<double> {
        if (pos == order.size()) {
          std::shuffle(order.begin(), order.end(), rng);
          pos = 0;
        }
        return fusion::spatial_distance(probes[claimant][order[pos++]], victims[owner].training,
                                        sprt.k, rng);
      };
    }
    const auto d = fusion::run_sprt(next, sprt, [&](const fusion::StepRecord& s) {
      lines += json{{"session", session},
                    {"n", s.n},
                    {"d", s.d},
                    {"p", s.p},
                    {"lambda", s.lambda},
                    {"outcome", fusion::to_string(s.outcome)}}
                   .dump() +
               "\n";
    });
    const bool accepted = d.outcome == fusion::Outcome::Accept;
    if (genuine) {
      ++genuine_n;
      n_genuine_sum += static_cast<double>(d.n_used);
      if (!accepted) ++false_reject;
    } else {
      ++imposter_n;
      if (accepted) ++false_accept;
    }
    if (d.truncated) ++truncated;
    n_sum += static_cast<double>(d.n_used);
    feedback.record(d.outcome, genuine);
    json s = {{"session", session},
              {"genuine", genuine},
              {"outcome", fusion::to_string(d.outcome)},
              {"n_used", d.n_used},
              {"lambda", d.lambda},
              {"truncated", d.truncated}};
    if (f.stream == "model") {
      s["owner"] = owner_id;
      s["claimant"] = claimant_id;
    }
    sessions.push_back(s);
  }

  auto rate = [](std::size_t a, std::size_t b) { return b ? double(a) / double(b) : 0.0; };
  json summary = {{"stream", f.stream},
                  {"sessions", f.sessions},
                  {"A", f.sprt.A()},
                  {"B", f.sprt.B()},
                  {"genuine_sessions", genuine_n},
                  {"imposter_sessions", imposter_n},
                  {"false_reject_rate", rate(false_reject, genuine_n)},
                  {"false_accept_rate", rate(false_accept, imposter_n)},
                  {"mean_n_used", n_sum / static_cast<double>(f.sessions)},
                  {"mean_n_used_genuine", genuine_n ? n_genuine_sum / double(genuine_n) : 0.0},
                  {"truncated", truncated},
                  {"feedback_threshold", f.feedback_threshold},
                  {"retrain_signals", feedback.signals()},
                  {"session_results", sessions}};
  write_text(out / "decisions.jsonl", lines);
  write_text(out / "fuse.json", summary.dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof(buf), "FRR %.3f FAR %.3f mean n %.2f",
                rate(false_reject, genuine_n), rate(false_accept, imposter_n),
                n_sum / static_cast<double>(f.sessions));
  say(log, buf);
}

void cmd_attack(const RunConfig& cfg, const fs::path& undefended, const fs::path& defended,
                const fs::path& out, const Log& log) {
  ensure_dir(out);
  json arms = json::array();
  json rows = json::array();
  json noise = {{"kind", signal::to_string(cfg.threat.noise.kind)},
                {"std_scale", cfg.threat.noise.std_scale},
                {"sinusoid_freq", cfg.threat.noise.sinusoid_freq},
                {"sinusoid_amp_ratio", cfg.threat.noise.sinusoid_amp_ratio},
                {"seed", cfg.threat.noise.seed}};
  json report = {{"noise", noise}};

  if (!cfg.threat.scenarios.empty()) {
    auto data = build_dataset(cfg);
    std::vector<signal::SensorTrace> traces;
    for (const auto& s : data.subjects) traces.push_back(held_out_trace(s, cfg.preprocessing));
    const bool long_enough = std::all_of(traces.begin(), traces.end(), [](const auto& t) {
      return t.duration() >= 10.0 - 1e-9;
    });
    report["pedometer_error"] =
        long_enough ? json(threat::usability_report(traces, cfg.threat.noise)) : json(nullptr);
    const auto database = attack_database(cfg);

    for (const bool with_defense : {false, true}) {
      const std::string arm = with_defense ? "defended" : "undefended";
      const fs::path path = with_defense ? defended : undefended;
      metric::SiameseModel model;
      if (fs::exists(path)) {
        model = load_model(cfg, path);
        say(log, arm + ": loaded " + path.string());
      } else {
        RunConfig c = cfg;
        c.train.defense = with_defense;
        say(log, arm + ": training");
        model = train_model(c, data);
        save_model(model, path);
        say(log, arm + ": wrote " + path.string());
      }
      const double thr = cfg.loss.margin / 2.0;
      const auto victims = enrolled_victims(model.trunk, data);
      threat::AttackScenario g;
      g.trials = 500;
      g.seed = cfg.threat.scenarios.front().seed;
      const auto ga = threat::genuine_acceptance(model.trunk, thr, victims, traces,
                                                 cfg.preprocessing, g);
      arms.push_back({{"arm", arm}, {"checkpoint", path.string()},
                      {"genuine_acceptance", ga.success_ratio}});
      for (const auto& sc : cfg.threat.scenarios) {
        auto r = sc.kind == threat::AttackKind::Passive
                     ? threat::passive_attack(model.trunk, thr, victims, database, sc)
                     : threat::active_attack(model.trunk, thr, victims, traces, cfg.threat.noise,
                                             cfg.preprocessing, sc);
        r.arm = arm;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s %s %s batch %zu: success %.4f", arm.c_str(),
                      threat::to_string(sc.kind), signal::to_string(sc.denoiser),
                      sc.batch_fusion_size, r.success_ratio);
        say(log, buf);
        rows.push_back(attack_json(r));
      }
    }
  }
  report["arms"] = arms;
  report["rows"] = rows;
  write_text(out / "attack.json", report.dump(2) + "\n");
}

void cmd_profile(const RunConfig& cfg, const fs::path& out, const Log& log) {
  ensure_dir(out);
  auto data = build_dataset(cfg);
  auto model = fresh_model(cfg);
  const auto& img = data.store[0].pixels;

  std::vector<double> fwd;
  for (int i = 0; i < 21; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto e = metric::embed(model.trunk, img);
    fwd.push_back(ms_since(t0));
  }

  // Batched inference: embed B probes and score each against one enrolled sample.
  const auto enrolled = metric::embed(model.trunk, img);
  json inference = json::array();
  for (std::size_t b = 4; b <= 56; b += 4) {
    std::vector<double> reps;
    for (int r = 0; r < 5; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      double acc = 0.0;
      for (std::size_t i = 0; i < b; ++i)
        acc += metric::distance(metric::embed(model.trunk, data.store[i % data.store.size()].pixels),
                                enrolled);
      reps.push_back(ms_since(t0));
      if (!std::isfinite(acc)) fail(ErrorCode::NumericDivergence, "non-finite distance");
    }
    inference.push_back({{"batch", b}, {"ms", median(reps)}});
  }

  // One epoch over a 400-pair pool (200 positives, 200 negatives).
  auto full = build_pool(cfg, data);
  std::mt19937_64 rng(cfg.train.seed);
  std::shuffle(full.positives.begin(), full.positives.end(), rng);
  std::shuffle(full.negatives.begin(), full.negatives.end(), rng);
  pairing::PairPool pool;
  pool.positives.assign(full.positives.begin(),
                        full.positives.begin() + std::min<std::size_t>(200, full.positives.size()));
  pool.negatives.assign(full.negatives.begin(),
                        full.negatives.begin() + std::min<std::size_t>(200, full.negatives.size()));
  metric::TrainConfig tc;
  tc.lr = cfg.train.lr;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = cfg.train.seed;
  tc.epochs = 1;
  const auto h = metric::train(model, data.store, pool, tc);

  json report = {{"arch", cfg.model.arch},
                 {"threads", 1},
                 {"forward_ms", median(fwd)},
                 {"inference", inference},
                 {"epoch", {{"pairs", pool.size()},
                            {"batch_size", tc.batch_size},
                            {"batches", (pool.size() + tc.batch_size - 1) / tc.batch_size},
                            {"ms", h.front().wall_ms}}}};
  write_text(out / "profile.json", report.dump(2) + "\n");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "forward %.2f ms, epoch (%zu pairs) %.0f ms", median(fwd),
                pool.size(), h.front().wall_ms);
  say(log, buf);
}

}  // namespace gaitfuse::app
