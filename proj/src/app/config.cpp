#include "app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/error.hpp"
#include "nn/model.hpp"

namespace gaitfuse::app {

using json = nlohmann::ordered_json;

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seeds are read as size_t");

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::Config, "config " + (path.empty() ? std::string("root") : path) + ": " + what);
}

// Reads known keys from one object and rejects whatever is left over.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  Obj child(const char* key) {
    static const json empty = json::object();
    const json* v = take(key);
    return Obj(v ? *v : empty, sub(key));
  }

  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) config_error(sub(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, std::size_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        config_error(sub(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) config_error(sub(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) config_error(sub(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) config_error(sub(key), "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) config_error(sub(key), "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  template <typename E, typename Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string name;
    if (!has(key)) {
      take(key);
      return;
    }
    get(key, name);
    try {
      out = parse(name);
    } catch (const Error& e) {
      config_error(sub(key), e.what());
    }
  }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) config_error(path_, "unknown key '" + k + "'");
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

signal::WindowKind window_from_string(const std::string& s) {
  if (s == "hann") return signal::WindowKind::Hann;
  if (s == "rectangular") return signal::WindowKind::Rectangular;
  fail(ErrorCode::InvalidArgument, "unknown window '" + s + "'");
}

const char* window_name(signal::WindowKind w) {
  return w == signal::WindowKind::Hann ? "hann" : "rectangular";
}

json scenario_json(const threat::AttackScenario& s) {
  json j;
  j["kind"] = threat::to_string(s.kind);
  j["denoiser"] = signal::to_string(s.denoiser);
  j["batch_fusion_size"] = s.batch_fusion_size;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  return j;
}

threat::AttackScenario parse_scenario(const json& j, const std::string& path) {
  threat::AttackScenario s;
  Obj o(j, path);
  o.get_enum("kind", s.kind, threat::attack_kind_from_string);
  o.get_enum("denoiser", s.denoiser, signal::denoiser_kind_from_string);
  o.get("batch_fusion_size", s.batch_fusion_size);
  o.get("trials", s.trials);
  o.get("seed", s.seed);
  o.done();
  return s;
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.preprocessing.hop = 4;
  c.threat.noise.kind = signal::NoiseKind::Gaussian;
  c.threat.noise.std_scale = 0.5;
  c.threat.noise.seed = 1234;
  for (std::size_t b : threat::kFusionSizes)
    c.threat.scenarios.push_back({threat::AttackKind::Passive, signal::DenoiserKind::None, b,
                                  1000, 9});
  for (auto d : {signal::DenoiserKind::None, signal::DenoiserKind::TotalVariation,
                 signal::DenoiserKind::GaussianFilter})
    for (std::size_t b : threat::kFusionSizes)
      c.threat.scenarios.push_back({threat::AttackKind::Active, d, b, 500, 9});
  return c;
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::Config, "config " + what);
  };
  check(dataset.source == "synthetic" || dataset.source == "csv",
        "dataset.source: expected 'synthetic' or 'csv'");
  check(dataset.source != "synthetic" || dataset.subjects >= 2,
        "dataset.subjects: need at least 2 subjects");
  check(dataset.duration_s > 0.0, "dataset.duration_s: must be positive");
  check(dataset.sample_rate > 0.0, "dataset.sample_rate: must be positive");
  check(dataset.train_images >= 1, "dataset.train_images: must be >= 1");
  check(dataset.source != "csv" || !dataset.csv_dir.empty() || !dataset.csv_files.empty(),
        "dataset: csv source needs csv_dir or csv_files");
  check(preprocessing.hop > 0, "preprocessing.hop: the dataset pipeline needs an explicit hop");
  try {
    preprocessing.validate();
    nn::arch_by_name(model.arch);
    loss.validate();
    fusion.sprt.validate();
    threat.noise.validate();
    for (const auto& s : threat.scenarios) s.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("config: ") + e.what());
  }
  check(train.lr > 0.0, "train.lr: must be positive");
  check(train.batch_size >= 2, "train.batch_size: must be >= 2");
  check(transfer.target_loss > 0.0, "transfer.target_loss: must be positive");
  check(transfer.train_images >= 1 && transfer.test_images >= 1,
        "transfer: train_images and test_images must be >= 1");
  check(fusion.feedback_threshold >= 1, "fusion.feedback_threshold: must be >= 1");
  check(fusion.stream == "model" || fusion.stream == "wald" || fusion.stream == "drift",
        "fusion.stream: expected 'model', 'wald' or 'drift'");
  check(fusion.sessions >= 1, "fusion.sessions: must be >= 1");
  check(drift.session_images >= 2, "drift.session_images: must be >= 2");
  check(drift.new_fraction > 0.0 && drift.new_fraction < 1.0,
        "drift.new_fraction: must lie in (0, 1)");
  check(drift.amp_change >= 0.0 && drift.amp_change < 1.0, "drift.amp_change: must lie in [0, 1)");
  check(drift.lr > 0.0, "drift.lr: must be positive");
  check(drift.max_logins >= 1, "drift.max_logins: must be >= 1");
  check(threat.attack_subjects >= 1 && threat.attack_images >= 1,
        "threat: attack_subjects and attack_images must be >= 1");
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = RunConfig::defaults();
  Obj r(root, "");

  {
    auto o = r.child("dataset");
    auto& d = c.dataset;
    o.get("source", d.source);
    o.get("subjects", d.subjects);
    o.get("duration_s", d.duration_s);
    o.get("sample_rate", d.sample_rate);
    o.get("seed", d.seed);
    o.get("prefix", d.prefix);
    o.get("csv_dir", d.csv_dir);
    o.get("csv_files", d.csv_files);
    o.get("train_images", d.train_images);
    o.done();
  }
  {
    auto o = r.child("preprocessing");
    auto& p = c.preprocessing;
    o.get("window_len", p.window_len);
    o.get("hop", p.hop);
    o.get("fft_len", p.fft_len);
    o.get("freq_bins_kept", p.freq_bins_kept);
    o.get("frames_kept", p.frames_kept);
    o.get("log_floor", p.log_floor);
    o.get_enum("window", p.window, window_from_string);
    o.done();
  }
  {
    auto o = r.child("model");
    o.get("arch", c.model.arch);
    o.get("seed", c.model.seed);
    o.done();
  }
  {
    auto o = r.child("loss");
    o.get_enum("mode", c.loss.mode, metric::loss_mode_from_string);
    o.get("margin", c.loss.margin);
    o.get("alpha", c.loss.alpha);
    o.done();
  }
  {
    auto o = r.child("train");
    auto& t = c.train;
    o.get("lr", t.lr);
    o.get("batch_size", t.batch_size);
    o.get("epochs", t.epochs);
    o.get("reservoir", t.reservoir);
    o.get("seed", t.seed);
    o.get("stop_below", t.stop_below);
    o.get("defense", t.defense);
    o.get("defense_realizations", t.defense_realizations);
    o.done();
  }
  {
    auto o = r.child("transfer");
    auto& t = c.transfer;
    o.get("source", t.source);
    o.get("k", t.k);
    o.get_enum("loss_mode", t.loss_mode, metric::loss_mode_from_string);
    o.get("baseline", t.baseline);
    o.get("max_epochs", t.max_epochs);
    o.get("target_loss", t.target_loss);
    o.get("target_seed", t.target_seed);
    o.get("train_images", t.train_images);
    o.get("test_images", t.test_images);
    o.done();
  }
  {
    auto o = r.child("fusion");
    auto& f = c.fusion;
    o.get("alpha", f.sprt.alpha);
    o.get("beta", f.sprt.beta);
    o.get("mu", f.sprt.mu);
    o.get("sigma_sq", f.sprt.sigma_sq);
    o.get("k", f.sprt.k);
    o.get("max_observations", f.sprt.max_observations);
    o.get("use_sigma", f.sprt.use_sigma);
    o.get("feedback_threshold", f.feedback_threshold);
    o.get("stream", f.stream);
    o.get("sessions", f.sessions);
    o.get("seed", f.seed);
    o.done();
  }
  {
    auto o = r.child("drift");
    auto& d = c.drift;
    o.get("cadence_shift_hz", d.cadence_shift_hz);
    o.get("amp_change", d.amp_change);
    o.get("session_images", d.session_images);
    o.get("new_fraction", d.new_fraction);
    o.get("lr", d.lr);
    o.get("epochs", d.epochs);
    o.get("max_logins", d.max_logins);
    o.get("seed", d.seed);
    o.done();
  }
  {
    auto o = r.child("threat");
    auto& t = c.threat;
    if (const json* sc = o.take("scenarios")) {
      if (!sc->is_array()) config_error("threat.scenarios", "expected an array");
      t.scenarios.clear();
      for (std::size_t i = 0; i < sc->size(); ++i)
        t.scenarios.push_back(
            parse_scenario((*sc)[i], "threat.scenarios[" + std::to_string(i) + "]"));
    }
    {
      auto n = o.child("noise");
      n.get_enum("kind", t.noise.kind, signal::noise_kind_from_string);
      n.get("moving_window", t.noise.moving_window);
      n.get("std_scale", t.noise.std_scale);
      n.get("sinusoid_freq", t.noise.sinusoid_freq);
      n.get("sinusoid_amp_ratio", t.noise.sinusoid_amp_ratio);
      n.get("seed", t.noise.seed);
      n.done();
    }
    o.get("attack_subjects", t.attack_subjects);
    o.get("attack_images", t.attack_images);
    o.get("attack_seed", t.attack_seed);
    o.done();
  }
  r.done();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const RunConfig& c) {
  json j;
  const auto& d = c.dataset;
  j["dataset"] = {{"source", d.source},       {"subjects", d.subjects},
                  {"duration_s", d.duration_s}, {"sample_rate", d.sample_rate},
                  {"seed", d.seed},           {"prefix", d.prefix},
                  {"csv_dir", d.csv_dir},     {"csv_files", d.csv_files},
                  {"train_images", d.train_images}};
  const auto& p = c.preprocessing;
  j["preprocessing"] = {{"window_len", p.window_len},
                        {"hop", p.hop},
                        {"fft_len", p.fft_len},
                        {"freq_bins_kept", p.freq_bins_kept},
                        {"frames_kept", p.frames_kept},
                        {"log_floor", p.log_floor},
                        {"window", window_name(p.window)}};
  j["model"] = {{"arch", c.model.arch}, {"seed", c.model.seed}};
  j["loss"] = {{"mode", metric::to_string(c.loss.mode)},
               {"margin", c.loss.margin},
               {"alpha", c.loss.alpha}};
  const auto& t = c.train;
  j["train"] = {{"lr", t.lr},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"reservoir", t.reservoir},
                {"seed", t.seed},
                {"stop_below", t.stop_below},
                {"defense", t.defense},
                {"defense_realizations", t.defense_realizations}};
  const auto& tr = c.transfer;
  j["transfer"] = {{"source", tr.source},
                   {"k", tr.k},
                   {"loss_mode", metric::to_string(tr.loss_mode)},
                   {"baseline", tr.baseline},
                   {"max_epochs", tr.max_epochs},
                   {"target_loss", tr.target_loss},
                   {"target_seed", tr.target_seed},
                   {"train_images", tr.train_images},
                   {"test_images", tr.test_images}};
  const auto& f = c.fusion;
  j["fusion"] = {{"alpha", f.sprt.alpha},
                 {"beta", f.sprt.beta},
                 {"mu", f.sprt.mu},
                 {"sigma_sq", f.sprt.sigma_sq},
                 {"k", f.sprt.k},
                 {"max_observations", f.sprt.max_observations},
                 {"use_sigma", f.sprt.use_sigma},
                 {"feedback_threshold", f.feedback_threshold},
                 {"stream", f.stream},
                 {"sessions", f.sessions},
                 {"seed", f.seed}};
  const auto& dr = c.drift;
  j["drift"] = {{"cadence_shift_hz", dr.cadence_shift_hz},
                {"amp_change", dr.amp_change},
                {"session_images", dr.session_images},
                {"new_fraction", dr.new_fraction},
                {"lr", dr.lr},
                {"epochs", dr.epochs},
                {"max_logins", dr.max_logins},
                {"seed", dr.seed}};
  json scenarios = json::array();
  for (const auto& s : c.threat.scenarios) scenarios.push_back(scenario_json(s));
  const auto& n = c.threat.noise;
  j["threat"] = {{"scenarios", scenarios},
                 {"noise",
                  {{"kind", signal::to_string(n.kind)},
                   {"moving_window", n.moving_window},
                   {"std_scale", n.std_scale},
                   {"sinusoid_freq", n.sinusoid_freq},
                   {"sinusoid_amp_ratio", n.sinusoid_amp_ratio},
                   {"seed", n.seed}}},
                 {"attack_subjects", c.threat.attack_subjects},
                 {"attack_images", c.threat.attack_images},
                 {"attack_seed", c.threat.attack_seed}};
  return j.dump(2) + "\n";
}

}  // namespace gaitfuse::app
