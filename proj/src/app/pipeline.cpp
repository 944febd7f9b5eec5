#include "app/pipeline.hpp"

#include <fstream>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace gaitfuse::app {

namespace {

std::vector<std::filesystem::path> csv_paths(const DatasetConfig& cfg) {
  std::vector<std::filesystem::path> out;
  for (const auto& f : cfg.csv_files) out.emplace_back(f);
  if (!cfg.csv_dir.empty()) {
    const std::filesystem::path dir(cfg.csv_dir);
    const auto manifest = dir / "manifest.json";
    std::ifstream in(manifest);
    if (!in) fail(ErrorCode::Io, "cannot open " + manifest.string());
    nlohmann::json m;
    try {
      in >> m;
      for (const auto& s : m.at("subjects")) out.push_back(dir / s.at("file").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, manifest.string() + ": " + e.what());
    }
  }
  require(!out.empty(), ErrorCode::EmptyInput, "csv dataset lists no files");
  return out;
}

}  // namespace

std::vector<signal::SensorTrace> dataset_traces(const DatasetConfig& cfg) {
  std::vector<signal::SensorTrace> out;
  if (cfg.source == "csv") {
    for (const auto& p : csv_paths(cfg)) out.push_back(signal::ingest_csv(p, cfg.sample_rate));
    return out;
  }
  for (const auto& spec : subject_specs(cfg.subjects, cfg.seed, cfg.prefix))
    out.push_back(signal::synth_gait(spec, cfg.duration_s, cfg.sample_rate));
  return out;
}

Dataset dataset_from_traces(std::vector<signal::SensorTrace> traces, std::size_t train_n,
                            const signal::STFTConfig& stft) {
  require(traces.size() >= 2, ErrorCode::InvalidArgument,
          "one-vs-rest training needs at least 2 subjects");
  Dataset d;
  for (auto& t : traces) d.subjects.push_back(subject_from_trace(d.store, std::move(t), train_n, stft));
  return d;
}

Dataset build_dataset(const RunConfig& cfg) {
  auto d = dataset_from_traces(dataset_traces(cfg.dataset), cfg.dataset.train_images,
                               cfg.preprocessing);
  if (cfg.dataset.source == "synthetic") {
    const auto specs = subject_specs(cfg.dataset.subjects, cfg.dataset.seed, cfg.dataset.prefix);
    for (std::size_t i = 0; i < specs.size(); ++i) d.subjects[i].spec = specs[i];
  }
  return d;
}

signal::SensorTrace held_out_trace(const Subject& s, const signal::STFTConfig& stft) {
  const std::size_t begin = s.train.size() * stft.hop * stft.frames_kept;
  return s.trace.slice(begin, s.trace.size() - begin);
}

std::vector<pairing::PairRecord> owner_defense_pairs(Dataset& data, std::size_t owner,
                                                     const signal::NoiseSpec& noise,
                                                     std::size_t realizations,
                                                     const signal::STFTConfig& stft) {
  const auto& o = data.subjects.at(owner);
  std::vector<pairing::GenuineSegment> genuine;
  for (std::size_t i = 0; i < o.train.size(); ++i)
    genuine.push_back({o.train[i], o.train_segments[i]});
  std::vector<signal::NoiseSpec> specs;
  for (std::size_t q = 0; q < realizations; ++q) {
    signal::NoiseSpec s = noise;
    s.seed = splitmix(noise.seed ^ splitmix(0xdef0000ULL + owner * 4096 + q));
    specs.push_back(s);
  }
  std::vector<signal::Denoiser> denoisers;
  for (auto k : {signal::DenoiserKind::TotalVariation, signal::DenoiserKind::GaussianFilter})
    for (const auto& d : threat::denoiser_grid(k)) denoisers.push_back(d);
  return pairing::make_defense_pairs(data.store, genuine, specs, denoisers, stft);
}

pairing::PairPool build_pool(const RunConfig& cfg, Dataset& data) {
  pairing::PairPool pool;
  for (std::size_t o = 0; o < data.subjects.size(); ++o) {
    std::vector<pairing::PairRecord> defense;
    if (cfg.train.defense)
      defense = owner_defense_pairs(data, o, cfg.threat.noise, cfg.train.defense_realizations,
                                    cfg.preprocessing);
    pool.append(pairing::PairPool::from(
        owner_buffer(data.subjects, o, defense, splitmix(cfg.train.seed + 7 + o),
                     cfg.train.reservoir)));
  }
  return pool;
}

metric::SiameseModel fresh_model(const RunConfig& cfg) {
  return metric::make_siamese(nn::arch_by_name(cfg.model.arch), cfg.loss, cfg.model.seed);
}

metric::SiameseModel train_model(const RunConfig& cfg, Dataset& data,
                                 const metric::EpochCallback& on_epoch,
                                 std::vector<metric::EpochStats>* history) {
  const auto pool = build_pool(cfg, data);
  auto model = fresh_model(cfg);
  metric::TrainConfig tc;
  tc.lr = cfg.train.lr;
  tc.epochs = cfg.train.epochs;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = cfg.train.seed;
  tc.stop_below = cfg.train.stop_below;
  auto h = metric::train(model, data.store, pool, tc, on_epoch);
  if (history) *history = std::move(h);
  return model;
}

std::vector<metric::EvalPair> all_eval_pairs(const Dataset& data) {
  std::vector<metric::EvalPair> out;
  for (std::size_t o = 0; o < data.subjects.size(); ++o) {
    auto e = owner_eval_pairs(data.subjects, o);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

std::vector<threat::Victim> enrolled_victims(const nn::Model& trunk, const Dataset& data) {
  std::vector<threat::Victim> out;
  for (const auto& s : data.subjects)
    out.push_back({s.id, metric::embed_all(trunk, data.store, s.train)});
  return out;
}

std::vector<threat::AttackSample> attack_database(const RunConfig& cfg) {
  const auto& stft = cfg.preprocessing;
  const std::size_t n = samples_for_images(stft, cfg.threat.attack_images);
  std::vector<threat::AttackSample> out;
  for (const auto& spec : subject_specs(cfg.threat.attack_subjects, cfg.threat.attack_seed, "x")) {
    const auto trace = signal::synth_gait(
        spec, static_cast<double>(n) / cfg.dataset.sample_rate + 1e-9, cfg.dataset.sample_rate);
    for (auto& img : threat::trace_images(trace, stft)) out.push_back({std::move(img), spec.subject_id});
  }
  return out;
}

void check_arch(const nn::Model& trunk, const std::string& arch) {
  const auto expected = nn::build_model(nn::arch_by_name(arch), 0);
  if (trunk.structure_signature() != expected.structure_signature())
    fail(ErrorCode::StructureMismatch,
         "checkpoint trunk does not have the configured '" + arch + "' architecture");
}

}  // namespace gaitfuse::app
