#pragma once

#include <functional>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "app/dataset.hpp"
#include "metric/siamese.hpp"
#include "threat/attack.hpp"

namespace gaitfuse::app {

using Log = std::function<void(const std::string&)>;

struct Dataset {
  pairing::SampleStore store;
  std::vector<Subject> subjects;
};

// Synthesizes (or reads, for the csv source) one trace per subject.
std::vector<signal::SensorTrace> dataset_traces(const DatasetConfig& cfg);
Dataset build_dataset(const RunConfig& cfg);
Dataset dataset_from_traces(std::vector<signal::SensorTrace> traces, std::size_t train_n,
                            const signal::STFTConfig& stft);

// Everything after the training images of a subject's trace.
signal::SensorTrace held_out_trace(const Subject& s, const signal::STFTConfig& stft);

// Defense pairs for one owner: `realizations` noise draws of the configured
// spec over each training segment, each also denoised with the full tv and
// Gaussian grids. Seeds never coincide with the attack's noise seeds.
std::vector<pairing::PairRecord> owner_defense_pairs(Dataset& data, std::size_t owner,
                                                     const signal::NoiseSpec& noise,
                                                     std::size_t realizations,
                                                     const signal::STFTConfig& stft);

// Union of every owner's reservoir, with defense pairs when cfg.train.defense.
pairing::PairPool build_pool(const RunConfig& cfg, Dataset& data);

metric::SiameseModel fresh_model(const RunConfig& cfg);

// Fresh model trained on build_pool. Throws NumericDivergence on blow-up.
metric::SiameseModel train_model(const RunConfig& cfg, Dataset& data,
                                 const metric::EpochCallback& on_epoch = {},
                                 std::vector<metric::EpochStats>* history = nullptr);

// One-vs-rest evaluation pairs for every owner.
std::vector<metric::EvalPair> all_eval_pairs(const Dataset& data);

std::vector<threat::Victim> enrolled_victims(const nn::Model& trunk, const Dataset& data);

// Attack database: unseen synthetic subjects.
std::vector<threat::AttackSample> attack_database(const RunConfig& cfg);

// Throws StructureMismatch unless the trunk has the configured architecture.
void check_arch(const nn::Model& trunk, const std::string& arch);

}  // namespace gaitfuse::app
