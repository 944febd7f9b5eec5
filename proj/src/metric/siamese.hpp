#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "metric/losses.hpp"
#include "nn/checkpoint.hpp"
#include "nn/model.hpp"
#include "pairing/pairs.hpp"

namespace gaitfuse::metric {

// One trunk evaluated on both sides of every pair, plus the probability head
// when the loss needs it.
struct SiameseModel {
  nn::Model trunk;
  std::optional<nn::Model> head;
  LossConfig loss;
};

SiameseModel make_siamese(const nn::ArchSpec& arch, const LossConfig& loss, std::uint64_t seed);

std::vector<double> embed(const nn::Model& trunk, const nn::Tensor& image);
std::vector<std::vector<double>> embed_all(const nn::Model& trunk, const pairing::SampleStore& store,
                                           std::span<const std::size_t> ids);

// Activations entering the first trainable layer, computed once per sample.
// Valid only while the frozen layers below that point stay unchanged.
class PrefixCache {
 public:
  PrefixCache(const nn::Model& trunk, const pairing::SampleStore& store);
  std::size_t begin() const noexcept { return begin_; }
  const nn::Tensor& input(std::size_t sample);

 private:
  const nn::Model* trunk_;
  const pairing::SampleStore* store_;
  std::size_t begin_;
  std::vector<std::optional<nn::Tensor>> acts_;
};

struct BatchGrad {
  double loss_sum = 0.0;
  nn::Gradients trunk;
  nn::Gradients head;
};

// Loss summed over the pairs and its exact gradient. Each distinct image is
// embedded once and back-propagated once with the sum of the gradients its
// pairs place on its embedding.
BatchGrad batch_gradient(const SiameseModel& model, const pairing::SampleStore& store,
                         std::span<const pairing::PairRecord> batch, PrefixCache* prefix = nullptr);

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 20;
  std::uint64_t seed = 0;
  // Stop after the first epoch whose mean loss is below this (0 disables).
  double stop_below = 0.0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean per-pair loss over the epoch
  double wall_ms = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Shuffled 50/50 batches from the pool; each step applies the batch-mean
// gradient. Throws NumericDivergence on a non-finite loss or gradient.
std::vector<EpochStats> train(SiameseModel& model, const pairing::SampleStore& store,
                              const pairing::PairPool& pool, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = {});

// Target built from `arch` and `seed`. The first k weight layers (and every
// layer below the k-th) must match the source structurally; their weights are
// copied and frozen. Everything above, head included, is freshly initialized.
SiameseModel transfer_init(const nn::ArchSpec& arch, const nn::Model& source, std::size_t k,
                           const LossConfig& loss, std::uint64_t seed);

std::vector<std::uint8_t> save_siamese(const SiameseModel& m);
// The loss block is not stored in the checkpoint; it comes from the caller.
SiameseModel load_siamese(std::span<const std::uint8_t> bytes, const LossConfig& loss);

}  // namespace gaitfuse::metric
