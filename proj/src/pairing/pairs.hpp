#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nn/tensor.hpp"
#include "signal/denoise.hpp"
#include "signal/noise.hpp"
#include "signal/spectrogram.hpp"

namespace gaitfuse::pairing {

enum class SampleOrigin : std::uint8_t { Genuine, Noised, Denoised };

struct Sample {
  nn::Tensor pixels;  // [1, 33, 42] for spectrograms
  std::string subject_id;
  SampleOrigin origin = SampleOrigin::Genuine;
};

// Owns every image; pairs refer to entries by index. All images share a shape.
class SampleStore {
 public:
  std::size_t add(Sample s);
  const Sample& operator[](std::size_t i) const { return samples_.at(i); }
  std::size_t size() const noexcept { return samples_.size(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

 private:
  std::vector<Sample> samples_;
};

struct PairRecord {
  std::size_t left = 0;
  std::size_t right = 0;
  int label = 0;  // 1 similar, 0 dissimilar

  bool operator==(const PairRecord&) const = default;
};

// Label rule: similar iff the subjects match and both sides are genuine.
int pair_label(const Sample& a, const Sample& b);

// All r^2 ordered owner pairs, self-pairs included, produced lazily.
class PositiveStream {
 public:
  explicit PositiveStream(std::vector<std::size_t> owner);
  std::optional<PairRecord> next();
  std::size_t total() const noexcept { return owner_.size() * owner_.size(); }

 private:
  std::vector<std::size_t> owner_;
  std::size_t i_ = 0, j_ = 0;
};

// Owner sample x negative sample for every negative class, n_s * r * s pairs
// when each class has s samples. Pairs given up front (defense pairs) come
// first.
class NegativeStream {
 public:
  NegativeStream(std::vector<std::size_t> owner, std::vector<std::vector<std::size_t>> classes,
                 std::vector<PairRecord> prefix = {});
  std::optional<PairRecord> next();
  std::size_t total() const noexcept;

 private:
  std::vector<std::size_t> owner_;
  std::vector<std::vector<std::size_t>> classes_;
  std::vector<PairRecord> prefix_;
  std::size_t p_ = 0, c_ = 0, o_ = 0, s_ = 0;
};

struct PairStreams {
  PositiveStream positives;
  NegativeStream negatives;
};

PairStreams enumerate_pairs(std::vector<std::size_t> owner,
                            std::vector<std::vector<std::size_t>> negative_classes);

// One reservoir half (Algorithm R): the first R records are kept, record T > R
// replaces a uniformly chosen resident with probability R/T.
class Reservoir {
 public:
  Reservoir(std::size_t capacity, std::uint64_t seed);
  void offer(const PairRecord& p);
  const std::vector<PairRecord>& items() const noexcept { return items_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t seen() const noexcept { return seen_; }

 private:
  std::size_t capacity_;
  std::vector<PairRecord> items_;
  std::uint64_t seen_ = 0;
  std::mt19937_64 rng_;
};

// Balanced 2R buffer. peak_resident() is the largest number of pairs held at
// once over the whole fill.
class ReservoirBuffer {
 public:
  ReservoirBuffer(std::size_t r_capacity, std::uint64_t seed);
  void offer_positive(const PairRecord& p);
  void offer_negative(const PairRecord& p);
  const std::vector<PairRecord>& positives() const noexcept { return pos_.items(); }
  const std::vector<PairRecord>& negatives() const noexcept { return neg_.items(); }
  std::size_t capacity() const noexcept { return pos_.capacity(); }
  std::size_t size() const noexcept { return positives().size() + negatives().size(); }
  std::size_t peak_resident() const noexcept { return peak_; }
  std::uint64_t records_seen() const noexcept { return pos_.seen() + neg_.seen(); }

 private:
  void track();
  Reservoir pos_, neg_;
  std::size_t peak_ = 0;
};

template <typename Stream>
Reservoir reservoir_fill(Stream& stream, std::size_t capacity, std::uint64_t seed) {
  Reservoir r(capacity, seed);
  while (auto p = stream.next()) r.offer(*p);
  return r;
}

// Drains both streams into a buffer of capacity R per half.
ReservoirBuffer fill_buffer(PairStreams& streams, std::size_t r_capacity, std::uint64_t seed);

// A genuine owner image together with the raw trace segment it came from.
struct GenuineSegment {
  std::size_t sample;
  signal::SensorTrace trace;
};

// For every segment g and noise spec n: (g, spec(noise_n(g))) and, per
// denoiser d, (g, spec(d(noise_n(g)))), all labelled 0. New images go into
// the store. Noise seeds are varied per segment.
std::vector<PairRecord> make_defense_pairs(SampleStore& store,
                                           std::span<const GenuineSegment> genuine,
                                           std::span<const signal::NoiseSpec> noise_specs,
                                           std::span<const signal::Denoiser> denoisers,
                                           const signal::STFTConfig& stft);

// Training pairs split by label; a filled buffer or a union of several.
struct PairPool {
  std::vector<PairRecord> positives;
  std::vector<PairRecord> negatives;

  static PairPool from(const ReservoirBuffer& b) { return {b.positives(), b.negatives()}; }
  void append(const PairPool& o);
  std::size_t size() const noexcept { return positives.size() + negatives.size(); }
};

// 50/50 batches over the two halves, both reshuffled every epoch. An epoch is
// ceil(size / batch) batches; the smaller half wraps around.
class BatchSampler {
 public:
  BatchSampler(const PairPool& pool, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::vector<PairRecord>> epoch();
  std::size_t batches_per_epoch() const noexcept { return batches_; }

 private:
  std::vector<PairRecord> pos_, neg_;
  std::size_t batch_;
  std::size_t batches_;
  std::mt19937_64 rng_;
};

// left_id,right_id,y
void write_pairs_csv(std::span<const PairRecord> pairs, const std::filesystem::path& path);

}  // namespace gaitfuse::pairing
