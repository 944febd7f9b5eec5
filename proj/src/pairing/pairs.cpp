#include "pairing/pairs.hpp"

#include <algorithm>
#include <fstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace gaitfuse::pairing {

std::size_t SampleStore::add(Sample s) {
  require(samples_.empty() || s.pixels.shape() == samples_.front().pixels.shape(),
          ErrorCode::ShapeMismatch, "all samples in a store must share one shape");
  samples_.push_back(std::move(s));
  return samples_.size() - 1;
}

int pair_label(const Sample& a, const Sample& b) {
  return a.subject_id == b.subject_id && a.origin == SampleOrigin::Genuine &&
                 b.origin == SampleOrigin::Genuine
             ? 1
             : 0;
}

PositiveStream::PositiveStream(std::vector<std::size_t> owner) : owner_(std::move(owner)) {}

std::optional<PairRecord> PositiveStream::next() {
  if (i_ >= owner_.size()) return std::nullopt;
  PairRecord p{owner_[i_], owner_[j_], 1};
  if (++j_ == owner_.size()) {
    j_ = 0;
    ++i_;
  }
  return p;
}

NegativeStream::NegativeStream(std::vector<std::size_t> owner,
                               std::vector<std::vector<std::size_t>> classes,
                               std::vector<PairRecord> prefix)
    : owner_(std::move(owner)), classes_(std::move(classes)), prefix_(std::move(prefix)) {}

std::size_t NegativeStream::total() const noexcept {
  std::size_t n = prefix_.size();
  for (const auto& c : classes_) n += owner_.size() * c.size();
  return n;
}

std::optional<PairRecord> NegativeStream::next() {
  if (p_ < prefix_.size()) return prefix_[p_++];
  if (owner_.empty()) return std::nullopt;
  while (c_ < classes_.size()) {
    const auto& cls = classes_[c_];
    if (s_ < cls.size()) {
      PairRecord p{owner_[o_], cls[s_], 0};
      if (++s_ == cls.size()) {
        s_ = 0;
        if (++o_ == owner_.size()) {
          o_ = 0;
          ++c_;
        }
      }
      return p;
    }
    s_ = 0;
    o_ = 0;
    ++c_;
  }
  return std::nullopt;
}

PairStreams enumerate_pairs(std::vector<std::size_t> owner,
                            std::vector<std::vector<std::size_t>> negative_classes) {
  require(!owner.empty(), ErrorCode::InvalidArgument, "need at least one owner sample");
  return {PositiveStream(owner), NegativeStream(owner, std::move(negative_classes))};
}

Reservoir::Reservoir(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  require(capacity >= 1, ErrorCode::InvalidArgument, "reservoir capacity must be at least 1");
  items_.reserve(capacity);
}

void Reservoir::offer(const PairRecord& p) {
  ++seen_;
  if (items_.size() < capacity_) {
    items_.push_back(p);
    return;
  }
  // Accept with probability R/T, then evict a uniform resident.
  std::uniform_int_distribution<std::uint64_t> draw(0, seen_ - 1);
  const std::uint64_t j = draw(rng_);
  if (j < capacity_) items_[j] = p;
}

ReservoirBuffer::ReservoirBuffer(std::size_t r_capacity, std::uint64_t seed)
    : pos_(r_capacity, splitmix(seed)), neg_(r_capacity, splitmix(seed + 1)) {}

void ReservoirBuffer::track() { peak_ = std::max(peak_, size()); }

void ReservoirBuffer::offer_positive(const PairRecord& p) {
  pos_.offer(p);
  track();
}

void ReservoirBuffer::offer_negative(const PairRecord& p) {
  neg_.offer(p);
  track();
}

ReservoirBuffer fill_buffer(PairStreams& streams, std::size_t r_capacity, std::uint64_t seed) {
  ReservoirBuffer b(r_capacity, seed);
  while (auto p = streams.positives.next()) b.offer_positive(*p);
  while (auto p = streams.negatives.next()) b.offer_negative(*p);
  return b;
}

std::vector<PairRecord> make_defense_pairs(SampleStore& store,
                                           std::span<const GenuineSegment> genuine,
                                           std::span<const signal::NoiseSpec> noise_specs,
                                           std::span<const signal::Denoiser> denoisers,
                                           const signal::STFTConfig& stft) {
  std::vector<PairRecord> out;
  for (std::size_t g = 0; g < genuine.size(); ++g) {
    const auto& seg = genuine[g];
    const std::string subject = store[seg.sample].subject_id;
    for (const auto& spec : noise_specs) {
      signal::NoiseSpec s = spec;
      s.seed = splitmix(spec.seed ^ splitmix(g));
      const auto noised = signal::inject_noise(seg.trace, s);
      auto add = [&](const signal::SensorTrace& t, SampleOrigin origin) {
        nn::Tensor img = signal::raw_log_spectrogram(t, stft);
        signal::standardize(img);
        const std::size_t id = store.add({std::move(img), subject, origin});
        out.push_back({seg.sample, id, 0});
      };
      add(noised, SampleOrigin::Noised);
      for (const auto& d : denoisers) add(signal::denoise_trace(noised, d), SampleOrigin::Denoised);
    }
  }
  return out;
}

void PairPool::append(const PairPool& o) {
  positives.insert(positives.end(), o.positives.begin(), o.positives.end());
  negatives.insert(negatives.end(), o.negatives.begin(), o.negatives.end());
}

BatchSampler::BatchSampler(const PairPool& pool, std::size_t batch_size, std::uint64_t seed)
    : pos_(pool.positives), neg_(pool.negatives), batch_(batch_size), rng_(seed) {
  require(batch_size >= 2, ErrorCode::InvalidArgument, "batch size must be at least 2");
  require(!pos_.empty() && !neg_.empty(), ErrorCode::InvalidArgument,
          "buffer needs both positive and negative pairs");
  require(batch_size <= pool.size(), ErrorCode::InvalidArgument,
          "batch size exceeds buffer size");
  batches_ = (pool.size() + batch_ - 1) / batch_;
}

std::vector<std::vector<PairRecord>> BatchSampler::epoch() {
  std::shuffle(pos_.begin(), pos_.end(), rng_);
  std::shuffle(neg_.begin(), neg_.end(), rng_);
  const std::size_t n_pos = batch_ / 2, n_neg = batch_ - n_pos;
  std::vector<std::vector<PairRecord>> batches(batches_);
  std::size_t ip = 0, in = 0;
  for (auto& b : batches) {
    b.reserve(batch_);
    for (std::size_t k = 0; k < n_pos; ++k) b.push_back(pos_[ip++ % pos_.size()]);
    for (std::size_t k = 0; k < n_neg; ++k) b.push_back(neg_[in++ % neg_.size()]);
  }
  return batches;
}

void write_pairs_csv(std::span<const PairRecord> pairs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << "left_id,right_id,y\n";
  for (const auto& p : pairs) out << p.left << ',' << p.right << ',' << p.label << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace gaitfuse::pairing
