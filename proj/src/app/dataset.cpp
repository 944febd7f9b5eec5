#include "app/dataset.hpp"

namespace gaitfuse::app {

std::size_t samples_for_images(const signal::STFTConfig& stft, std::size_t images) {
  require(stft.hop > 0, ErrorCode::InvalidArgument, "dataset pipeline needs an explicit hop");
  return stft.window_len + stft.hop * (images * stft.frames_kept - 1);
}

std::vector<std::size_t> add_images(pairing::SampleStore& store, const signal::SensorTrace& trace,
                                    const signal::STFTConfig& stft, std::size_t images,
                                    pairing::SampleOrigin origin,
                                    std::vector<signal::SensorTrace>* segments) {
  const std::size_t stride = stft.hop * stft.frames_kept;
  const std::size_t span = stft.required_length(stft.hop);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < images; ++i) {
    nn::Tensor img = signal::raw_log_spectrogram(trace, stft, i);
    signal::standardize(img);
    ids.push_back(store.add({std::move(img), trace.subject_id, origin}));
    if (segments) segments->push_back(trace.slice(i * stride, span));
  }
  return ids;
}

Subject make_subject(pairing::SampleStore& store, const signal::SyntheticSubjectSpec& spec,
                     std::size_t train_n, std::size_t test_n, const signal::STFTConfig& stft,
                     double sample_rate) {
  Subject s;
  s.id = spec.subject_id;
  s.spec = spec;
  const std::size_t n = samples_for_images(stft, train_n + test_n);
  s.trace = signal::synth_gait(spec, static_cast<double>(n) / sample_rate + 1e-9, sample_rate);
  std::vector<signal::SensorTrace> segs;
  const auto ids =
      add_images(store, s.trace, stft, train_n + test_n, pairing::SampleOrigin::Genuine, &segs);
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n), ids.end());
  s.train_segments.assign(segs.begin(), segs.begin() + static_cast<std::ptrdiff_t>(train_n));
  s.test_segments.assign(segs.begin() + static_cast<std::ptrdiff_t>(train_n), segs.end());
  return s;
}

Subject subject_from_trace(pairing::SampleStore& store, signal::SensorTrace trace,
                           std::size_t train_n, const signal::STFTConfig& stft) {
  require(stft.hop > 0, ErrorCode::InvalidArgument, "dataset pipeline needs an explicit hop");
  const std::size_t stride = stft.hop * stft.frames_kept;
  const std::size_t span = stft.required_length(stft.hop);
  const std::size_t images = trace.size() >= span ? (trace.size() - span) / stride + 1 : 0;
  require(images > train_n, ErrorCode::InvalidArgument,
          "trace '" + trace.subject_id + "' holds " + std::to_string(images) +
              " images; need more than " + std::to_string(train_n) + " to hold some out");
  Subject s;
  s.id = trace.subject_id;
  s.trace = std::move(trace);
  std::vector<signal::SensorTrace> segs;
  const auto ids =
      add_images(store, s.trace, stft, images, pairing::SampleOrigin::Genuine, &segs);
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n), ids.end());
  s.train_segments.assign(segs.begin(), segs.begin() + static_cast<std::ptrdiff_t>(train_n));
  s.test_segments.assign(segs.begin() + static_cast<std::ptrdiff_t>(train_n), segs.end());
  return s;
}

std::vector<signal::SyntheticSubjectSpec> subject_specs(std::size_t n, std::uint64_t seed,
                                                        const std::string& prefix) {
  std::vector<signal::SyntheticSubjectSpec> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(signal::random_subject(seed * 1000003ULL + i, prefix + std::to_string(i)));
  return out;
}

pairing::ReservoirBuffer owner_buffer(const std::vector<Subject>& subjects, std::size_t owner,
                                      const std::vector<pairing::PairRecord>& defense,
                                      std::uint64_t seed, std::size_t capacity) {
  const auto& o = subjects.at(owner);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < subjects.size(); ++i)
    if (i != owner) classes.push_back(subjects[i].train);
  pairing::PairStreams streams{pairing::PositiveStream(o.train),
                               pairing::NegativeStream(o.train, classes, defense)};
  return pairing::fill_buffer(streams, capacity ? capacity : o.train.size() * o.train.size(),
                             seed);
}

std::vector<metric::EvalPair> owner_eval_pairs(const std::vector<Subject>& subjects,
                                               std::size_t owner) {
  const auto& o = subjects.at(owner);
  std::vector<metric::EvalPair> out;
  for (std::size_t t : o.test)
    for (std::size_t r : o.train) out.push_back({{t, r, 1}, o.id});
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (i == owner) continue;
    for (std::size_t t : subjects[i].test)
      for (std::size_t r : o.train) out.push_back({{t, r, 0}, o.id});
  }
  return out;
}

}  // namespace gaitfuse::app
