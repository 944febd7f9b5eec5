#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metric/evaluate.hpp"
#include "pairing/pairs.hpp"
#include "signal/noise.hpp"
#include "signal/spectrogram.hpp"
#include "signal/synth.hpp"

namespace gaitfuse::app {

// One walker: their raw trace and the store ids of the images cut from it.
struct Subject {
  std::string id;
  signal::SyntheticSubjectSpec spec;  // empty amplitudes for csv walkers
  signal::SensorTrace trace;
  std::vector<std::size_t> train, test;
  std::vector<signal::SensorTrace> train_segments, test_segments;
};

// Samples needed for `images` consecutive non-overlapping images.
std::size_t samples_for_images(const signal::STFTConfig& stft, std::size_t images);

// Cuts consecutive images from the trace into the store, standardized. Each
// image's raw segment is returned alongside when `segments` is non-null.
std::vector<std::size_t> add_images(pairing::SampleStore& store, const signal::SensorTrace& trace,
                                    const signal::STFTConfig& stft, std::size_t images,
                                    pairing::SampleOrigin origin,
                                    std::vector<signal::SensorTrace>* segments = nullptr);

// Synthesizes each spec for train_n + test_n images; the first train_n images
// train, the rest test.
Subject make_subject(pairing::SampleStore& store, const signal::SyntheticSubjectSpec& spec,
                     std::size_t train_n, std::size_t test_n, const signal::STFTConfig& stft,
                     double sample_rate);

std::vector<signal::SyntheticSubjectSpec> subject_specs(std::size_t n, std::uint64_t seed,
                                                        const std::string& prefix);

// Cuts every complete image of an existing trace; the first train_n train.
Subject subject_from_trace(pairing::SampleStore& store, signal::SensorTrace trace,
                           std::size_t train_n, const signal::STFTConfig& stft);

// Reservoir of one owner: r^2 owner positives and owner x other-subject
// negatives with the defense pairs first. capacity is R per half; 0 means r^2.
pairing::ReservoirBuffer owner_buffer(const std::vector<Subject>& subjects, std::size_t owner,
                                      const std::vector<pairing::PairRecord>& defense,
                                      std::uint64_t seed, std::size_t capacity = 0);

// Owner's held-out images against their training images (label 1) and every
// other subject's held-out images against the owner's training images (0).
std::vector<metric::EvalPair> owner_eval_pairs(const std::vector<Subject>& subjects,
                                               std::size_t owner);

}  // namespace gaitfuse::app
