#include "audio/batch.hpp"

#include <numeric>

#include "audio/preprocess.hpp"
#include "audio/wav.hpp"
#include "common/error.hpp"

namespace rwr {

std::vector<float> MemorySource::load(const Trial& t) const {
  const auto it = samples_->find(t.utt_id);
  if (it == samples_->end()) {
    throw DataError("batch: no in-memory samples for utt_id '" + t.utt_id +
                    "'");
  }
  return it->second;
}

std::vector<float> WavDirSource::load(const Trial& t) const {
  const std::string path =
      root_.empty() ? t.utt_id + ".wav" : root_ + "/" + t.utt_id + ".wav";
  std::vector<std::string> warnings;
  Waveform wf = load_wav_file(path, &warnings);
  if (warn_) {
    for (const std::string& w : warnings) warn_(path + ": " + w);
  }
  return scale(wf).samples;
}

std::vector<std::vector<size_t>> batch_plan(size_t n, int batch_size,
                                            uint64_t shuffle_seed,
                                            bool shuffle) {
  if (batch_size < 1) {
    throw ConfigError("batch: batch_size must be >= 1, got " +
                      std::to_string(batch_size));
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  if (shuffle) {
    Rng rng(shuffle_seed);
    rng.shuffle(order.begin(), order.end());
  }
  std::vector<std::vector<size_t>> plan;
  const size_t bs = static_cast<size_t>(batch_size);
  for (size_t start = 0; start < n; start += bs) {
    const size_t end = std::min(n, start + bs);
    plan.emplace_back(order.begin() + static_cast<ptrdiff_t>(start),
                      order.begin() + static_cast<ptrdiff_t>(end));
  }
  return plan;
}

Batch assemble_batch(const TrialSet& set, const SampleSource& src,
                     std::span<const size_t> indices, int64_t input_len,
                     Rng* crop_rng) {
  if (indices.empty()) {
    throw DataError("batch: empty index list");
  }
  if (input_len <= 0) {
    throw ConfigError("batch: input_len must be positive, got " +
                      std::to_string(input_len));
  }
  const int64_t b_count = static_cast<int64_t>(indices.size());
  Batch batch;
  batch.x = Tensor({b_count, 1, input_len});
  for (int64_t b = 0; b < b_count; ++b) {
    const size_t idx = indices[static_cast<size_t>(b)];
    if (idx >= set.trials.size()) {
      throw DataError("batch: trial index " + std::to_string(idx) +
                      " out of range (set has " +
                      std::to_string(set.trials.size()) + ")");
    }
    const Trial& t = set.trials[idx];
    Waveform wf;
    wf.samples = src.load(t);
    wf.source_id = t.utt_id;
    const Waveform fixed = crop_rng != nullptr
                               ? fix_length_random(wf, input_len, *crop_rng)
                               : fix_length(wf, input_len);
    float* dst = batch.x.data() + b * input_len;
    std::copy(fixed.samples.begin(), fixed.samples.end(), dst);
    batch.labels.push_back(label_index(t.label));
    batch.utt_ids.push_back(t.utt_id);
  }
  return batch;
}

}  // namespace rwr
