#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "audio/protocol.hpp"
#include "common/rng.hpp"
#include "core/tensor.hpp"

namespace rwr {

struct Batch {
  Tensor x;  // [B, 1, input_len]
  std::vector<int> labels;
  std::vector<std::string> utt_ids;
};

// Hands out scaled samples in [-1, 1] for a trial; length is whatever the
// source has, batch assembly fixes it.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::vector<float> load(const Trial& t) const = 0;
};

class MemorySource final : public SampleSource {
 public:
  explicit MemorySource(
      const std::unordered_map<std::string, std::vector<float>>* samples)
      : samples_(samples) {}
  std::vector<float> load(const Trial& t) const override;

 private:
  const std::unordered_map<std::string, std::vector<float>>* samples_;
};

// Reads <root>/<utt_id>.wav, scales to [-1, 1]. Parser warnings go to the
// callback when set.
class WavDirSource final : public SampleSource {
 public:
  explicit WavDirSource(std::string root,
                        std::function<void(const std::string&)> warn = {})
      : root_(std::move(root)), warn_(std::move(warn)) {}
  std::vector<float> load(const Trial& t) const override;

 private:
  std::string root_;
  std::function<void(const std::string&)> warn_;
};

// Index groups covering 0..n-1 once each: optionally shuffled by seed, then
// chunked; the final partial group is kept.
std::vector<std::vector<size_t>> batch_plan(size_t n, int batch_size,
                                            uint64_t shuffle_seed,
                                            bool shuffle);

// Loads the chosen trials, forces input_len samples each (head-cut or tile;
// random crop when crop_rng is given) and stacks them into [B, 1, input_len].
Batch assemble_batch(const TrialSet& set, const SampleSource& src,
                     std::span<const size_t> indices, int64_t input_len,
                     Rng* crop_rng = nullptr);

}  // namespace rwr
