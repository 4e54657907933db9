#include "audio/preprocess.hpp"

#include <string>

#include "common/error.hpp"

namespace rwr {
namespace {

void check_target(const Waveform& wf, int64_t target) {
  if (target <= 0) {
    throw DataError("fix_length: target must be positive, got " +
                    std::to_string(target));
  }
  if (wf.samples.empty()) {
    throw DataError("fix_length: empty waveform" +
                    (wf.source_id.empty() ? std::string()
                                          : " from '" + wf.source_id + "'"));
  }
}

Waveform tiled(const Waveform& wf, int64_t target, int64_t start) {
  const int64_t n = static_cast<int64_t>(wf.samples.size());
  Waveform out;
  out.sample_rate = wf.sample_rate;
  out.source_id = wf.source_id;
  out.samples.resize(static_cast<size_t>(target));
  if (n >= target) {
    for (int64_t i = 0; i < target; ++i) {
      out.samples[static_cast<size_t>(i)] =
          wf.samples[static_cast<size_t>(start + i)];
    }
  } else {
    for (int64_t i = 0; i < target; ++i) {
      out.samples[static_cast<size_t>(i)] =
          wf.samples[static_cast<size_t>(i % n)];
    }
  }
  return out;
}

}  // namespace

Waveform fix_length(const Waveform& wf, int64_t target) {
  check_target(wf, target);
  return tiled(wf, target, 0);
}

Waveform fix_length_random(const Waveform& wf, int64_t target, Rng& rng) {
  check_target(wf, target);
  const int64_t n = static_cast<int64_t>(wf.samples.size());
  const int64_t start =
      n > target ? static_cast<int64_t>(
                       rng.below(static_cast<uint64_t>(n - target + 1)))
                 : 0;
  return tiled(wf, target, start);
}

Waveform scale(const Waveform& wf) {
  Waveform out;
  out.sample_rate = wf.sample_rate;
  out.source_id = wf.source_id;
  out.samples.resize(wf.samples.size());
  constexpr float kInv = 1.0f / 32768.0f;
  for (size_t i = 0; i < wf.samples.size(); ++i) {
    out.samples[i] = wf.samples[i] * kInv;
  }
  return out;
}

}  // namespace rwr
