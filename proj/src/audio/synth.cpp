#include "audio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "audio/wav.hpp"
#include "common/fileio.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace rwr {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNoiseSigma = 0.01;
constexpr double kClipLevel = 0.5;

std::vector<float> two_tone(int64_t length, Rng& rng) {
  double amp[2], freq[2], phase[2];
  for (int j = 0; j < 2; ++j) {
    amp[j] = rng.uniform(0.3, 0.42);
    freq[j] = rng.uniform(200.0, 3000.0);
    phase[j] = rng.uniform(0.0, 2.0 * kPi);
  }
  std::vector<float> x(static_cast<size_t>(length));
  const double w0 = 2.0 * kPi * freq[0] / 16000.0;
  const double w1 = 2.0 * kPi * freq[1] / 16000.0;
  for (int64_t t = 0; t < length; ++t) {
    const double v = amp[0] * std::sin(w0 * t + phase[0]) +
                     amp[1] * std::sin(w1 * t + phase[1]) +
                     kNoiseSigma * rng.normal();
    x[static_cast<size_t>(t)] =
        static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return x;
}

void clip_and_renorm(std::vector<float>& x) {
  float peak = 0.0f;
  for (float v : x) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0f) return;
  float clipped_peak = 0.0f;
  for (float& v : x) {
    v = std::clamp(v, -static_cast<float>(kClipLevel),
                   static_cast<float>(kClipLevel));
    clipped_peak = std::max(clipped_peak, std::abs(v));
  }
  if (clipped_peak <= 0.0f) return;
  const float gain = peak / clipped_peak;
  for (float& v : x) v = std::clamp(v * gain, -1.0f, 1.0f);
}

std::string utt_name(const char* cls, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "SYN_%s_%04d", cls, i);
  return buf;
}

}  // namespace

SynthDataset synth_dataset(int n_per_class, int64_t length, uint64_t seed) {
  if (n_per_class < 0) {
    throw DataError("synth: n_per_class must be >= 0, got " +
                    std::to_string(n_per_class));
  }
  if (length <= 0) {
    throw DataError("synth: length must be positive, got " +
                    std::to_string(length));
  }
  SynthDataset ds;
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const bool spoof = i >= n_per_class;
    Rng rng(derive_seed(seed, static_cast<uint64_t>(i)));
    std::vector<float> x = two_tone(length, rng);
    if (spoof) clip_and_renorm(x);

    Trial t;
    t.utt_id = utt_name(spoof ? "S" : "B", spoof ? i - n_per_class : i);
    t.label = spoof ? Label::kSpoof : Label::kBonafide;
    t.attack_id = spoof ? "A01" : "-";
    ds.samples.emplace(t.utt_id, std::move(x));
    ds.trials.trials.push_back(std::move(t));
  }
  return ds;
}

void write_synth_dataset(const SynthDataset& ds, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw DataError("synth: cannot create directory '" + dir +
                    "': " + ec.message());
  }
  std::vector<std::string> speakers;
  for (const Trial& t : ds.trials.trials) {
    const auto it = ds.samples.find(t.utt_id);
    if (it == ds.samples.end()) {
      throw DataError("synth: no samples for utt_id '" + t.utt_id + "'");
    }
    write_wav_file(dir + "/" + t.utt_id + ".wav", quantize_pcm16(it->second),
                   16000);
    speakers.push_back("SYN_SPK");
  }
  write_file_atomic(dir + "/protocol.txt",
                    format_protocol(ds.trials, speakers), "synth protocol");
}

}  // namespace rwr
