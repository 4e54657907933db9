#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rwr {

// Mono sample vector. Fresh from the WAV parser the samples are raw 16-bit
// integer values; after scale() they live in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;
  std::string source_id;
};

}  // namespace rwr
