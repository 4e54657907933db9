#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "audio/protocol.hpp"

namespace rwr {

// Desk-scale two-class audio. Bonafide: two random-phase sinusoids plus
// Gaussian noise. Spoof: the same construction hard-clipped at 0.5 and
// renormalized back to the pre-clip peak, which injects harmonic distortion
// while keeping amplitudes comparable.
struct SynthDataset {
  TrialSet trials;  // bonafide block first, then spoof
  std::unordered_map<std::string, std::vector<float>> samples;  // in [-1,1]
};

// Deterministic for a fixed seed; each utterance draws from its own stream so
// the content of utterance i never depends on how many others were made.
SynthDataset synth_dataset(int n_per_class, int64_t length, uint64_t seed);

// Writes <dir>/<utt_id>.wav for every utterance plus <dir>/protocol.txt.
void write_synth_dataset(const SynthDataset& ds, const std::string& dir);

}  // namespace rwr
