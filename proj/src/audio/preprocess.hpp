#pragma once

#include <cstdint>

#include "audio/waveform.hpp"
#include "common/rng.hpp"

namespace rwr {

inline constexpr int64_t kDefaultInputLen = 128000;

// Forces exactly `target` samples: longer inputs keep the head, shorter ones
// are tiled from the start until full.
Waveform fix_length(const Waveform& wf, int64_t target = kDefaultInputLen);

// Like fix_length but longer inputs are cut at a random start. Opt-in for
// training; shorter inputs tile exactly as fix_length does.
Waveform fix_length_random(const Waveform& wf, int64_t target, Rng& rng);

// Maps raw PCM16 integer values into [-1, 1] by dividing by 32768.
Waveform scale(const Waveform& wf);

}  // namespace rwr
