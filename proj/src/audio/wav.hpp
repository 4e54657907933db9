#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "audio/waveform.hpp"

namespace rwr {

// Parses a RIFF/WAVE byte stream holding 16-bit PCM mono audio. Samples are
// returned as the raw integer values (no scaling). Unknown chunks are skipped.
// Recoverable oddities (sample rate != 16000, trailing garbage) are appended
// to `warnings` when the pointer is non-null; structural problems throw
// DataError naming the offending offset or field.
Waveform parse_wav(std::span<const uint8_t> bytes,
                   std::vector<std::string>* warnings = nullptr);

// Serializes mono PCM16 samples into a minimal RIFF/WAVE stream
// (fmt chunk + data chunk). parse_wav(write_wav(s, r)) recovers s and r.
std::vector<uint8_t> write_wav(std::span<const int16_t> samples,
                               int sample_rate);

// Rounds [-1, 1] floats to PCM16 with clamping at the rails.
std::vector<int16_t> quantize_pcm16(std::span<const float> samples);

Waveform load_wav_file(const std::string& path,
                       std::vector<std::string>* warnings = nullptr);

// Writes via a temp file in the same directory followed by rename.
void write_wav_file(const std::string& path, std::span<const int16_t> samples,
                    int sample_rate);

}  // namespace rwr
