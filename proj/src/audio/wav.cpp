#include "audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "common/error.hpp"
#include "common/fileio.hpp"

namespace rwr {
namespace {

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8 & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 16 & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 24 & 0xff));
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8 & 0xff));
}

void put_tag(std::vector<uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform parse_wav(std::span<const uint8_t> bytes,
                   std::vector<std::string>* warnings) {
  if (bytes.size() < 12) {
    throw DataError("wav: stream too short for RIFF header (" +
                    std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) {
    throw DataError("wav: missing RIFF tag at offset 0");
  }
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError("wav: missing WAVE tag at offset 8");
  }
  const uint64_t riff_end =
      std::min<uint64_t>(8ull + read_u32(bytes.data() + 4), bytes.size());

  bool have_fmt = false;
  bool have_data = false;
  uint16_t channels = 0;
  uint16_t bits = 0;
  int sample_rate = 0;
  std::vector<float> samples;

  uint64_t pos = 12;
  while (pos + 8 <= riff_end) {
    char tag[5] = {};
    std::memcpy(tag, bytes.data() + pos, 4);
    const uint64_t size = read_u32(bytes.data() + pos + 4);
    const uint64_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw DataError("wav: chunk '" + std::string(tag) + "' at offset " +
                      std::to_string(pos) + " declares " +
                      std::to_string(size) + " bytes but only " +
                      std::to_string(bytes.size() - body) + " remain");
    }
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) {
        throw DataError("wav: fmt chunk too short (" + std::to_string(size) +
                        " bytes)");
      }
      const uint16_t format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(read_u32(bytes.data() + body + 4));
      bits = read_u16(bytes.data() + body + 14);
      if (format != 1) {
        throw DataError("wav: unsupported audio format " +
                        std::to_string(format) + " (want PCM=1)");
      }
      if (channels != 1) {
        throw DataError("wav: unsupported channel count " +
                        std::to_string(channels) + " (want mono)");
      }
      if (bits != 16) {
        throw DataError("wav: unsupported bit depth " + std::to_string(bits) +
                        " (want 16)");
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) {
        throw DataError("wav: data chunk precedes fmt chunk");
      }
      if (size % 2 != 0) {
        throw DataError("wav: data chunk size " + std::to_string(size) +
                        " is not a multiple of the sample size");
      }
      const uint64_t n = size / 2;
      samples.resize(n);
      const uint8_t* p = bytes.data() + body;
      for (uint64_t i = 0; i < n; ++i) {
        samples[i] = static_cast<float>(
            static_cast<int16_t>(read_u16(p + 2 * i)));
      }
      have_data = true;
    }
    pos = body + size + (size & 1);  // chunk bodies are padded to even length
  }

  if (!have_fmt) throw DataError("wav: missing fmt chunk");
  if (!have_data) throw DataError("wav: missing data chunk");
  if (warnings != nullptr) {
    if (sample_rate != 16000) {
      warnings->push_back("wav: sample rate " + std::to_string(sample_rate) +
                          " differs from expected 16000");
    }
    if (riff_end < bytes.size()) {
      warnings->push_back(
          "wav: " + std::to_string(bytes.size() - riff_end) +
          " trailing bytes past RIFF payload ignored");
    }
  }

  Waveform wf;
  wf.samples = std::move(samples);
  wf.sample_rate = sample_rate;
  return wf;
}

std::vector<uint8_t> write_wav(std::span<const int16_t> samples,
                               int sample_rate) {
  if (sample_rate <= 0) {
    throw DataError("wav: sample rate must be positive, got " +
                    std::to_string(sample_rate));
  }
  const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(sample_rate));
  put_u32(out, static_cast<uint32_t>(sample_rate) * 2);  // byte rate
  put_u16(out, 2);                                       // block align
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (int16_t s : samples) {
    put_u16(out, static_cast<uint16_t>(s));
  }
  return out;
}

std::vector<int16_t> quantize_pcm16(std::span<const float> samples) {
  std::vector<int16_t> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const float v = std::round(samples[i] * 32768.0f);
    out[i] = static_cast<int16_t>(std::clamp(v, -32768.0f, 32767.0f));
  }
  return out;
}

Waveform load_wav_file(const std::string& path,
                       std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("wav: cannot open '" + path + "'");
  }
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw DataError("wav: read failed for '" + path + "'");
  }
  Waveform wf = parse_wav(bytes, warnings);
  wf.source_id = path;
  return wf;
}

void write_wav_file(const std::string& path, std::span<const int16_t> samples,
                    int sample_rate) {
  const std::vector<uint8_t> bytes = write_wav(samples, sample_rate);
  write_file_atomic(path,
                    std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                     bytes.size()),
                    "wav");
}

}  // namespace rwr
