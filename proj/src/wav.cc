/*
 * Copyright 2026 The mmfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mmfuse/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "mmfuse/common.h"

namespace mmfuse {
namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

AudioClip ReadWav(const std::string& path, const WavReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open WAV file '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) {
    throw ValidationError("WAV '" + path + "': " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  int channels = 0, rate = 0, bits = 0, format = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    if (pos + 8 + size > bytes.size()) fail("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) fail("short fmt chunk");
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = static_cast<int>(ReadU32(chunk + 12));
      bits = ReadU16(chunk + 22);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos += 8 + size + (size & 1u);
  }
  if (format != 1) fail("only PCM encoding is supported");
  if (data == nullptr) fail("missing data chunk");
  if (channels < 1) fail("invalid channel count");
  if (bits != 8 && bits != 16 && bits != 24 && bits != 32) {
    fail("unsupported bit depth " + std::to_string(bits));
  }
  if (!options.allow_conversion) {
    if (bits != kExpectedBitsPerSample) {
      fail("expected 16-bit PCM, got " + std::to_string(bits) + "-bit");
    }
    if (rate != kExpectedSampleRate) {
      fail("expected 44100 Hz, got " + std::to_string(rate) + " Hz");
    }
    if (channels != 1) fail("expected mono audio");
  }

  const std::size_t bytes_per_sample = static_cast<std::size_t>(bits / 8);
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  AudioClip clip;
  clip.sample_rate = rate;
  clip.bits_per_sample = bits;
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * bytes_per_sample;
      double v = 0.0;
      switch (bits) {
        case 8:
          v = (static_cast<int>(p[0]) - 128) / 128.0;
          break;
        case 16:
          v = static_cast<std::int16_t>(ReadU16(p)) / 32767.0;
          break;
        case 24: {
          std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
          if (s & 0x800000) s |= ~0xFFFFFF;
          v = s / 8388607.0;
          break;
        }
        case 32:
          v = static_cast<std::int32_t>(ReadU32(p)) / 2147483647.0;
          break;
      }
      acc += v;
    }
    clip.samples[f] = std::clamp(acc / channels, -1.0, 1.0);
  }
  if (options.allow_conversion) {
    clip.bits_per_sample = kExpectedBitsPerSample;
    if (rate != kExpectedSampleRate) clip = Resample(clip, kExpectedSampleRate);
  }
  return clip;
}

void WriteWav(const std::string& path, const AudioClip& clip) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.append("RIFF");
  PutU32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate * 2));
  PutU16(out, 2);
  PutU16(out, 16);
  out.append("data");
  PutU32(out, data_bytes);
  for (double s : clip.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
    PutU16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError("cannot write WAV file '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

AudioClip Resample(const AudioClip& clip, int target_rate) {
  AudioClip out = clip;
  out.sample_rate = target_rate;
  if (clip.samples.empty() || clip.sample_rate == target_rate) return out;
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  const auto n = static_cast<std::size_t>(
      std::floor((clip.samples.size() - 1) / ratio)) + 1;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i * ratio;
    const auto lo = static_cast<std::size_t>(x);
    const std::size_t hi = std::min(lo + 1, clip.samples.size() - 1);
    const double frac = x - lo;
    out.samples[i] = clip.samples[lo] * (1 - frac) + clip.samples[hi] * frac;
  }
  return out;
}

}  // namespace mmfuse
