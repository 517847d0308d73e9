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

#ifndef MMFUSE_WAV_H_
#define MMFUSE_WAV_H_

#include <string>

#include "mmfuse/cohort.h"

namespace mmfuse {

inline constexpr int kExpectedSampleRate = 44100;
inline constexpr int kExpectedBitsPerSample = 16;

struct WavReadOptions {
  // When false, anything other than mono 16-bit 44.1 kHz PCM is rejected.
  // When true, 8/24/32-bit PCM is converted and the sample rate is linearly
  // resampled to 44.1 kHz; multi-channel input is averaged to mono.
  bool allow_conversion = false;
};

AudioClip ReadWav(const std::string& path, const WavReadOptions& options = {});

// Writes 16-bit mono PCM at the clip's sample rate.
void WriteWav(const std::string& path, const AudioClip& clip);

// Linear-interpolation resampling.
AudioClip Resample(const AudioClip& clip, int target_rate);

}  // namespace mmfuse

#endif  // MMFUSE_WAV_H_
