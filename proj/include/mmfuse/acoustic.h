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

#ifndef MMFUSE_ACOUSTIC_H_
#define MMFUSE_ACOUSTIC_H_

#include <vector>

#include "json.hpp"
#include "mmfuse/cohort.h"
#include "mmfuse/common.h"

namespace mmfuse {

enum class SpectrogramKind { kStftLog1p, kMfcc };

struct AcousticConfig {
  SpectrogramKind kind = SpectrogramKind::kStftLog1p;
  int frame = 256;  // stft.frame
  int hop = 128;    // stft.hop; Hann window
  int mfcc_coeffs = 13;
  int mfcc_filters = 26;
  bool trim = true;
  double trim_threshold = 0.01;  // RMS over 256-sample blocks
  bool allow_resample = false;
  // Per-utterance frame sequences are truncated or zero-padded to this many
  // frames before batching.
  int max_frames = 16;

  nlohmann::json ToJson() const;
  static AcousticConfig FromJson(const nlohmann::json& j);
};

struct Spectrogram {
  Matrix frames;  // frame count x bins
  SpectrogramKind kind = SpectrogramKind::kStftLog1p;
  int sample_rate = 44100;
};

// Number of analysis frames for a signal of n samples (n < frame yields one
// zero-padded frame).
std::size_t FrameCount(std::size_t n, int frame, int hop);

// Magnitude STFT followed by elementwise log1p, or MFCC. Rejects empty input
// and anything other than 16-bit 44.1 kHz unless allow_resample is set.
Spectrogram PreAcoustic(const AudioClip& clip, const AcousticConfig& config = {});

// Removes blocks of block_length samples whose RMS is below threshold; order is
// preserved. Throws ValidationError if nothing is left.
AudioClip TrimSilence(const AudioClip& clip, double energy_threshold,
                      int block_length = 256);

// Truncates or zero-pads rows to max_frames. mask[i] is true for real frames.
Matrix PadOrTruncate(const Matrix& frames, std::size_t max_frames,
                     std::vector<bool>* mask = nullptr);

}  // namespace mmfuse

#endif  // MMFUSE_ACOUSTIC_H_
