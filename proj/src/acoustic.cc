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

#include "mmfuse/acoustic.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "mmfuse/wav.h"

namespace mmfuse {

nlohmann::json AcousticConfig::ToJson() const {
  return {{"kind", kind == SpectrogramKind::kMfcc ? "mfcc" : "stft_log1p"},
          {"stft.frame", frame},
          {"stft.hop", hop},
          {"mfcc.coeffs", mfcc_coeffs},
          {"mfcc.filters", mfcc_filters},
          {"trim", trim},
          {"trim_threshold", trim_threshold},
          {"allow_resample", allow_resample},
          {"max_frames", max_frames}};
}

AcousticConfig AcousticConfig::FromJson(const nlohmann::json& j) {
  AcousticConfig c;
  if (j.contains("kind")) {
    c.kind = j["kind"].get<std::string>() == "mfcc" ? SpectrogramKind::kMfcc
                                                    : SpectrogramKind::kStftLog1p;
  }
  c.frame = j.value("stft.frame", c.frame);
  c.hop = j.value("stft.hop", c.hop);
  c.mfcc_coeffs = j.value("mfcc.coeffs", c.mfcc_coeffs);
  c.mfcc_filters = j.value("mfcc.filters", c.mfcc_filters);
  c.trim = j.value("trim", c.trim);
  c.trim_threshold = j.value("trim_threshold", c.trim_threshold);
  c.allow_resample = j.value("allow_resample", c.allow_resample);
  c.max_frames = j.value("max_frames", c.max_frames);
  return c;
}

std::size_t FrameCount(std::size_t n, int frame, int hop) {
  if (n == 0) return 0;
  if (n < static_cast<std::size_t>(frame)) return 1;
  return (n - frame) / hop + 1;
}

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Returns |X_k| for k = 0..n/2.
  void Magnitude(const double* frame, double* mag) {
    std::copy(frame, frame + n_, in_);
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) mag[k] = std::hypot(out_[k][0], out_[k][1]);
  }

 private:
  static std::mutex& PlannerMutex() {
    static std::mutex mu;
    return mu;
  }
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Spectrogram PreAcoustic(const AudioClip& input, const AcousticConfig& config) {
  if (input.samples.empty()) throw ValidationError("empty audio signal");
  if (config.frame <= 0 || config.hop <= 0) throw ValidationError("frame and hop must be positive");
  AudioClip clip = input;
  if (clip.sample_rate != kExpectedSampleRate || clip.bits_per_sample != kExpectedBitsPerSample) {
    if (!config.allow_resample) {
      throw ValidationError("expected 16-bit 44100 Hz audio, got " +
                            std::to_string(clip.bits_per_sample) + "-bit " +
                            std::to_string(clip.sample_rate) + " Hz");
    }
    clip = Resample(clip, kExpectedSampleRate);
    clip.bits_per_sample = kExpectedBitsPerSample;
  }
  if (config.trim) clip = TrimSilence(clip, config.trim_threshold);

  const int n = config.frame;
  const std::size_t frames = FrameCount(clip.samples.size(), n, config.hop);
  const int bins = n / 2 + 1;
  std::vector<double> window(n);
  for (int i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }

  Matrix magnitude(frames, bins);
  RealFft fft(n);
  std::vector<double> buf(n);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * config.hop;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = start + i;
      buf[i] = idx < clip.samples.size() ? clip.samples[idx] * window[i] : 0.0;
    }
    fft.Magnitude(buf.data(), magnitude.row(f));
  }

  Spectrogram out;
  out.kind = config.kind;
  out.sample_rate = clip.sample_rate;
  if (config.kind == SpectrogramKind::kStftLog1p) {
    for (double& v : magnitude.data) v = std::log1p(v);
    out.frames = std::move(magnitude);
    return out;
  }

  // MFCC: power spectrum -> triangular mel filterbank -> log -> DCT-II.
  const int filters = config.mfcc_filters;
  const int coeffs = config.mfcc_coeffs;
  if (coeffs > filters) throw ValidationError("mfcc.coeffs must not exceed mfcc.filters");
  const double mel_hi = HzToMel(clip.sample_rate / 2.0);
  std::vector<double> edges(filters + 2);
  for (int i = 0; i < filters + 2; ++i) {
    edges[i] = MelToHz(mel_hi * i / (filters + 1)) * n / clip.sample_rate;
  }
  Matrix mfcc(frames, coeffs);
  std::vector<double> energy(filters);
  for (std::size_t f = 0; f < frames; ++f) {
    for (int m = 0; m < filters; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        double w = 0.0;
        if (k > lo && k <= mid) w = (k - lo) / (mid - lo);
        else if (k > mid && k < hi) w = (hi - k) / (hi - mid);
        if (w > 0) {
          const double mag = magnitude(f, k);
          e += w * mag * mag / n;
        }
      }
      energy[m] = std::log(e + 1e-10);
    }
    for (int c = 0; c < coeffs; ++c) {
      double s = 0.0;
      for (int m = 0; m < filters; ++m) {
        s += energy[m] * std::cos(std::numbers::pi * c * (m + 0.5) / filters);
      }
      const double scale = c == 0 ? std::sqrt(1.0 / filters) : std::sqrt(2.0 / filters);
      mfcc(f, c) = scale * s;
    }
  }
  out.frames = std::move(mfcc);
  return out;
}

AudioClip TrimSilence(const AudioClip& clip, double energy_threshold, int block_length) {
  if (energy_threshold < 0) throw ValidationError("energy threshold must be >= 0");
  if (block_length <= 0) throw ValidationError("block length must be positive");
  AudioClip out = clip;
  out.samples.clear();
  const std::size_t n = clip.samples.size();
  for (std::size_t start = 0; start < n; start += block_length) {
    const std::size_t end = std::min(n, start + block_length);
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += clip.samples[i] * clip.samples[i];
    const double rms = std::sqrt(sum / static_cast<double>(end - start));
    if (rms >= energy_threshold) {
      out.samples.insert(out.samples.end(), clip.samples.begin() + start,
                         clip.samples.begin() + end);
    }
  }
  if (out.samples.empty()) {
    throw ValidationError("clip '" + clip.vowel + "' is silent after trimming");
  }
  return out;
}

Matrix PadOrTruncate(const Matrix& frames, std::size_t max_frames, std::vector<bool>* mask) {
  Matrix out(max_frames, frames.cols);
  const std::size_t keep = std::min(max_frames, frames.rows);
  std::copy(frames.data.begin(), frames.data.begin() + keep * frames.cols, out.data.begin());
  if (mask) {
    mask->assign(max_frames, false);
    std::fill(mask->begin(), mask->begin() + keep, true);
  }
  return out;
}

}  // namespace mmfuse
