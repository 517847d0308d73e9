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

#include "mmfuse/features.h"

#include <algorithm>

#include "mmfuse/common.h"

namespace mmfuse {

std::string_view ModalityName(Modality m) {
  switch (m) {
    case Modality::kTabular: return "tabular";
    case Modality::kText: return "text";
    case Modality::kAudio: return "audio";
  }
  return "unknown";
}

Modality ParseModality(std::string_view name) {
  if (name == "tabular") return Modality::kTabular;
  if (name == "text") return Modality::kText;
  if (name == "audio") return Modality::kAudio;
  throw ValidationError("unknown modality '" + std::string(name) +
                        "' (expected tabular, text or audio)");
}

std::size_t FeatureBank::IndexOf(std::string_view patient_id) const {
  for (std::size_t i = 0; i < patients.size(); ++i) {
    if (patients[i].patient_id == patient_id) return i;
  }
  throw ValidationError("unknown patient id '" + std::string(patient_id) + "'");
}

std::vector<std::string> FeatureBank::Ids(const std::vector<std::size_t>& indices) const {
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (auto i : indices) ids.push_back(patients.at(i).patient_id);
  return ids;
}

std::size_t FeatureBank::UtteranceCount(const std::vector<std::size_t>& indices) const {
  std::size_t n = 0;
  for (auto i : indices) n += patients.at(i).utterances.size();
  return n;
}

FeatureBank BuildFeatureBank(const std::vector<PatientRecord>& records,
                             const EmbeddingProvider& provider,
                             const AcousticConfig& acoustic, const TabularSchema& schema,
                             const TextCleaningOptions& cleaning) {
  ValidateCohort(records);
  if (acoustic.max_frames <= 0) throw ValidationError("acoustic max_frames must be positive");
  FeatureBank bank;
  bank.schema = schema;
  bank.acoustic = acoustic;
  bank.provider_id = provider.id();
  bank.text_dim = provider.dim();
  for (const auto& r : records) {
    PatientFeatures f;
    f.patient_id = r.patient_id;
    f.tabular_raw = ExtractRaw(r, schema);
    if (!r.surgical_plan_text.empty()) {
      TextEmbedding emb = PreText(r.surgical_plan_text, r.patient_id, provider, cleaning,
                                  provider.dim());
      f.text_pooled = MeanPool(emb.vectors);
      f.text = nn::Tensor::FromData({emb.vectors.rows, emb.vectors.cols},
                                    std::move(emb.vectors.data));
    }
    for (const auto& clip : r.utterances) {
      Spectrogram spec = PreAcoustic(clip, acoustic);
      const std::size_t rows =
          std::min<std::size_t>(spec.frames.rows, static_cast<std::size_t>(acoustic.max_frames));
      const std::size_t cols = spec.frames.cols;
      if (bank.audio_bins == 0) bank.audio_bins = cols;
      std::vector<double> data(spec.frames.data.begin(),
                               spec.frames.data.begin() + rows * cols);
      f.utterances.push_back(nn::Tensor::FromData({rows, cols}, std::move(data)));
    }
    bank.patients.push_back(std::move(f));
  }
  if (bank.audio_bins == 0) {
    bank.audio_bins = acoustic.kind == SpectrogramKind::kMfcc
                          ? static_cast<std::size_t>(acoustic.mfcc_coeffs)
                          : static_cast<std::size_t>(acoustic.frame / 2 + 1);
  }
  return bank;
}

}  // namespace mmfuse
