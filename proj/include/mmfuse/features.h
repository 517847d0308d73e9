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

#ifndef MMFUSE_FEATURES_H_
#define MMFUSE_FEATURES_H_

#include <string>
#include <string_view>
#include <vector>

#include "mmfuse/acoustic.h"
#include "mmfuse/cohort.h"
#include "mmfuse/tabular.h"
#include "mmfuse/tensor.h"
#include "mmfuse/text.h"

namespace mmfuse {

enum class Modality { kTabular, kText, kAudio };

std::string_view ModalityName(Modality m);
// Accepts "tabular", "text", "audio". Throws ValidationError otherwise.
Modality ParseModality(std::string_view name);

// Preprocessed views of one patient. Tabular values stay raw because the
// scaler is fitted per training split; text and audio need no fitting.
struct PatientFeatures {
  std::string patient_id;
  std::vector<RawValue> tabular_raw;
  nn::Tensor text;                     // [T, D] token embeddings
  std::vector<double> text_pooled;     // mean over tokens, width D
  std::vector<nn::Tensor> utterances;  // each [frames, bins], at most max_frames rows
};

struct FeatureBank {
  std::vector<PatientFeatures> patients;
  TabularSchema schema;
  AcousticConfig acoustic;
  std::string provider_id;
  std::size_t text_dim = 0;
  std::size_t audio_bins = 0;

  std::size_t size() const { return patients.size(); }
  // Throws ValidationError for an unknown id.
  std::size_t IndexOf(std::string_view patient_id) const;
  std::vector<std::string> Ids(const std::vector<std::size_t>& indices) const;
  // Total utterance count over the given patients.
  std::size_t UtteranceCount(const std::vector<std::size_t>& indices) const;
};

// Runs the per-modality preprocessing once for a cohort. Patients without a
// plan text or clips simply carry empty views; models that need the modality
// reject them at fit or predict time.
FeatureBank BuildFeatureBank(const std::vector<PatientRecord>& records,
                             const EmbeddingProvider& provider,
                             const AcousticConfig& acoustic = {},
                             const TabularSchema& schema = TabularSchema::Default(),
                             const TextCleaningOptions& cleaning = {});

}  // namespace mmfuse

#endif  // MMFUSE_FEATURES_H_
