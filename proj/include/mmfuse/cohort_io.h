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

#ifndef MMFUSE_COHORT_IO_H_
#define MMFUSE_COHORT_IO_H_

#include <string>
#include <string_view>
#include <vector>

#include "mmfuse/cohort.h"
#include "mmfuse/wav.h"

namespace mmfuse {

// On-disk cohort layout (all paths relative to the cohort directory):
//   cohort.csv            one row per patient, columns kCohortColumns
//   plans/<id>.txt        surgical-plan free text
//   wav/<id>/<vowel>.wav  16-bit mono 44.1 kHz vowel recordings
//   manifest.json         {patient_id: {csv_row, wav_paths[5], plan_path}}
// Missing clips appear as null entries in wav_paths.
inline constexpr std::string_view kCohortCsvName = "cohort.csv";
inline constexpr std::string_view kManifestName = "manifest.json";

extern const std::vector<std::string_view> kTabularColumns;

void WriteCohort(const std::string& directory,
                 const std::vector<PatientRecord>& records);

// Accepts the cohort directory or the manifest path. Outcome columns are
// optional; absent or empty outcome cells read as NaN, and a row with no
// outcome values at all has no OutcomeSet.
std::vector<PatientRecord> ReadCohort(const std::string& path,
                                      const WavReadOptions& wav_options = {});

// CSV with header patient_id,desirable_count,label.
std::string FormatLabelsCsv(const std::vector<PatientRecord>& records,
                            const std::vector<PrognosisLabel>& labels);

// Writes via a temporary file and rename so readers never see partial output.
void WriteFileAtomic(const std::string& path, std::string_view contents);
std::string ReadFile(const std::string& path);

// Shortest round-trip decimal representation.
std::string FormatDouble(double value);

}  // namespace mmfuse

#endif  // MMFUSE_COHORT_IO_H_
