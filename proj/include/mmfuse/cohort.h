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

#ifndef MMFUSE_COHORT_H_
#define MMFUSE_COHORT_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmfuse {

enum class Sex { kMale, kFemale };

std::string_view SexName(Sex sex);
Sex ParseSex(std::string_view text);

// Mono PCM clip. Samples are normalized to [-1, 1].
struct AudioClip {
  std::string vowel;  // "a", "e", "i", "o" or "u"
  int sample_rate = 44100;
  int bits_per_sample = 16;
  std::vector<double> samples;
};

inline constexpr std::array<std::string_view, 5> kVowels = {"a", "e", "i", "o",
                                                            "u"};

// Body Constitution Questionnaire result. The booleans are always derived from
// the three section sums through the diagnosis thresholds below.
struct BcqAssessment {
  int yang_xu_score = 0;
  int yin_xu_score = 0;
  int stasis_score = 0;
  bool yang_xu = false;
  bool yin_xu = false;
  bool stasis = false;
  bool gentleness = true;

  friend bool operator==(const BcqAssessment&, const BcqAssessment&) = default;
};

inline constexpr int kYangXuThreshold = 31;
inline constexpr int kYinXuThreshold = 30;
inline constexpr int kStasisThreshold = 27;
inline constexpr int kBcqItemCount = 44;

// Assignment of questionnaire items (0-based) to the three sections.
struct BcqSectionMap {
  std::vector<int> yang_xu_items;
  std::vector<int> yin_xu_items;
  std::vector<int> stasis_items;

  // Items 0-14 Yang-Xu, 15-29 Yin-Xu, 30-43 Stasis.
  static BcqSectionMap Default();
};

// Builds the assessment from three section sums.
BcqAssessment BcqFromScores(int yang_xu_score, int yin_xu_score,
                            int stasis_score);

// Scores 44 responses on the 1-5 frequency scale. Throws ValidationError on an
// out-of-range response (naming the item) or a section map that does not
// partition the items.
BcqAssessment ScoreBcq(const std::vector<int>& item_responses,
                       const BcqSectionMap& sections = BcqSectionMap::Default());

// Eight outcome components used for prognosis labeling. A NaN field means
// "missing" (for example an absent CSV cell).
struct OutcomeSet {
  double vas_diff = 0.0;
  double eq5d_diff = 0.0;
  double odi_diff = 0.0;
  double surgery_minutes = 0.0;
  double blood_loss_ml = 0.0;
  double analgesic_types = 0.0;
  double admission_days = 0.0;
  double complications = 0.0;  // 0 or 1

  static constexpr std::size_t kCount = 8;
  std::array<double, kCount> Values() const;
  static OutcomeSet FromValues(const std::array<double, kCount>& values);
};

inline constexpr std::array<std::string_view, OutcomeSet::kCount>
    kOutcomeNames = {"vas_diff",      "eq5d_diff",       "odi_diff",
                     "surgery_minutes", "blood_loss_ml", "analgesic_types",
                     "admission_days", "complications"};

enum class DiffForm { kSigned, kAbsolute };

// Relative pre/post change: (post - pre) / pre, or |pre - post| / pre.
// Throws ValidationError when pre == 0.
double PrePostDiff(double pre, double post, DiffForm form = DiffForm::kSigned);

struct PatientRecord {
  std::string patient_id;
  int age = 0;
  Sex sex = Sex::kMale;
  double bmi = 0.0;
  double vas = 0.0;
  double eq5d = 0.0;
  double odi = 0.0;
  int asa = 1;
  BcqAssessment bcq;
  std::string surgical_plan_text;
  std::vector<AudioClip> utterances;
  std::optional<OutcomeSet> outcomes;
};

// Throws ValidationError naming the patient and field on any range violation.
void ValidateRecord(const PatientRecord& record);
// Record-level validation plus patient_id uniqueness.
void ValidateCohort(const std::vector<PatientRecord>& records);

enum class Direction { kHigherIsDesirable, kLowerIsDesirable };
using PolarityMap = std::array<Direction, OutcomeSet::kCount>;

// Improvement direction: lower VAS/ODI change, surgery time, blood loss,
// analgesic count, admission days and complications are desirable; higher
// EQ-5D change is desirable.
PolarityMap DefaultPolarity();
// "Scored higher than average" read literally for all eight outcomes.
PolarityMap LiteralPolarity();

struct PrognosisLabel {
  bool desirable = false;
  int desirable_count = 0;
  double threshold_used = 0.0;  // cohort mean of desirable_count

  friend bool operator==(const PrognosisLabel&,
                         const PrognosisLabel&) = default;
};

// Ground-truth determination. Per outcome, a patient earns a mark when strictly
// on the desirable side of the cohort mean; the final label is desirable when
// the mark count strictly exceeds the cohort mean count.
std::vector<PrognosisLabel> LabelCohort(const std::vector<PatientRecord>& records,
                                        const PolarityMap& polarity);

struct SynthOptions {
  double tone_seconds = 0.08;
  double gap_seconds = 0.02;  // leading and trailing silence per clip
  double noise_amplitude = 0.01;
};

struct SyntheticCohort {
  std::vector<PatientRecord> records;
  std::vector<int> planted;  // latent prognosis, 1 = desirable
};

// Deterministic synthetic cohort. signal_strength in [0, 1] scales how much
// the planted prognosis shifts tabular fields, plan wording, vowel pitch and
// outcomes. Throws ValidationError for n < 4 or signal outside [0, 1].
SyntheticCohort SynthCohort(int n, std::uint64_t seed, double signal_strength,
                            const SynthOptions& options = {});

// Surgical approaches used by the plan-text templates.
const std::vector<std::string>& SurgicalApproachVocabulary();

}  // namespace mmfuse

#endif  // MMFUSE_COHORT_H_
