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

#include "mmfuse/cohort.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "mmfuse/common.h"

namespace mmfuse {

std::string_view SexName(Sex sex) {
  return sex == Sex::kMale ? "male" : "female";
}

Sex ParseSex(std::string_view text) {
  if (text == "male" || text == "M" || text == "m") return Sex::kMale;
  if (text == "female" || text == "F" || text == "f") return Sex::kFemale;
  throw ValidationError("unknown sex value '" + std::string(text) + "'");
}

BcqSectionMap BcqSectionMap::Default() {
  BcqSectionMap map;
  for (int i = 0; i < 15; ++i) map.yang_xu_items.push_back(i);
  for (int i = 15; i < 30; ++i) map.yin_xu_items.push_back(i);
  for (int i = 30; i < kBcqItemCount; ++i) map.stasis_items.push_back(i);
  return map;
}

BcqAssessment BcqFromScores(int yang_xu_score, int yin_xu_score,
                            int stasis_score) {
  BcqAssessment out;
  out.yang_xu_score = yang_xu_score;
  out.yin_xu_score = yin_xu_score;
  out.stasis_score = stasis_score;
  out.yang_xu = yang_xu_score >= kYangXuThreshold;
  out.yin_xu = yin_xu_score >= kYinXuThreshold;
  out.stasis = stasis_score >= kStasisThreshold;
  out.gentleness = !out.yang_xu && !out.yin_xu && !out.stasis;
  return out;
}

BcqAssessment ScoreBcq(const std::vector<int>& item_responses,
                       const BcqSectionMap& sections) {
  const std::size_t n = item_responses.size();
  std::vector<int> owner(n, -1);
  const std::vector<int>* parts[3] = {&sections.yang_xu_items,
                                      &sections.yin_xu_items,
                                      &sections.stasis_items};
  for (int s = 0; s < 3; ++s) {
    for (int item : *parts[s]) {
      if (item < 0 || static_cast<std::size_t>(item) >= n) {
        throw ValidationError("BCQ section map references item " +
                              std::to_string(item) + " but only " +
                              std::to_string(n) + " responses were given");
      }
      if (owner[item] != -1) {
        throw ValidationError("BCQ item " + std::to_string(item) +
                              " assigned to more than one section");
      }
      owner[item] = s;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] == -1) {
      throw ValidationError("BCQ item " + std::to_string(i) +
                            " is not assigned to any section");
    }
    if (item_responses[i] < 1 || item_responses[i] > 5) {
      throw ValidationError("BCQ item " + std::to_string(i) + " response " +
                            std::to_string(item_responses[i]) +
                            " outside the 1-5 scale");
    }
  }
  int sums[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) sums[owner[i]] += item_responses[i];
  return BcqFromScores(sums[0], sums[1], sums[2]);
}

std::array<double, OutcomeSet::kCount> OutcomeSet::Values() const {
  return {vas_diff,      eq5d_diff,       odi_diff,       surgery_minutes,
          blood_loss_ml, analgesic_types, admission_days, complications};
}

OutcomeSet OutcomeSet::FromValues(const std::array<double, kCount>& v) {
  OutcomeSet o;
  o.vas_diff = v[0];
  o.eq5d_diff = v[1];
  o.odi_diff = v[2];
  o.surgery_minutes = v[3];
  o.blood_loss_ml = v[4];
  o.analgesic_types = v[5];
  o.admission_days = v[6];
  o.complications = v[7];
  return o;
}

double PrePostDiff(double pre, double post, DiffForm form) {
  if (pre == 0.0) {
    throw ValidationError("pre-post differentiation undefined for pre == 0");
  }
  if (form == DiffForm::kAbsolute) return std::abs(pre - post) / pre;
  return (post - pre) / pre;
}

namespace {

void Require(bool ok, const PatientRecord& r, std::string_view field,
             std::string_view rule) {
  if (!ok) {
    throw ValidationError("patient '" + r.patient_id + "': field '" +
                          std::string(field) + "' " + std::string(rule));
  }
}

}  // namespace

void ValidateRecord(const PatientRecord& r) {
  if (r.patient_id.empty()) throw ValidationError("empty patient_id");
  Require(r.age >= 12, r, "age", "must be >= 12");
  Require(std::isfinite(r.bmi) && r.bmi > 0, r, "bmi", "must be positive");
  Require(r.vas >= 0 && r.vas <= 10, r, "vas", "must lie in [0, 10]");
  Require(r.eq5d >= 0 && r.eq5d <= 1, r, "eq5d", "must lie in [0, 1]");
  Require(r.odi >= 0 && r.odi <= 1, r, "odi", "must lie in [0, 1]");
  Require(r.asa >= 1 && r.asa <= 4, r, "asa", "must be 1, 2, 3 or 4");
  Require(r.bcq == BcqFromScores(r.bcq.yang_xu_score, r.bcq.yin_xu_score,
                                 r.bcq.stasis_score),
          r, "bcq", "diagnoses disagree with section scores");
  Require(r.utterances.size() <= 5, r, "utterances", "must hold at most 5 clips");
}

void ValidateCohort(const std::vector<PatientRecord>& records) {
  std::set<std::string> seen;
  for (const auto& r : records) {
    ValidateRecord(r);
    if (!seen.insert(r.patient_id).second) {
      throw ValidationError("duplicate patient_id '" + r.patient_id + "'");
    }
  }
}

PolarityMap DefaultPolarity() {
  PolarityMap p;
  p.fill(Direction::kLowerIsDesirable);
  p[1] = Direction::kHigherIsDesirable;  // eq5d_diff
  return p;
}

PolarityMap LiteralPolarity() {
  PolarityMap p;
  p.fill(Direction::kHigherIsDesirable);
  return p;
}

std::vector<PrognosisLabel> LabelCohort(const std::vector<PatientRecord>& records,
                                        const PolarityMap& polarity) {
  if (records.size() < 2) {
    throw ValidationError("labeling needs a cohort of at least 2 patients, got " +
                          std::to_string(records.size()));
  }
  const std::size_t n = records.size();
  std::vector<std::array<double, OutcomeSet::kCount>> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (!r.outcomes) {
      throw ValidationError("patient '" + r.patient_id +
                            "': missing outcomes (all fields)");
    }
    values[i] = r.outcomes->Values();
    for (std::size_t k = 0; k < OutcomeSet::kCount; ++k) {
      if (!std::isfinite(values[i][k])) {
        throw ValidationError("patient '" + r.patient_id +
                              "': missing outcome field '" +
                              std::string(kOutcomeNames[k]) + "'");
      }
    }
  }

  std::array<double, OutcomeSet::kCount> means{};
  for (std::size_t k = 0; k < OutcomeSet::kCount; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[i][k];
    means[k] = sum / static_cast<double>(n);
  }

  std::vector<PrognosisLabel> labels(n);
  long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int count = 0;
    for (std::size_t k = 0; k < OutcomeSet::kCount; ++k) {
      const bool mark = polarity[k] == Direction::kHigherIsDesirable
                            ? values[i][k] > means[k]
                            : values[i][k] < means[k];
      count += mark ? 1 : 0;
    }
    labels[i].desirable_count = count;
    total += count;
  }
  const double mean_count = static_cast<double>(total) / static_cast<double>(n);
  for (auto& l : labels) {
    l.threshold_used = mean_count;
    l.desirable = static_cast<double>(l.desirable_count) > mean_count;
  }
  return labels;
}

const std::vector<std::string>& SurgicalApproachVocabulary() {
  static const std::vector<std::string> vocab = {
      // Fusion procedures.
      "MIS-TLIF minimally invasive transforaminal lumbar interbody fusion",
      "TLIF transforaminal lumbar interbody fusion",
      "ACDF anterior cervical discectomy and fusion",
      "ACCF anterior cervical corpectomy with fusion",
      // Endoscopic procedures.
      "PELD percutaneous endoscopic lumbar disc discotomy",
      "PEDD percutaneous endoscopic discectomy and drainage",
      "PEDF percutaneous endoscopic discectomy and foraminoplasty",
      "PELLD percutaneous endoscopic lumbar laminectomy and discectomy",
  };
  return vocab;
}

namespace {

constexpr std::array<const char*, 4> kSegments = {"L3-L4", "L4-L5", "L5-S1",
                                                  "C5-C6"};
constexpr std::array<const char*, 4> kDiagnoses = {
    "spondylolisthesis", "herniated intervertebral disc", "spinal stenosis",
    "degenerative disc disease"};

// Relative harmonic weights giving each vowel a distinct spectral envelope.
constexpr std::array<std::array<double, 4>, 5> kVowelHarmonics = {{
    {1.0, 0.8, 0.6, 0.3},
    {1.0, 0.5, 0.7, 0.4},
    {1.0, 0.3, 0.2, 0.6},
    {1.0, 0.9, 0.3, 0.1},
    {1.0, 0.6, 0.1, 0.1},
}};

double Clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
double Round(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(v * scale) / scale;
}

AudioClip SynthVowel(std::size_t vowel, double f0, const SynthOptions& opt,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  AudioClip clip;
  clip.vowel = std::string(kVowels[vowel]);
  const int sr = clip.sample_rate;
  const auto gap = static_cast<std::size_t>(opt.gap_seconds * sr);
  const auto tone = static_cast<std::size_t>(opt.tone_seconds * sr);
  clip.samples.assign(gap * 2 + tone, 0.0);
  const double phase = 2.0 * std::numbers::pi * std::uniform_real_distribution<double>(0, 1)(rng);
  const auto& h = kVowelHarmonics[vowel];
  const double norm = h[0] + h[1] + h[2] + h[3];
  for (std::size_t t = 0; t < tone; ++t) {
    const double time = static_cast<double>(t) / sr;
    double v = 0.0;
    for (int k = 0; k < 4; ++k) {
      v += h[k] * std::sin(2.0 * std::numbers::pi * f0 * (k + 1) * time + phase);
    }
    v = 0.6 * v / norm + opt.noise_amplitude * gauss(rng);
    // Quantize to 16 bits so a WAV round trip is lossless.
    clip.samples[gap + t] = std::round(Clamp(v, -1.0, 1.0) * 32767.0) / 32767.0;
  }
  return clip;
}

}  // namespace

SyntheticCohort SynthCohort(int n, std::uint64_t seed, double signal_strength,
                            const SynthOptions& options) {
  if (n < 4) {
    throw ValidationError("synthetic cohort needs n >= 4 patients, got " +
                          std::to_string(n));
  }
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) {
    throw ValidationError("signal_strength must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SyntheticCohort out;
  out.planted.assign(n, 0);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng() % static_cast<std::uint64_t>(i + 1)]);
  }
  for (int i = 0; i < n / 2; ++i) out.planted[order[i]] = 1;

  const auto& vocab = SurgicalApproachVocabulary();
  const int width = std::max(3, static_cast<int>(std::to_string(n).size()));
  for (int i = 0; i < n; ++i) {
    const double u = signal_strength * (out.planted[i] ? 1.0 : -1.0);
    const double d = 1.2 * u;
    PatientRecord r;
    std::ostringstream id;
    id << "P";
    id.width(width);
    id.fill('0');
    id << (i + 1);
    r.patient_id = id.str();
    r.age = static_cast<int>(Clamp(std::round(58.0 - 8.0 * d + 10.0 * gauss(rng)), 18, 90));
    r.sex = unif(rng) < 0.5 ? Sex::kMale : Sex::kFemale;
    r.bmi = Round(Clamp(25.0 - 1.5 * d + 3.0 * gauss(rng), 16.0, 45.0), 1);
    r.vas = Round(Clamp(6.0 - 1.2 * d + 1.5 * gauss(rng), 1.0, 10.0), 1);
    r.eq5d = Round(Clamp(0.55 + 0.1 * d + 0.12 * gauss(rng), 0.05, 1.0), 3);
    r.odi = Round(Clamp(0.45 - 0.1 * d + 0.12 * gauss(rng), 0.05, 1.0), 3);
    r.asa = static_cast<int>(Clamp(std::round(2.0 - 0.5 * d + 0.6 * gauss(rng)), 1, 4));

    std::vector<int> items(kBcqItemCount);
    for (int k = 0; k < kBcqItemCount; ++k) {
      items[k] = static_cast<int>(Clamp(std::round(2.0 - 0.4 * d + 0.8 * gauss(rng)), 1, 5));
    }
    r.bcq = ScoreBcq(items);

    // Plan text: approach family follows the planted prognosis with
    // probability 0.5 + 0.45 * signal.
    std::size_t approach;
    const bool follow = unif(rng) < 0.5 + 0.45 * signal_strength;
    const std::size_t family = follow ? (out.planted[i] ? 1 : 0)
                                      : static_cast<std::size_t>(rng() % 2);
    approach = family * 4 + static_cast<std::size_t>(rng() % 4);
    const char* segment = kSegments[rng() % kSegments.size()];
    const char* diagnosis = kDiagnoses[rng() % kDiagnoses.size()];
    r.surgical_plan_text = "Planned " + vocab[approach] + " at " + segment +
                           " for " + diagnosis + ".";

    const double f0 = 160.0 + 50.0 * u + 10.0 * gauss(rng);
    for (std::size_t v = 0; v < kVowels.size(); ++v) {
      r.utterances.push_back(SynthVowel(v, f0 * (1.0 + 0.02 * gauss(rng)), options, rng));
    }

    // Outcomes: the latent term pushes every component toward its desirable
    // side under the default polarity.
    auto noisy = [&](double sign) { return sign * 1.5 * u + gauss(rng); };
    OutcomeSet o;
    o.vas_diff = Round(-0.45 + 0.2 * noisy(-1), 4);
    o.eq5d_diff = Round(0.10 + 0.15 * noisy(+1), 4);
    o.odi_diff = Round(-0.30 + 0.2 * noisy(-1), 4);
    o.surgery_minutes = Round(std::max(30.0, 230.0 + 60.0 * noisy(-1)), 1);
    o.blood_loss_ml = Round(std::max(0.0, 100.0 + 50.0 * noisy(-1)), 1);
    o.analgesic_types = Clamp(std::round(3.3 + 0.9 * noisy(-1)), 0, 8);
    o.admission_days = Round(std::max(1.0, 5.6 + 2.0 * noisy(-1)), 1);
    o.complications = noisy(-1) > 1.2 ? 1.0 : 0.0;
    r.outcomes = o;
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace mmfuse
