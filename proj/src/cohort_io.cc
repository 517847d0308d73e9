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

#include "mmfuse/cohort_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mmfuse/common.h"

namespace mmfuse {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string_view> kTabularColumns = {
    "patient_id", "age", "sex", "bmi", "vas", "eq5d", "odi", "asa",
    "yang_xu_score", "yin_xu_score", "stasis_score"};

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void WriteFileAtomic(const std::string& path, std::string_view contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw RuntimeError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  return out;
}

double ParseNumber(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError(where + ": cannot parse number '" + text + "'");
  }
  return v;
}

}  // namespace

void WriteCohort(const std::string& directory,
                 const std::vector<PatientRecord>& records) {
  ValidateCohort(records);
  fs::create_directories(directory);
  std::ostringstream csv;
  for (std::size_t i = 0; i < kTabularColumns.size(); ++i) {
    csv << (i ? "," : "") << kTabularColumns[i];
  }
  for (auto name : kOutcomeNames) csv << "," << name;
  csv << "\n";

  json manifest = json::object();
  for (std::size_t row = 0; row < records.size(); ++row) {
    const auto& r = records[row];
    csv << r.patient_id << "," << r.age << "," << SexName(r.sex) << ","
        << FormatDouble(r.bmi) << "," << FormatDouble(r.vas) << ","
        << FormatDouble(r.eq5d) << "," << FormatDouble(r.odi) << "," << r.asa
        << "," << r.bcq.yang_xu_score << "," << r.bcq.yin_xu_score << ","
        << r.bcq.stasis_score;
    for (std::size_t k = 0; k < OutcomeSet::kCount; ++k) {
      csv << ",";
      if (r.outcomes) csv << FormatDouble(r.outcomes->Values()[k]);
    }
    csv << "\n";

    const std::string plan_rel = "plans/" + r.patient_id + ".txt";
    WriteFileAtomic((fs::path(directory) / plan_rel).string(),
                    r.surgical_plan_text);
    json wavs = json::array();
    for (auto vowel : kVowels) {
      auto it = std::find_if(r.utterances.begin(), r.utterances.end(),
                             [&](const AudioClip& c) { return c.vowel == vowel; });
      if (it == r.utterances.end()) {
        wavs.push_back(nullptr);
        continue;
      }
      const std::string rel = "wav/" + r.patient_id + "/" + std::string(vowel) + ".wav";
      const fs::path full = fs::path(directory) / rel;
      fs::create_directories(full.parent_path());
      WriteWav(full.string(), *it);
      wavs.push_back(rel);
    }
    manifest[r.patient_id] = {{"csv_row", row}, {"wav_paths", wavs},
                              {"plan_path", plan_rel}};
  }
  WriteFileAtomic((fs::path(directory) / kCohortCsvName).string(), csv.str());
  WriteFileAtomic((fs::path(directory) / kManifestName).string(),
                  manifest.dump(2) + "\n");
}

std::vector<PatientRecord> ReadCohort(const std::string& path,
                                      const WavReadOptions& wav_options) {
  fs::path manifest_path(path);
  if (fs::is_directory(manifest_path)) manifest_path /= kManifestName;
  const fs::path dir = manifest_path.parent_path();
  json manifest;
  try {
    manifest = json::parse(ReadFile(manifest_path.string()));
  } catch (const json::exception& e) {
    throw ValidationError("invalid manifest '" + manifest_path.string() +
                          "': " + e.what());
  }

  std::istringstream csv(ReadFile((dir / kCohortCsvName).string()));
  std::string line;
  if (!std::getline(csv, line)) throw ValidationError("empty cohort.csv");
  const auto header = SplitCsvLine(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (auto name : kTabularColumns) {
    if (!col.count(std::string(name))) {
      throw ValidationError("cohort.csv is missing column '" + std::string(name) + "'");
    }
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(csv, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(SplitCsvLine(line));
  }

  std::vector<PatientRecord> records;
  for (const auto& [id, entry] : manifest.items()) {
    const auto row_index = entry.at("csv_row").get<std::size_t>();
    if (row_index >= rows.size()) {
      throw ValidationError("manifest row " + std::to_string(row_index) +
                            " for '" + id + "' is outside cohort.csv");
    }
    const auto& cells = rows[row_index];
    auto cell = [&](std::string_view name) -> std::string {
      const std::size_t c = col.at(std::string(name));
      return c < cells.size() ? cells[c] : std::string();
    };
    auto required = [&](std::string_view name) {
      std::string v = cell(name);
      if (v.empty()) {
        throw ValidationError("patient '" + id + "': missing field '" +
                              std::string(name) + "'");
      }
      return v;
    };
    auto number = [&](std::string_view name) {
      return ParseNumber(required(name), "patient '" + id + "' field '" + std::string(name) + "'");
    };

    PatientRecord r;
    r.patient_id = required("patient_id");
    if (r.patient_id != id) {
      throw ValidationError("manifest id '" + id + "' points at row for '" +
                            r.patient_id + "'");
    }
    r.age = static_cast<int>(number("age"));
    r.sex = ParseSex(required("sex"));
    r.bmi = number("bmi");
    r.vas = number("vas");
    r.eq5d = number("eq5d");
    r.odi = number("odi");
    r.asa = static_cast<int>(number("asa"));
    r.bcq = BcqFromScores(static_cast<int>(number("yang_xu_score")),
                          static_cast<int>(number("yin_xu_score")),
                          static_cast<int>(number("stasis_score")));

    std::array<double, OutcomeSet::kCount> values;
    bool any = false;
    for (std::size_t k = 0; k < OutcomeSet::kCount; ++k) {
      values[k] = std::numeric_limits<double>::quiet_NaN();
      const std::string name(kOutcomeNames[k]);
      if (!col.count(name)) continue;
      const std::string v = cell(name);
      if (v.empty()) continue;
      values[k] = ParseNumber(v, "patient '" + id + "' field '" + name + "'");
      any = true;
    }
    if (any) r.outcomes = OutcomeSet::FromValues(values);

    if (entry.contains("plan_path") && !entry["plan_path"].is_null()) {
      r.surgical_plan_text = ReadFile((dir / entry["plan_path"].get<std::string>()).string());
    }
    if (entry.contains("wav_paths")) {
      const auto& wavs = entry["wav_paths"];
      for (std::size_t v = 0; v < wavs.size() && v < kVowels.size(); ++v) {
        if (wavs[v].is_null()) continue;
        AudioClip clip = ReadWav((dir / wavs[v].get<std::string>()).string(), wav_options);
        clip.vowel = std::string(kVowels[v]);
        r.utterances.push_back(std::move(clip));
      }
    }
    records.push_back(std::move(r));
  }
  std::sort(records.begin(), records.end(),
            [](const PatientRecord& a, const PatientRecord& b) {
              return a.patient_id < b.patient_id;
            });
  ValidateCohort(records);
  return records;
}

std::string FormatLabelsCsv(const std::vector<PatientRecord>& records,
                            const std::vector<PrognosisLabel>& labels) {
  std::ostringstream out;
  out << "patient_id,desirable_count,label\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << records[i].patient_id << "," << labels[i].desirable_count << ","
        << (labels[i].desirable ? "desirable" : "undesirable") << "\n";
  }
  return out.str();
}

}  // namespace mmfuse
