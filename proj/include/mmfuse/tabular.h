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

#ifndef MMFUSE_TABULAR_H_
#define MMFUSE_TABULAR_H_

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmfuse/cohort.h"

namespace mmfuse {

enum class ColumnKind {
  kNumeric,  // scaled to [-1, 1]
  kOneHot,   // one indicator column per level
  kBinary,   // two levels in one column: first level -1, second level +1
};

struct TabularColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<std::string> levels;  // categorical kinds only
};

// Ordered list of the tabular variables fed to the models.
struct TabularSchema {
  std::vector<TabularColumn> columns;

  // Fourteen variables, two-level categoricals packed into one column each:
  // age, sex, bmi, vas, eq5d, odi, asa, three BCQ scores, four diagnoses.
  static TabularSchema Default();
  // Same variables with every categorical expanded to a one-hot group.
  static TabularSchema OneHot();
};

// A raw cell: numeric value or categorical level. A NaN number with an empty
// level means missing.
struct RawValue {
  double number = 0.0;
  std::string level;
};

// Pulls the schema's variables out of a record by column name.
std::vector<RawValue> ExtractRaw(const PatientRecord& record,
                                 const TabularSchema& schema);

struct TabularVector {
  std::vector<double> values;
  std::vector<std::string> column_names;
};

// Fitted min-max scaler plus categorical level tables. Immutable after Fit;
// Transform never touches the fitted state.
class TabularScaler {
 public:
  TabularScaler() = default;
  // Explicit ranges, one (min, max) per numeric column in schema order.
  TabularScaler(TabularSchema schema,
                std::vector<std::pair<double, double>> numeric_ranges);

  static TabularScaler Fit(const std::vector<std::vector<RawValue>>& rows,
                           const TabularSchema& schema);
  static TabularScaler Fit(const std::vector<PatientRecord>& records,
                           const TabularSchema& schema = TabularSchema::Default());

  TabularVector Transform(const std::vector<RawValue>& row) const;
  TabularVector Transform(const PatientRecord& record) const;

  std::size_t width() const;
  const TabularSchema& schema() const { return schema_; }
  const std::vector<std::pair<double, double>>& ranges() const { return ranges_; }
  std::vector<std::string> ColumnNames() const;

  nlohmann::json ToJson() const;
  static TabularScaler FromJson(const nlohmann::json& j);

 private:
  TabularSchema schema_;
  std::vector<std::pair<double, double>> ranges_;  // per numeric column
};

}  // namespace mmfuse

#endif  // MMFUSE_TABULAR_H_
