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

#include "mmfuse/tabular.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmfuse/common.h"
#include "mmfuse/log.h"

namespace mmfuse {
namespace {

const std::vector<std::string> kNoYes = {"no", "yes"};

TabularColumn Numeric(std::string name) { return {std::move(name), ColumnKind::kNumeric, {}}; }

TabularSchema BuildSchema(ColumnKind categorical) {
  TabularSchema s;
  s.columns = {Numeric("age"),
               {"sex", categorical, {"male", "female"}},
               Numeric("bmi"),
               Numeric("vas"),
               Numeric("eq5d"),
               Numeric("odi"),
               Numeric("asa"),
               Numeric("yang_xu_score"),
               Numeric("yin_xu_score"),
               Numeric("stasis_score"),
               {"yang_xu", categorical, kNoYes},
               {"yin_xu", categorical, kNoYes},
               {"stasis", categorical, kNoYes},
               {"gentleness", categorical, kNoYes}};
  return s;
}

RawValue Num(double v) { return {v, {}}; }
RawValue Level(std::string s) { return {std::numeric_limits<double>::quiet_NaN(), std::move(s)}; }
RawValue Flag(bool b) { return Level(b ? "yes" : "no"); }

}  // namespace

TabularSchema TabularSchema::Default() { return BuildSchema(ColumnKind::kBinary); }
TabularSchema TabularSchema::OneHot() { return BuildSchema(ColumnKind::kOneHot); }

std::vector<RawValue> ExtractRaw(const PatientRecord& r, const TabularSchema& schema) {
  std::vector<RawValue> out;
  out.reserve(schema.columns.size());
  for (const auto& c : schema.columns) {
    const std::string& n = c.name;
    if (n == "age") out.push_back(Num(r.age));
    else if (n == "sex") out.push_back(Level(std::string(SexName(r.sex))));
    else if (n == "bmi") out.push_back(Num(r.bmi));
    else if (n == "vas") out.push_back(Num(r.vas));
    else if (n == "eq5d") out.push_back(Num(r.eq5d));
    else if (n == "odi") out.push_back(Num(r.odi));
    else if (n == "asa") out.push_back(Num(r.asa));
    else if (n == "yang_xu_score") out.push_back(Num(r.bcq.yang_xu_score));
    else if (n == "yin_xu_score") out.push_back(Num(r.bcq.yin_xu_score));
    else if (n == "stasis_score") out.push_back(Num(r.bcq.stasis_score));
    else if (n == "yang_xu") out.push_back(Flag(r.bcq.yang_xu));
    else if (n == "yin_xu") out.push_back(Flag(r.bcq.yin_xu));
    else if (n == "stasis") out.push_back(Flag(r.bcq.stasis));
    else if (n == "gentleness") out.push_back(Flag(r.bcq.gentleness));
    else throw ValidationError("unknown tabular column '" + n + "'");
  }
  return out;
}

TabularScaler::TabularScaler(TabularSchema schema,
                             std::vector<std::pair<double, double>> numeric_ranges)
    : schema_(std::move(schema)), ranges_(std::move(numeric_ranges)) {
  std::size_t numeric = 0;
  for (const auto& c : schema_.columns) {
    if (c.kind == ColumnKind::kNumeric) {
      ++numeric;
    } else if (c.kind == ColumnKind::kBinary && c.levels.size() != 2) {
      throw ValidationError("binary column '" + c.name + "' needs exactly 2 levels");
    } else if (c.levels.empty()) {
      throw ValidationError("categorical column '" + c.name + "' has no levels");
    }
  }
  if (numeric != ranges_.size()) {
    throw ValidationError("expected " + std::to_string(numeric) +
                          " numeric ranges, got " + std::to_string(ranges_.size()));
  }
  for (const auto& [lo, hi] : ranges_) {
    if (!(lo <= hi)) throw ValidationError("numeric range has min > max");
  }
}

TabularScaler TabularScaler::Fit(const std::vector<std::vector<RawValue>>& rows,
                                 const TabularSchema& schema) {
  if (rows.empty()) throw ValidationError("cannot fit a tabular scaler on zero rows");
  std::vector<std::pair<double, double>> ranges;
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (schema.columns[c].kind != ColumnKind::kNumeric) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& row : rows) {
      const double v = row.at(c).number;
      if (!std::isfinite(v)) {
        throw ValidationError("missing numeric value in column '" +
                              schema.columns[c].name + "'");
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    ranges.emplace_back(lo, hi);
  }
  return TabularScaler(schema, std::move(ranges));
}

TabularScaler TabularScaler::Fit(const std::vector<PatientRecord>& records,
                                 const TabularSchema& schema) {
  std::vector<std::vector<RawValue>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(ExtractRaw(r, schema));
  return Fit(rows, schema);
}

std::size_t TabularScaler::width() const {
  std::size_t w = 0;
  for (const auto& c : schema_.columns) {
    w += c.kind == ColumnKind::kOneHot ? c.levels.size() : 1;
  }
  return w;
}

std::vector<std::string> TabularScaler::ColumnNames() const {
  std::vector<std::string> names;
  for (const auto& c : schema_.columns) {
    if (c.kind == ColumnKind::kOneHot) {
      for (const auto& l : c.levels) names.push_back(c.name + "=" + l);
    } else {
      names.push_back(c.name);
    }
  }
  return names;
}

TabularVector TabularScaler::Transform(const std::vector<RawValue>& row) const {
  if (row.size() != schema_.columns.size()) {
    throw ValidationError("tabular row has " + std::to_string(row.size()) +
                          " cells, schema expects " +
                          std::to_string(schema_.columns.size()));
  }
  TabularVector out;
  out.values.reserve(width());
  out.column_names = ColumnNames();
  std::size_t numeric = 0;
  for (std::size_t c = 0; c < row.size(); ++c) {
    const auto& col = schema_.columns[c];
    if (col.kind == ColumnKind::kNumeric) {
      const double v = row[c].number;
      if (!std::isfinite(v)) {
        throw ValidationError("missing numeric value in column '" + col.name + "'");
      }
      const auto [lo, hi] = ranges_[numeric++];
      double scaled = 0.0;
      if (hi > lo) scaled = std::clamp(-1.0 + 2.0 * (v - lo) / (hi - lo), -1.0, 1.0);
      out.values.push_back(scaled);
      continue;
    }
    const auto it = std::find(col.levels.begin(), col.levels.end(), row[c].level);
    const bool known = it != col.levels.end();
    if (!known) {
      Warn("unknown level '" + row[c].level + "' in column '" + col.name +
           "'; encoding as all-zero");
    }
    if (col.kind == ColumnKind::kBinary) {
      out.values.push_back(!known ? 0.0 : (it == col.levels.begin() ? -1.0 : 1.0));
    } else {
      for (auto l = col.levels.begin(); l != col.levels.end(); ++l) {
        out.values.push_back(known && l == it ? 1.0 : 0.0);
      }
    }
  }
  return out;
}

TabularVector TabularScaler::Transform(const PatientRecord& record) const {
  return Transform(ExtractRaw(record, schema_));
}

nlohmann::json TabularScaler::ToJson() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema_.columns) {
    const char* kind = c.kind == ColumnKind::kNumeric  ? "numeric"
                       : c.kind == ColumnKind::kOneHot ? "one_hot"
                                                       : "binary";
    cols.push_back({{"name", c.name}, {"kind", kind}, {"levels", c.levels}});
  }
  nlohmann::json ranges = nlohmann::json::array();
  for (const auto& [lo, hi] : ranges_) ranges.push_back({lo, hi});
  return {{"columns", cols}, {"ranges", ranges}};
}

TabularScaler TabularScaler::FromJson(const nlohmann::json& j) {
  TabularSchema schema;
  for (const auto& c : j.at("columns")) {
    TabularColumn col;
    col.name = c.at("name").get<std::string>();
    const auto kind = c.at("kind").get<std::string>();
    col.kind = kind == "numeric"   ? ColumnKind::kNumeric
               : kind == "one_hot" ? ColumnKind::kOneHot
                                   : ColumnKind::kBinary;
    col.levels = c.at("levels").get<std::vector<std::string>>();
    schema.columns.push_back(std::move(col));
  }
  std::vector<std::pair<double, double>> ranges;
  for (const auto& r : j.at("ranges")) ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
  return TabularScaler(std::move(schema), std::move(ranges));
}

}  // namespace mmfuse
