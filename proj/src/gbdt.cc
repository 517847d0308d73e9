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

#include "mmfuse/gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mmfuse/cohort_io.h"
#include "mmfuse/common.h"
#include "mmfuse/log.h"

namespace mmfuse::gbdt {
namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kMinGain = 1e-12;

}  // namespace

nlohmann::json GbdtConfig::ToJson() const {
  return {{"trees", trees}, {"depth", depth}, {"lr", learning_rate}, {"min_leaf", min_leaf}};
}

GbdtConfig GbdtConfig::FromJson(const nlohmann::json& j) {
  GbdtConfig c;
  c.trees = j.value("trees", c.trees);
  c.depth = j.value("depth", c.depth);
  c.learning_rate = j.value("lr", c.learning_rate);
  c.min_leaf = j.value("min_leaf", c.min_leaf);
  return c;
}

double RegressionTree::Predict(std::span<const double> row) const {
  int idx = 0;
  while (nodes[idx].feature >= 0) {
    const auto& n = nodes[idx];
    idx = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[idx].value;
}

double BoostedEnsemble::PredictProba(std::span<const double> row, int max_trees) const {
  if (row.size() != width_) {
    throw ValidationError("gbdt: row width " + std::to_string(row.size()) +
                          " differs from training width " + std::to_string(width_));
  }
  const std::size_t n = max_trees < 0 ? trees_.size()
                                      : std::min<std::size_t>(trees_.size(), max_trees);
  double score = base_score_;
  for (std::size_t k = 0; k < n; ++k) score += learning_rate_ * trees_[k].Predict(row);
  return Sigmoid(score);
}

std::vector<double> BoostedEnsemble::PredictProba(const std::vector<std::vector<double>>& rows,
                                                  int max_trees) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(PredictProba(r, max_trees));
  return out;
}

void BoostedEnsemble::Truncate(std::size_t n) {
  if (n < trees_.size()) trees_.resize(n);
}

nlohmann::json BoostedEnsemble::ToJson() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                       {"right", n.right}, {"value", n.value}, {"gain", n.gain}});
    }
    trees.push_back(nodes);
  }
  return {{"format", "mmfuse-gbdt-v1"}, {"learning_rate", learning_rate_},
          {"base_score", base_score_},  {"width", width_},
          {"feature_names", feature_names_}, {"trees", trees}};
}

BoostedEnsemble BoostedEnsemble::FromJson(const nlohmann::json& j) {
  BoostedEnsemble m;
  m.learning_rate_ = j.at("learning_rate").get<double>();
  m.base_score_ = j.at("base_score").get<double>();
  m.width_ = j.at("width").get<std::size_t>();
  m.feature_names_ = j.value("feature_names", std::vector<std::string>{});
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    for (const auto& n : t) {
      tree.nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(),
                            n.at("left").get<int>(), n.at("right").get<int>(),
                            n.at("value").get<double>(), n.value("gain", 0.0)});
    }
    m.trees_.push_back(std::move(tree));
  }
  return m;
}

double LogisticLoss(const std::vector<double>& probs, const std::vector<int>& labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    loss -= labels[i] ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(probs.size());
}

struct Fitter {
  const std::vector<std::vector<double>>& rows;
  const GbdtConfig& config;
  std::size_t width;
  // Row indices sorted by each feature's value (stable, so ties keep row order).
  std::vector<std::vector<std::size_t>> sorted;

  void Presort() {
    sorted.assign(width, {});
    for (std::size_t f = 0; f < width; ++f) {
      auto& order = sorted[f];
      order.resize(rows.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return rows[a][f] < rows[b][f]; });
    }
  }

  RegressionTree Grow(const std::vector<double>& residual) {
    RegressionTree tree;
    std::vector<std::size_t> all(rows.size());
    std::iota(all.begin(), all.end(), 0);
    Build(tree, residual, all, 0);
    return tree;
  }

  int Build(RegressionTree& tree, const std::vector<double>& residual,
            const std::vector<std::size_t>& samples, int depth) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double total = 0.0;
    for (auto i : samples) total += residual[i];
    const double n = static_cast<double>(samples.size());
    tree.nodes[idx].value = total / n;
    if (depth >= config.depth ||
        samples.size() < 2 * static_cast<std::size_t>(std::max(1, config.min_leaf))) {
      return idx;
    }

    std::vector<char> in_node(rows.size(), 0);
    for (auto i : samples) in_node[i] = 1;
    const double parent_score = total * total / n;
    double best_gain = kMinGain;
    int best_feature = -1;
    double best_threshold = 0.0;
    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, config.min_leaf));
    std::vector<std::size_t> order;
    order.reserve(samples.size());
    for (std::size_t f = 0; f < width; ++f) {
      order.clear();
      for (auto i : sorted[f]) {
        if (in_node[i]) order.push_back(i);
      }
      if (rows[order.front()][f] == rows[order.back()][f]) continue;
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        left_sum += residual[order[k]];
        const double a = rows[order[k]][f];
        const double b = rows[order[k + 1]][f];
        if (a == b) continue;
        const std::size_t nl = k + 1, nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = a + (b - a) / 2.0;
        }
      }
    }
    if (best_feature < 0) return idx;

    std::vector<std::size_t> left, right;
    for (auto i : samples) {
      (rows[i][best_feature] <= best_threshold ? left : right).push_back(i);
    }
    tree.nodes[idx].feature = best_feature;
    tree.nodes[idx].threshold = best_threshold;
    tree.nodes[idx].gain = best_gain;
    const int l = Build(tree, residual, left, depth + 1);
    tree.nodes[idx].left = l;
    const int r = Build(tree, residual, right, depth + 1);
    tree.nodes[idx].right = r;
    return idx;
  }
};

BoostedEnsemble Fit(const std::vector<std::vector<double>>& rows,
                    const std::vector<int>& labels, const GbdtConfig& config,
                    std::vector<std::string> feature_names, FitTrace* trace) {
  if (rows.size() < 2) throw ValidationError("gbdt: need at least 2 samples");
  if (labels.size() != rows.size()) throw ValidationError("gbdt: label count mismatch");
  if (config.trees < 0 || config.depth < 1 || !(config.learning_rate > 0)) {
    throw ValidationError("gbdt: invalid config");
  }
  const std::size_t width = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != width) throw ValidationError("gbdt: ragged feature rows");
  }
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("gbdt: labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  if (pos == 0 || pos == labels.size()) {
    throw ValidationError("gbdt: labels contain a single class");
  }
  if (!feature_names.empty() && feature_names.size() != width) {
    throw ValidationError("gbdt: feature name count mismatch");
  }

  BoostedEnsemble model;
  model.width_ = width;
  model.learning_rate_ = config.learning_rate;
  model.feature_names_ = std::move(feature_names);
  const double neg = static_cast<double>(labels.size() - pos);
  model.base_score_ = std::log(static_cast<double>(pos) / neg);

  Fitter fitter{rows, config, width, {}};
  fitter.Presort();
  std::vector<double> score(rows.size(), model.base_score_);
  std::vector<double> prob(rows.size()), residual(rows.size());
  auto refresh = [&] {
    for (std::size_t i = 0; i < rows.size(); ++i) prob[i] = Sigmoid(score[i]);
  };
  refresh();
  if (trace) trace->training_loss.push_back(LogisticLoss(prob, labels));
  for (int t = 0; t < config.trees; ++t) {
    for (std::size_t i = 0; i < rows.size(); ++i) residual[i] = labels[i] - prob[i];
    RegressionTree tree = fitter.Grow(residual);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      score[i] += model.learning_rate_ * tree.Predict(rows[i]);
    }
    model.trees_.push_back(std::move(tree));
    refresh();
    if (trace) trace->training_loss.push_back(LogisticLoss(prob, labels));
  }
  if (trace) trace->final_probabilities = prob;
  return model;
}

std::vector<double> FeatureImportance(const BoostedEnsemble& model) {
  std::vector<double> gain(model.width(), 0.0);
  for (const auto& t : model.trees()) {
    for (const auto& n : t.nodes) {
      if (n.feature >= 0) gain[n.feature] += n.gain;
    }
  }
  const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
  if (!(total > 0)) {
    Warn("gbdt: no split gain recorded; reporting uniform importance");
    return std::vector<double>(model.width(), model.width() ? 100.0 / model.width() : 0.0);
  }
  for (double& g : gain) g = 100.0 * g / total;
  return gain;
}

std::string FormatImportanceCsv(const BoostedEnsemble& model) {
  const auto imp = FeatureImportance(model);
  std::ostringstream out;
  out << "feature,importance\n";
  for (std::size_t f = 0; f < imp.size(); ++f) {
    const std::string name = f < model.feature_names().size() ? model.feature_names()[f]
                                                              : "f" + std::to_string(f);
    out << name << "," << FormatDouble(imp[f]) << "\n";
  }
  return out.str();
}

}  // namespace mmfuse::gbdt
