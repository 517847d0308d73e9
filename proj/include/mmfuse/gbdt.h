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

#ifndef MMFUSE_GBDT_H_
#define MMFUSE_GBDT_H_

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace mmfuse::gbdt {

struct GbdtConfig {
  int trees = 200;
  int depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 2;

  nlohmann::json ToJson() const;
  static GbdtConfig FromJson(const nlohmann::json& j);
};

// Flat binary tree. Rows with x[feature] <= threshold go left. Leaves have
// feature == -1 and carry a log-odds increment in value.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double gain = 0.0;  // variance reduction achieved by this split
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double Predict(std::span<const double> row) const;
};

struct FitTrace;
struct GbdtConfig;
class BoostedEnsemble;
BoostedEnsemble Fit(const std::vector<std::vector<double>>& rows,
                    const std::vector<int>& labels, const GbdtConfig& config,
                    std::vector<std::string> feature_names, FitTrace* trace);

class BoostedEnsemble {
 public:
  BoostedEnsemble() = default;

  // sigmoid(base_score + sum_k learning_rate * tree_k(row)) over the first
  // max_trees trees (all when negative). Throws ValidationError on a width
  // mismatch.
  double PredictProba(std::span<const double> row, int max_trees = -1) const;
  std::vector<double> PredictProba(const std::vector<std::vector<double>>& rows,
                                   int max_trees = -1) const;

  std::size_t tree_count() const { return trees_.size(); }
  std::size_t width() const { return width_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  // Keeps only the first n trees.
  void Truncate(std::size_t n);

  nlohmann::json ToJson() const;
  static BoostedEnsemble FromJson(const nlohmann::json& j);

 private:
  friend BoostedEnsemble Fit(const std::vector<std::vector<double>>&, const std::vector<int>&,
                             const GbdtConfig&, std::vector<std::string>, FitTrace*);
  std::vector<RegressionTree> trees_;
  double learning_rate_ = 0.1;
  double base_score_ = 0.0;
  std::size_t width_ = 0;
  std::vector<std::string> feature_names_;
};

struct FitTrace {
  std::vector<double> training_loss;        // mean logistic loss after each round (index 0: prior)
  std::vector<double> final_probabilities;  // training predictions after the last round
};

// Logistic-loss gradient boosting. Each tree is fit to the negative gradient
// (y - p) by exhaustive axis-aligned split search maximizing variance
// reduction; leaves hold the mean residual. Split ties go to the lowest feature
// index, then the lowest threshold. Throws ValidationError with fewer than two
// rows or a single class.
BoostedEnsemble Fit(const std::vector<std::vector<double>>& rows,
                    const std::vector<int>& labels, const GbdtConfig& config,
                    std::vector<std::string> feature_names = {},
                    FitTrace* trace = nullptr);

// Total split gain per feature scaled to sum to 100. Falls back to uniform
// scores (with a warning) when no split has positive gain.
std::vector<double> FeatureImportance(const BoostedEnsemble& model);

std::string FormatImportanceCsv(const BoostedEnsemble& model);

double LogisticLoss(const std::vector<double>& probs, const std::vector<int>& labels);

}  // namespace mmfuse::gbdt

#endif  // MMFUSE_GBDT_H_
