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

#ifndef MMFUSE_INTERPRET_H_
#define MMFUSE_INTERPRET_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/common.h"
#include "mmfuse/models.h"

namespace mmfuse {

// Pearson correlation. Throws ValidationError on length mismatch, fewer than
// three points or zero variance.
double Pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CcaResult {
  double r = 0.0;                   // first canonical correlation
  std::vector<double> x_weights;    // projection coefficients (standardized columns)
  std::vector<double> y_weights;
  std::vector<double> x_loadings;   // corr(column, own variate); 0 for constant columns
  std::vector<double> y_loadings;
  std::vector<double> x_variate;    // n scores
  std::vector<double> y_variate;
  bool regularized = false;         // ridge was added to a covariance block
};

// First canonical pair. Columns are standardized; each covariance block is
// whitened through its eigendecomposition (ridge 1e-8 added, with a warning,
// when a block is rank deficient) and the whitened cross-covariance is
// decomposed by SVD. Signs are fixed so the largest-magnitude x weight is
// positive. Throws ValidationError unless n > max(p, q).
CcaResult CcaFirst(const Matrix& x, const Matrix& y, double ridge = 1e-8);

// Scores of the leading k principal components of the centred columns.
Matrix PrincipalComponents(const Matrix& x, std::size_t k);

enum class IgTarget { kPredictedClass, kDesirable };

struct ModalityAttribution {
  std::string modality;  // "tabular", "text", "audio"
  std::size_t part = 0;  // utterance index for audio, otherwise 0
  nn::Shape shape;
  std::vector<double> values;
};

struct AttributionReport {
  std::string model;
  std::string patient_id;
  std::string baseline = "zero";
  int steps = 0;
  int target_class = 1;
  double f_input = 0.0;
  double f_baseline = 0.0;
  double completeness_gap = 0.0;  // |sum(attr) - (F(x) - F(x'))|
  std::vector<ModalityAttribution> groups;

  double Total() const;
  nlohmann::json ToJson() const;
  static AttributionReport FromJson(const nlohmann::json& j);
};

// Integrated gradients against the all-zero baseline with the midpoint rule:
// attr_i = x_i * (1/m) * sum_k dF/dx_i at alpha_k = (k + 1/2)/m. F is the
// probability of the predicted class (or of the desirable class). Throws
// RuntimeError naming alpha when a gradient is non-finite.
AttributionReport IntegratedGradients(const Network& net, const PatientInputs& input,
                                      int steps = 256,
                                      IgTarget target = IgTarget::kPredictedClass);

// Attributions for every differentiable part of a model: the model itself if
// it is a network, otherwise each differentiable member. Tree ensembles are
// skipped.
std::vector<AttributionReport> AttributeModel(const Model& model, const FeatureBank& bank,
                                              std::size_t patient, int steps = 256,
                                              IgTarget target = IgTarget::kPredictedClass);

struct DistributionSummary {
  std::string group;
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

// Order statistics of attribution values pooled per modality across reports.
std::vector<DistributionSummary> AttributionDistribution(
    const std::vector<AttributionReport>& reports);

// group,count,min,q1,median,q3,max,mean with a leading label column.
std::string FormatDistributionCsv(
    const std::vector<std::pair<std::string, std::vector<DistributionSummary>>>& labelled);

// pairing,variable,weight,loading; one row per variable of the first dataset.
std::string FormatCcaCsv(const std::string& pairing, const std::vector<std::string>& names,
                         const CcaResult& cca);

}  // namespace mmfuse

#endif  // MMFUSE_INTERPRET_H_
