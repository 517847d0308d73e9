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

#ifndef MMFUSE_OPTIMIZER_H_
#define MMFUSE_OPTIMIZER_H_

#include <vector>

#include "mmfuse/layers.h"

namespace mmfuse::nn {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double l2 = 0.0;  // lambda; adds 2*lambda*w to each decayed weight gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Plain SGD or the adaptive first/second-moment update. State is keyed by the
// order of the parameter list, which must stay fixed between steps.
class Optimizer {
 public:
  Optimizer(std::vector<Parameter*> params, OptimizerConfig config);

  // Applies one update from the gradients currently stored on the parameters.
  // Throws RuntimeError naming the parameter if any gradient is non-finite.
  void Step();
  void ZeroGrad();

  const OptimizerConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  OptimizerConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace mmfuse::nn

#endif  // MMFUSE_OPTIMIZER_H_
