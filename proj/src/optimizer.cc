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

#include "mmfuse/optimizer.h"

#include <cmath>

#include "mmfuse/common.h"

namespace mmfuse::nn {

Optimizer::Optimizer(std::vector<Parameter*> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.lr > 0)) throw ValidationError("learning rate must be positive");
  if (config_.l2 < 0) throw ValidationError("l2 lambda must be non-negative");
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Optimizer::ZeroGrad() {
  for (auto* p : params_) p->value.ZeroGrad();
}

void Optimizer::Step() {
  // Validate everything first so a bad gradient never leaves a half-applied
  // update behind.
  std::vector<std::vector<double>> grads;
  grads.reserve(params_.size());
  for (auto* p : params_) {
    auto g = p->value.grad();
    const auto w = p->value.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw RuntimeError("non-finite gradient in parameter '" + p->name + "' at index " +
                           std::to_string(i) + " (value " + std::to_string(g[i]) +
                           ", step " + std::to_string(t_) + ")");
      }
      if (p->decay) g[i] += 2.0 * config_.l2 * w[i];
    }
    grads.push_back(std::move(g));
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k]->value.mutable_data();
    const auto& g = grads[k];
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config_.lr * g[i];
      continue;
    }
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      w[i] -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
    }
  }
}

}  // namespace mmfuse::nn
