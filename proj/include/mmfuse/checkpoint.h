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

#ifndef MMFUSE_CHECKPOINT_H_
#define MMFUSE_CHECKPOINT_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "mmfuse/layers.h"

namespace mmfuse::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout (little-endian):
//   "MMFCKPT\0" magic, u32 version, u32 tensor count,
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//   then all f64 blobs in table order.
// The JSON sidecar <path>.json carries the layer specs and any model metadata.
void SaveCheckpoint(const std::string& path, const std::vector<Parameter*>& params,
                    const nlohmann::json& sidecar);

// Loads values into existing parameters, matching by name and shape. Returns
// the sidecar.
nlohmann::json LoadCheckpoint(const std::string& path,
                              const std::vector<Parameter*>& params);

}  // namespace mmfuse::nn

#endif  // MMFUSE_CHECKPOINT_H_
