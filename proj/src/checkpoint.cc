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

#include "mmfuse/checkpoint.h"

#include <cstring>
#include <map>

#include "mmfuse/cohort_io.h"
#include "mmfuse/common.h"

namespace mmfuse::nn {
namespace {

template <typename T>
void Put(std::string& out, T v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ValidationError("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

constexpr char kMagic[8] = {'M', 'M', 'F', 'C', 'K', 'P', 'T', '\0'};

}  // namespace

void SaveCheckpoint(const std::string& path, const std::vector<Parameter*>& params,
                    const nlohmann::json& sidecar) {
  std::string out(kMagic, 8);
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.append(p->name);
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) Put<std::uint64_t>(out, d);
  }
  for (const auto* p : params) {
    const auto v = p->value.data();
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  WriteFileAtomic(path, out);
  nlohmann::json side = sidecar;
  side["checkpoint_version"] = kCheckpointVersion;
  WriteFileAtomic(path + ".json", side.dump(2) + "\n");
}

nlohmann::json LoadCheckpoint(const std::string& path, const std::vector<Parameter*>& params) {
  const std::string in = ReadFile(path);
  if (in.size() < 8 || std::memcmp(in.data(), kMagic, 8) != 0) {
    throw ValidationError("'" + path + "' is not a checkpoint");
  }
  std::size_t pos = 8;
  const auto version = Get<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = Get<std::uint32_t>(in, pos);
  std::vector<std::pair<std::string, Shape>> table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = Get<std::uint32_t>(in, pos);
    if (pos + len > in.size()) throw ValidationError("checkpoint truncated");
    std::string name = in.substr(pos, len);
    pos += len;
    const auto rank = Get<std::uint32_t>(in, pos);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(Get<std::uint64_t>(in, pos));
    table.emplace_back(std::move(name), std::move(shape));
  }
  std::map<std::string, Parameter*> by_name;
  for (auto* p : params) by_name[p->name] = p;
  for (const auto& [name, shape] : table) {
    const std::size_t n = NumElements(shape);
    if (pos + n * sizeof(double) > in.size()) throw ValidationError("checkpoint truncated");
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint tensor '" + name + "' unknown to model");
    if (it->second->value.shape() != shape) {
      throw ValidationError("checkpoint tensor '" + name + "' has shape " + ShapeString(shape) +
                            ", model expects " + ShapeString(it->second->value.shape()));
    }
    auto dst = it->second->value.mutable_data();
    std::memcpy(dst.data(), in.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw ValidationError("checkpoint lacks tensor '" + by_name.begin()->first + "'");
  }
  return nlohmann::json::parse(ReadFile(path + ".json"));
}

}  // namespace mmfuse::nn
