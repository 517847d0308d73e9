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

#include "mmfuse/text.h"

#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mmfuse/cohort_io.h"

namespace mmfuse {

std::set<std::string> TextCleaningOptions::DefaultStopWords() {
  return {"a",  "an", "and", "are", "as",   "at",  "be",   "by",
          "for", "from", "in", "is",  "it",  "of",  "on",  "or",
          "the", "to", "was", "were", "will", "with"};
}

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<std::string> CleanAndTokenize(std::string_view text,
                                          const TextCleaningOptions& options) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::string tok;
    for (char c : current) {
      if (options.strip_non_ascii && (static_cast<unsigned char>(c) & 0x80)) continue;
      tok.push_back(c);
    }
    current.clear();
    if (options.strip_punctuation) {
      auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
      std::size_t b = 0, e = tok.size();
      while (b < e && punct(tok[b])) ++b;
      while (e > b && punct(tok[e - 1])) --e;
      tok = tok.substr(b, e - b);
    }
    if (tok.empty()) return;
    if (options.stop_words.count(Lower(tok))) return;
    tokens.push_back(std::move(tok));
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // Final avalanche so low bits depend on every byte.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

HashingEmbeddingProvider::HashingEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

std::string HashingEmbeddingProvider::id() const {
  return "hashing:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

Matrix HashingEmbeddingProvider::Embed(const std::vector<std::string>& tokens,
                                       std::string_view) const {
  Matrix out(tokens.size(), dim_);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::string word = Lower(tokens[t]);
    double* row = out.row(t);
    auto add = [&](std::string_view feature, double weight) {
      const std::uint64_t h = Fnv1a(feature, seed_);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      row[h % dim_] += sign * weight;
    };
    add("w:" + word, 1.0);
    const std::string padded = "<" + word + ">";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      add("g:" + padded.substr(i, 3), 0.5);
    }
    double norm = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) norm += row[d] * row[d];
    norm = std::sqrt(norm);
    if (norm > 0) {
      for (std::size_t d = 0; d < dim_; ++d) row[d] /= norm;
    }
  }
  return out;
}

std::uint64_t HashingEmbeddingProvider::Checksum() const {
  return Fnv1a(id(), 0);
}

PrecomputedEmbeddingProvider::PrecomputedEmbeddingProvider(const std::string& index_path)
    : index_path_(index_path) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(ReadFile(index_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid embedding index '" + index_path + "': " + e.what());
  }
  dim_ = index.at("dim").get<std::size_t>();
  const auto bin_path = std::filesystem::path(index_path).parent_path() /
                        index.at("bin").get<std::string>();
  const std::string blob = ReadFile(bin_path.string());
  if (blob.size() < 8 || blob.compare(0, 8, "MMFEMB01") != 0) {
    throw ValidationError("embedding file '" + bin_path.string() + "' has a bad header");
  }
  for (const auto& [pid, entry] : index.at("entries").items()) {
    const auto offset = entry.at("offset").get<std::size_t>();
    if (offset + 8 > blob.size()) throw ValidationError("embedding offset out of range for " + pid);
    std::uint32_t rows = 0, dim = 0;
    std::memcpy(&rows, blob.data() + offset, 4);
    std::memcpy(&dim, blob.data() + offset + 4, 4);
    if (dim != dim_) {
      throw ValidationError("embedding for '" + pid + "' has dimension " +
                            std::to_string(dim) + ", index says " + std::to_string(dim_));
    }
    const std::size_t bytes = static_cast<std::size_t>(rows) * dim * sizeof(double);
    if (offset + 8 + bytes > blob.size()) throw ValidationError("truncated embedding for " + pid);
    Matrix m(rows, dim);
    std::memcpy(m.data.data(), blob.data() + offset + 8, bytes);
    table_.emplace(pid, std::move(m));
  }
}

Matrix PrecomputedEmbeddingProvider::Embed(const std::vector<std::string>&,
                                           std::string_view patient_id) const {
  auto it = table_.find(patient_id);
  if (it == table_.end()) {
    throw ValidationError("no precomputed embedding for patient '" +
                          std::string(patient_id) + "'");
  }
  return it->second;
}

std::uint64_t PrecomputedEmbeddingProvider::Checksum() const {
  std::uint64_t h = dim_;
  for (const auto& [pid, m] : table_) {
    h = Fnv1a(pid, h);
    h = Fnv1a(std::string_view(reinterpret_cast<const char*>(m.data.data()),
                               m.data.size() * sizeof(double)), h);
  }
  return h;
}

void WritePrecomputedEmbeddings(const std::string& index_path,
                                const std::map<std::string, Matrix>& embeddings) {
  std::size_t dim = 0;
  std::string blob = "MMFEMB01";
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [pid, m] : embeddings) {
    if (dim == 0) dim = m.cols;
    if (m.cols != dim) throw ValidationError("inconsistent embedding dimension for " + pid);
    entries[pid] = {{"offset", blob.size()}, {"rows", m.rows}};
    const auto rows = static_cast<std::uint32_t>(m.rows);
    const auto cols = static_cast<std::uint32_t>(m.cols);
    blob.append(reinterpret_cast<const char*>(&rows), 4);
    blob.append(reinterpret_cast<const char*>(&cols), 4);
    blob.append(reinterpret_cast<const char*>(m.data.data()), m.data.size() * sizeof(double));
  }
  const std::filesystem::path index(index_path);
  const std::string bin_name = index.stem().string() + ".bin";
  WriteFileAtomic((index.parent_path() / bin_name).string(), blob);
  nlohmann::json j = {{"dim", dim}, {"bin", bin_name}, {"entries", entries}};
  WriteFileAtomic(index_path, j.dump(2) + "\n");
}

TextEmbedding PreText(std::string_view plan_text, std::string_view patient_id,
                      const EmbeddingProvider& provider,
                      const TextCleaningOptions& options, std::size_t expected_dim) {
  TextEmbedding out;
  out.tokens = CleanAndTokenize(plan_text, options);
  if (out.tokens.empty()) {
    throw ValidationError("surgical plan text for '" + std::string(patient_id) +
                          "' is empty after cleaning");
  }
  if (expected_dim != 0 && provider.dim() != expected_dim) {
    throw ValidationError("embedding provider dimension " + std::to_string(provider.dim()) +
                          " does not match cohort dimension " + std::to_string(expected_dim));
  }
  out.vectors = provider.Embed(out.tokens, patient_id);
  if (out.vectors.cols != provider.dim()) {
    throw ValidationError("provider returned width " + std::to_string(out.vectors.cols) +
                          ", expected " + std::to_string(provider.dim()));
  }
  out.provider_id = provider.id();
  return out;
}

std::vector<double> MeanPool(const Matrix& m) {
  std::vector<double> out(m.cols, 0.0);
  if (m.rows == 0) return out;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += m(r, c);
  }
  for (double& v : out) v /= static_cast<double>(m.rows);
  return out;
}

}  // namespace mmfuse
