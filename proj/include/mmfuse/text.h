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

#ifndef MMFUSE_TEXT_H_
#define MMFUSE_TEXT_H_

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mmfuse/common.h"

namespace mmfuse {

struct TextCleaningOptions {
  std::set<std::string> stop_words = DefaultStopWords();
  bool strip_punctuation = true;  // leading/trailing punctuation per token
  bool strip_non_ascii = true;    // drops CJK symbols and other non-ASCII bytes

  static std::set<std::string> DefaultStopWords();
};

// Whitespace tokenizer with cleaning. Stop words match case-insensitively.
std::vector<std::string> CleanAndTokenize(std::string_view text,
                                          const TextCleaningOptions& options = {});

// Frozen mapping from a token sequence to a T x D embedding matrix. No
// training step ever writes to a provider.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Matrix Embed(const std::vector<std::string>& tokens,
                       std::string_view patient_id) const = 0;
  // Fingerprint of the provider state; equal before and after any training.
  virtual std::uint64_t Checksum() const = 0;
};

// Deterministic feature hashing: each token contributes its lowercased word
// and its character trigrams as signed buckets in a D-dimensional vector,
// L2-normalized per token.
class HashingEmbeddingProvider : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 768;
  static constexpr std::uint64_t kDefaultSeed = 0x6d6d66757365ULL;

  explicit HashingEmbeddingProvider(std::size_t dim = kDefaultDim,
                                    std::uint64_t seed = kDefaultSeed);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  Matrix Embed(const std::vector<std::string>& tokens,
               std::string_view patient_id) const override;
  std::uint64_t Checksum() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Embeddings computed elsewhere (for example by a pretrained transformer),
// looked up by patient id. Storage:
//   <name>.bin   "MMFEMB01" magic, then per record: u32 rows, u32 dim,
//                rows*dim little-endian f64
//   <name>.json  {"dim": D, "bin": "<name>.bin",
//                 "entries": {patient_id: {"offset": bytes, "rows": T}}}
class PrecomputedEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit PrecomputedEmbeddingProvider(const std::string& index_path);
  std::string id() const override { return "precomputed:" + index_path_; }
  std::size_t dim() const override { return dim_; }
  Matrix Embed(const std::vector<std::string>& tokens,
               std::string_view patient_id) const override;
  std::uint64_t Checksum() const override;

 private:
  std::string index_path_;
  std::size_t dim_ = 0;
  std::map<std::string, Matrix, std::less<>> table_;
};

void WritePrecomputedEmbeddings(const std::string& index_path,
                                const std::map<std::string, Matrix>& embeddings);

struct TextEmbedding {
  std::vector<std::string> tokens;
  Matrix vectors;  // T x D
  std::string provider_id;
};

// Cleans, tokenizes and embeds. expected_dim (when non-zero) enforces a
// constant dimension across a cohort.
TextEmbedding PreText(std::string_view plan_text, std::string_view patient_id,
                      const EmbeddingProvider& provider,
                      const TextCleaningOptions& options = {},
                      std::size_t expected_dim = 0);

// Mean over tokens, giving a fixed-width vector.
std::vector<double> MeanPool(const Matrix& m);

std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t seed);

}  // namespace mmfuse

#endif  // MMFUSE_TEXT_H_
