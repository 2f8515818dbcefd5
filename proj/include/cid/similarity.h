// Copyright 2026 The CID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CID_SIMILARITY_H_
#define CID_SIMILARITY_H_

#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace cid {

// Text similarity in [-1, 1]. Implementations are symmetric, score a text
// against itself as 1, and tolerate concurrent calls.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double similarity(std::string_view a, std::string_view b) const = 0;
  virtual std::string name() const = 0;
};

// Cosine between bag-of-words count vectors. Words are whitespace-separated
// and compared case-insensitively. Two empty texts score 1; one empty text
// scores 0 against anything else.
class TokenOverlapSimilarity final : public SimilarityProvider {
 public:
  double similarity(std::string_view a, std::string_view b) const override;
  std::string name() const override { return "token_overlap"; }
};

struct EmbeddingOptions {
  std::string base_url;
  std::string model;
  int max_in_flight = 4;
  double timeout_seconds = 60.0;
};

// Cosine between sentence embeddings served over HTTP:
//
//   POST /v1/embed  {"model": str, "texts": [str, str]}
//                   -> {"embeddings": [[float], [float]]}
//
// The pair is always sent in lexicographic order so the score is exactly
// symmetric. Failures raise BackendError.
class EmbeddingServiceSimilarity final : public SimilarityProvider {
 public:
  explicit EmbeddingServiceSimilarity(EmbeddingOptions options);

  double similarity(std::string_view a, std::string_view b) const override;
  std::string name() const override { return "embedding_service"; }

 private:
  EmbeddingOptions options_;
  mutable std::counting_semaphore<> in_flight_;
};

// Convenience front for a provider.
double similarity(std::string_view a, std::string_view b, const SimilarityProvider& provider);

// "token_overlap" or "embedding:URL" (model from `embedding_model`).
std::unique_ptr<SimilarityProvider> MakeSimilarityProvider(std::string_view spec,
                                                           const std::string& embedding_model);

}  // namespace cid

#endif  // CID_SIMILARITY_H_
