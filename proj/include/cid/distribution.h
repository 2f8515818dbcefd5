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

#ifndef CID_DISTRIBUTION_H_
#define CID_DISTRIBUTION_H_

// Next-token distributions and the contrastive-input transform
//
//   p~(w) ∝ p(w) · exp(λ · Δ(w)),   Δ(w) = p(w | x, gen) − p(w | x', gen)
//
// restricted to the top-K tokens of p. All functions here are pure and safe
// to call concurrently.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cid {

using TokenId = std::int32_t;

// Probability vector over a vocabulary. Stored densely; entries are finite
// and non-negative. Normalization is not enforced on construction because a
// remote backend in sparse mode legitimately returns a partial mass.
class ProbDist {
 public:
  ProbDist() = default;
  explicit ProbDist(std::vector<double> probs);

  static ProbDist Uniform(std::size_t vocab_size);
  static ProbDist FromSparse(std::size_t vocab_size,
                             std::span<const std::pair<TokenId, double>> entries);
  // Exponentiates; -inf maps to 0.
  static ProbDist FromLogProbs(std::span<const double> log_probs);

  std::size_t vocab_size() const { return probs_.size(); }
  bool empty() const { return probs_.empty(); }
  double operator[](TokenId id) const { return probs_[static_cast<std::size_t>(id)]; }
  std::span<const double> probs() const { return probs_; }

  double Sum() const;
  bool IsNormalized(double tolerance = 1e-6) const;

  friend bool operator==(const ProbDist&, const ProbDist&) = default;

 private:
  std::vector<double> probs_;
};

// Δ(w) = p(w) − p'(w) for every token.
class DeltaVector {
 public:
  explicit DeltaVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double operator[](TokenId id) const { return values_[static_cast<std::size_t>(id)]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

struct CidParams {
  double lambda = 0.0;
  int top_k = 50;

  // Throws InvalidInputError unless lambda >= 0 (and finite) and top_k >= 1.
  void Validate() const;
};

// Output of the transform plus the normalizer, so a traced p~(w) can be
// recomputed as exp(log p(w) + λ·Δ(w) − log_normalizer).
struct CidOutput {
  ProbDist dist;
  double log_normalizer = 0.0;
  // Surviving token ids in ascending order.
  std::vector<TokenId> support;
};

DeltaVector delta(const ProbDist& p, const ProbDist& p_contrast);

double alpha(double v, double lambda);

// The k most probable tokens of p in ascending id order. Ties go to the
// lower id.
std::vector<TokenId> top_k_mask(const ProbDist& p, int k);

ProbDist apply_cid(const ProbDist& p, const ProbDist& p_contrast,
                   const CidParams& params);
CidOutput apply_cid_detailed(const ProbDist& p, const ProbDist& p_contrast,
                             const CidParams& params);

// Lowest id among the maximal entries.
TokenId argmax_token(const ProbDist& p);

}  // namespace cid

#endif  // CID_DISTRIBUTION_H_
