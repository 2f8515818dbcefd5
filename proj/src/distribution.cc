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

#include "cid/distribution.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cid/error.h"

namespace cid {

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const double v = probs_[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInputError("probability at token " + std::to_string(i) +
                              " is negative or not finite");
    }
  }
}

ProbDist ProbDist::Uniform(std::size_t vocab_size) {
  if (vocab_size == 0) throw InvalidInputError("uniform over empty vocabulary");
  return ProbDist(std::vector<double>(vocab_size, 1.0 / static_cast<double>(vocab_size)));
}

ProbDist ProbDist::FromSparse(std::size_t vocab_size,
                              std::span<const std::pair<TokenId, double>> entries) {
  std::vector<double> probs(vocab_size, 0.0);
  for (const auto& [id, prob] : entries) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw InvalidInputError("sparse entry token " + std::to_string(id) +
                              " outside vocabulary of size " +
                              std::to_string(vocab_size));
    }
    probs[static_cast<std::size_t>(id)] = prob;
  }
  return ProbDist(std::move(probs));
}

ProbDist ProbDist::FromLogProbs(std::span<const double> log_probs) {
  std::vector<double> probs(log_probs.size());
  std::transform(log_probs.begin(), log_probs.end(), probs.begin(),
                 [](double lp) { return std::exp(lp); });
  return ProbDist(std::move(probs));
}

double ProbDist::Sum() const {
  return std::accumulate(probs_.begin(), probs_.end(), 0.0);
}

bool ProbDist::IsNormalized(double tolerance) const {
  return !probs_.empty() && std::abs(Sum() - 1.0) <= tolerance;
}

void CidParams::Validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw InvalidInputError("lambda must be a finite value >= 0");
  }
  if (top_k < 1) throw InvalidInputError("top_k must be >= 1");
}

namespace {

void CheckSameVocab(const ProbDist& p, const ProbDist& p_contrast) {
  if (p.vocab_size() != p_contrast.vocab_size()) {
    throw VocabMismatchError(p.vocab_size(), p_contrast.vocab_size());
  }
}

}  // namespace

DeltaVector delta(const ProbDist& p, const ProbDist& p_contrast) {
  CheckSameVocab(p, p_contrast);
  std::vector<double> values(p.vocab_size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = p.probs()[i] - p_contrast.probs()[i];
  }
  return DeltaVector(std::move(values));
}

double alpha(double v, double lambda) { return std::exp(lambda * v); }

std::vector<TokenId> top_k_mask(const ProbDist& p, int k) {
  if (k < 1) throw InvalidInputError("top_k must be >= 1");
  const auto probs = p.probs();
  std::vector<TokenId> ids(probs.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  const std::size_t keep = std::min(ids.size(), static_cast<std::size_t>(k));
  if (keep < ids.size()) {
    auto by_rank = [&](TokenId a, TokenId b) {
      const double pa = probs[static_cast<std::size_t>(a)];
      const double pb = probs[static_cast<std::size_t>(b)];
      return pa > pb || (pa == pb && a < b);
    };
    std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep),
                     ids.end(), by_rank);
    ids.resize(keep);
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

CidOutput apply_cid_detailed(const ProbDist& p, const ProbDist& p_contrast,
                             const CidParams& params) {
  params.Validate();
  CheckSameVocab(p, p_contrast);

  const auto mask = top_k_mask(p, params.top_k);

  // log p~ = log p + λ·Δ − log Z, with zero-probability tokens excluded.
  std::vector<TokenId> support;
  std::vector<double> scores;
  support.reserve(mask.size());
  scores.reserve(mask.size());
  for (const TokenId w : mask) {
    const double pw = p[w];
    if (pw <= 0.0) continue;
    support.push_back(w);
    scores.push_back(std::log(pw) + params.lambda * (pw - p_contrast[w]));
  }
  if (support.empty()) {
    throw EmptySupportError("all top-K tokens have zero probability");
  }

  const double max_score = *std::max_element(scores.begin(), scores.end());
  double scaled_sum = 0.0;
  for (const double s : scores) scaled_sum += std::exp(s - max_score);
  const double log_normalizer = max_score + std::log(scaled_sum);

  std::vector<double> out(p.vocab_size(), 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    out[static_cast<std::size_t>(support[i])] = std::exp(scores[i] - log_normalizer);
  }
  return CidOutput{ProbDist(std::move(out)), log_normalizer, std::move(support)};
}

ProbDist apply_cid(const ProbDist& p, const ProbDist& p_contrast,
                   const CidParams& params) {
  return apply_cid_detailed(p, p_contrast, params).dist;
}

TokenId argmax_token(const ProbDist& p) {
  if (p.empty()) throw InvalidInputError("argmax of an empty distribution");
  const auto probs = p.probs();
  // max_element returns the first maximum, which is the lowest id.
  return static_cast<TokenId>(std::max_element(probs.begin(), probs.end()) -
                              probs.begin());
}

}  // namespace cid
