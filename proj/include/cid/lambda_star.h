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

#ifndef CID_LAMBDA_STAR_H_
#define CID_LAMBDA_STAR_H_

#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cid/backend.h"
#include "cid/decode.h"
#include "cid/error.h"
#include "cid/perturbation.h"
#include "cid/similarity.h"
#include "json.hpp"

namespace cid {

inline constexpr double kDefaultTau = 0.85;
std::vector<double> default_lambda_grid();  // {0, 1, 2, 5, 10, 20, 50, 100}

// Which prefix is prepended to the CID(x'; x, λ) continuation before scoring.
// kOriginalForBoth scores sim(x + CID(x; x', λ), x + CID(x'; x, λ)).
// kOwnInput scores sim(x + CID(x; x', λ), x' + CID(x'; x, λ)).
enum class PrefixMode { kOriginalForBoth, kOwnInput };

struct SweepOptions {
  int top_k = 50;
  DecodeLimits limits;
  PrefixMode prefix = PrefixMode::kOriginalForBoth;
};

// One pair's similarity sweep. `tau` is set once lambda_star() has scanned
// the sweep; after that an empty `lambda_star` means NOT_REACHED.
struct LambdaStarResult {
  PerturbedPair pair;
  std::vector<double> grid;
  std::vector<double> sims;
  std::optional<double> tau;
  std::optional<double> lambda_star;

  bool scanned() const { return tau.has_value(); }
  bool reached() const { return lambda_star.has_value(); }

  friend bool operator==(const LambdaStarResult&, const LambdaStarResult&) = default;
};

// A decode or similarity call failed while sweeping; `lambda` is the grid
// point being evaluated.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, double lambda, std::exception_ptr cause)
      : Error(what), lambda_(lambda), cause_(std::move(cause)) {}
  double lambda() const { return lambda_; }
  const std::exception_ptr& cause() const { return cause_; }

 private:
  double lambda_;
  std::exception_ptr cause_;
};

// Non-empty, starts at 0, strictly increasing, finite.
void ValidateGrid(std::span<const double> grid);

LambdaStarResult lambda_sweep(const PerturbedPair& pair, std::span<const double> grid,
                              std::shared_ptr<const Backend> backend,
                              const SimilarityProvider& provider,
                              const SweepOptions& options = {});

// Smallest grid λ whose similarity is below tau, or NOT_REACHED.
LambdaStarResult lambda_star(LambdaStarResult sweep, double tau);

struct TypeSummary {
  PerturbationType type;
  std::optional<double> median;
  std::optional<double> q25;
  std::optional<double> q75;
  std::size_t count = 0;         // all results of this type
  std::size_t not_reached = 0;   // of which NOT_REACHED

  friend bool operator==(const TypeSummary&, const TypeSummary&) = default;
};

// Linear-interpolation quantile of sorted values: position q·(n−1).
double quantile_sorted(std::span<const double> sorted, double q);

// Quartiles of the reached λ* values per perturbation type, sorted ascending
// by median. Types with no reached value have no quantiles and sort last.
std::vector<TypeSummary> aggregate_by_type(std::span<const LambdaStarResult> results);

// Per-λ arithmetic mean of completed sweeps (all on the same grid).
std::vector<double> mean_similarity_curve(std::span<const LambdaStarResult> sweeps);
// Sweeps every pair (in parallel over pairs) and averages.
std::vector<double> mean_similarity_curve(std::span<const PerturbedPair> pairs,
                                          std::span<const double> grid,
                                          std::shared_ptr<const Backend> backend,
                                          const SimilarityProvider& provider,
                                          const SweepOptions& options = {}, int jobs = 1);

// Outcome of one pair in a batch: a result or the error that stopped it.
struct BatchEntry {
  std::optional<LambdaStarResult> result;
  std::string error;
  bool backend_failure = false;
};

// lambda_sweep + lambda_star over many pairs. Failures are recorded per
// pair; the batch continues. Entries are in input order.
std::vector<BatchEntry> run_lambda_star_batch(std::span<const PerturbedPair> pairs,
                                              std::span<const double> grid, double tau,
                                              std::shared_ptr<const Backend> backend,
                                              const SimilarityProvider& provider,
                                              const SweepOptions& options = {}, int jobs = 1);

// JSON-lines record. "lambda_star" is a number, "NOT_REACHED", or null
// (not yet scanned).
nlohmann::json to_json(const LambdaStarResult& result);
LambdaStarResult lambda_star_result_from_json(const nlohmann::json& doc);
void write_results_jsonl(std::ostream& out, std::span<const LambdaStarResult> results);
std::vector<LambdaStarResult> read_results_jsonl(std::istream& in);

// CSV "type,median,q25,q75,n,not_reached"; absent quantiles are empty.
void write_summary_csv(std::ostream& out, std::span<const TypeSummary> summary);
std::vector<TypeSummary> read_summary_csv(std::istream& in);
// CSV "lambda,mean_similarity".
void write_curve_csv(std::ostream& out, std::span<const double> grid,
                     std::span<const double> curve);

}  // namespace cid

#endif  // CID_LAMBDA_STAR_H_
