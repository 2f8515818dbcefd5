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

#include "cid/lambda_star.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "cid/cached_backend.h"
#include "cid/parallel.h"
#include "cid/text_io.h"

namespace cid {

std::vector<double> default_lambda_grid() { return {0, 1, 2, 5, 10, 20, 50, 100}; }

void ValidateGrid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidInputError("lambda grid is empty");
  if (grid.front() != 0.0) throw InvalidInputError("lambda grid must start at 0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw InvalidInputError("lambda grid has a non-finite value");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw InvalidInputError("lambda grid must be strictly increasing");
    }
  }
}

LambdaStarResult lambda_sweep(const PerturbedPair& pair, std::span<const double> grid,
                              std::shared_ptr<const Backend> backend,
                              const SimilarityProvider& provider, const SweepOptions& options) {
  ValidateGrid(grid);
  if (!backend) throw InvalidInputError("lambda_sweep needs a backend");
  // λ=0 decodes repeat across the pair's directions; one cache per sweep.
  std::shared_ptr<const Backend> shared = backend;
  if (dynamic_cast<const CachedBackend*>(backend.get()) == nullptr) {
    shared = cached(std::move(backend));
  }

  LambdaStarResult result{pair, std::vector<double>(grid.begin(), grid.end()), {}, {}, {}};
  result.sims.reserve(grid.size());
  const std::string& second_prefix =
      options.prefix == PrefixMode::kOriginalForBoth ? pair.original : pair.perturbed;
  for (const double lambda : grid) {
    try {
      auto [forward, backward] = contrast_pair(shared, pair.original, pair.perturbed,
                                               CidParams{lambda, options.top_k}, options.limits);
      result.sims.push_back(provider.similarity(pair.original + forward.generated_text,
                                                second_prefix + backward.generated_text));
    } catch (const std::exception& e) {
      throw SweepError("sweep failed at lambda=" + format_double(lambda) + ": " + e.what(),
                       lambda, std::current_exception());
    }
  }
  return result;
}

LambdaStarResult lambda_star(LambdaStarResult sweep, double tau) {
  if (sweep.grid.empty()) throw InvalidInputError("lambda_star on an empty grid");
  if (sweep.sims.size() != sweep.grid.size()) {
    throw InvalidInputError("sweep is incomplete: " + std::to_string(sweep.sims.size()) +
                            " similarities for " + std::to_string(sweep.grid.size()) +
                            " grid points");
  }
  sweep.tau = tau;
  sweep.lambda_star.reset();
  for (std::size_t i = 0; i < sweep.grid.size(); ++i) {
    if (sweep.sims[i] < tau) {
      sweep.lambda_star = sweep.grid[i];
      break;
    }
  }
  return sweep;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidInputError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::vector<TypeSummary> aggregate_by_type(std::span<const LambdaStarResult> results) {
  std::map<PerturbationType, std::pair<std::vector<double>, std::size_t>> by_type;
  for (const auto& r : results) {
    if (!r.scanned()) throw InvalidInputError("aggregate_by_type needs scanned results");
    auto& [values, not_reached] = by_type[r.pair.type];
    if (r.reached()) {
      values.push_back(*r.lambda_star);
    } else {
      ++not_reached;
    }
  }

  std::vector<TypeSummary> summary;
  for (auto& [type, entry] : by_type) {
    auto& [values, not_reached] = entry;
    TypeSummary s{type, {}, {}, {}, values.size() + not_reached, not_reached};
    if (!values.empty()) {
      std::sort(values.begin(), values.end());
      s.median = quantile_sorted(values, 0.5);
      s.q25 = quantile_sorted(values, 0.25);
      s.q75 = quantile_sorted(values, 0.75);
    }
    summary.push_back(s);
  }
  std::stable_sort(summary.begin(), summary.end(), [](const TypeSummary& a, const TypeSummary& b) {
    if (a.median.has_value() != b.median.has_value()) return a.median.has_value();
    if (a.median && *a.median != *b.median) return *a.median < *b.median;
    return to_string(a.type) < to_string(b.type);
  });
  return summary;
}

std::vector<double> mean_similarity_curve(std::span<const LambdaStarResult> sweeps) {
  if (sweeps.empty()) throw InvalidInputError("mean similarity curve needs at least one sweep");
  const auto& grid = sweeps.front().grid;
  std::vector<double> sums(grid.size(), 0.0);
  for (const auto& s : sweeps) {
    if (s.grid != grid || s.sims.size() != grid.size()) {
      throw InvalidInputError("sweeps disagree on the lambda grid");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) sums[i] += s.sims[i];
  }
  for (double& v : sums) v /= static_cast<double>(sweeps.size());
  return sums;
}

std::vector<double> mean_similarity_curve(std::span<const PerturbedPair> pairs,
                                          std::span<const double> grid,
                                          std::shared_ptr<const Backend> backend,
                                          const SimilarityProvider& provider,
                                          const SweepOptions& options, int jobs) {
  if (pairs.empty()) throw InvalidInputError("mean similarity curve needs at least one pair");
  std::vector<LambdaStarResult> sweeps(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    try {
      sweeps[i] = lambda_sweep(pairs[i], grid, backend, provider, options);
    } catch (const std::exception& e) {
      throw Error("pair " + std::to_string(i) + ": " + e.what());
    }
  });
  return mean_similarity_curve(sweeps);
}

namespace {

bool IsBackendFailure(const std::exception_ptr& error) {
  if (!error) return false;
  try {
    std::rethrow_exception(error);
  } catch (const BackendError&) {
    return true;
  } catch (const DecodeError& e) {
    return IsBackendFailure(e.cause());
  } catch (const SweepError& e) {
    return IsBackendFailure(e.cause());
  } catch (...) {
    return false;
  }
}

}  // namespace

std::vector<BatchEntry> run_lambda_star_batch(std::span<const PerturbedPair> pairs,
                                              std::span<const double> grid, double tau,
                                              std::shared_ptr<const Backend> backend,
                                              const SimilarityProvider& provider,
                                              const SweepOptions& options, int jobs) {
  ValidateGrid(grid);
  std::vector<BatchEntry> entries(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    try {
      entries[i].result = lambda_star(lambda_sweep(pairs[i], grid, backend, provider, options), tau);
    } catch (const std::exception& e) {
      entries[i].error = e.what();
      entries[i].backend_failure = IsBackendFailure(std::current_exception());
    }
  });
  return entries;
}

nlohmann::json to_json(const LambdaStarResult& result) {
  nlohmann::json doc = to_json(result.pair);
  doc["grid"] = result.grid;
  doc["sims"] = result.sims;
  doc["tau"] = result.tau ? nlohmann::json(*result.tau) : nlohmann::json(nullptr);
  if (!result.scanned()) {
    doc["lambda_star"] = nullptr;
  } else if (result.reached()) {
    doc["lambda_star"] = *result.lambda_star;
  } else {
    doc["lambda_star"] = "NOT_REACHED";
  }
  return doc;
}

LambdaStarResult lambda_star_result_from_json(const nlohmann::json& doc) {
  try {
    LambdaStarResult r;
    r.pair = pair_from_json(doc);
    r.grid = doc.at("grid").get<std::vector<double>>();
    r.sims = doc.at("sims").get<std::vector<double>>();
    if (!doc.at("tau").is_null()) r.tau = doc.at("tau").get<double>();
    const auto& star = doc.at("lambda_star");
    if (star.is_number()) {
      r.lambda_star = star.get<double>();
    } else if (star.is_string() && star.get<std::string>() != "NOT_REACHED") {
      throw InvalidInputError("bad lambda_star value '" + star.get<std::string>() + "'");
    }
    if (r.lambda_star && !r.tau) throw InvalidInputError("lambda_star set without tau");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed lambda* record: ") + e.what());
  }
}

void write_results_jsonl(std::ostream& out, std::span<const LambdaStarResult> results) {
  for (const auto& r : results) out << to_json(r).dump() << '\n';
}

std::vector<LambdaStarResult> read_results_jsonl(std::istream& in) {
  std::vector<LambdaStarResult> results;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      results.push_back(lambda_star_result_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInputError(std::string("malformed lambda* line: ") + e.what());
    }
  }
  return results;
}

void write_summary_csv(std::ostream& out, std::span<const TypeSummary> summary) {
  write_csv_row(out, {"type", "median", "q25", "q75", "n", "not_reached"});
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& s : summary) {
    write_csv_row(out, {std::string(to_string(s.type)), opt(s.median), opt(s.q25), opt(s.q75),
                        std::to_string(s.count), std::to_string(s.not_reached)});
  }
}

std::vector<TypeSummary> read_summary_csv(std::istream& in) {
  std::vector<std::string> row;
  if (!read_csv_row(in, row) || row.size() != 6 || row[0] != "type") {
    throw InvalidInputError("summary CSV has an unexpected header");
  }
  auto opt = [](const std::string& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return parse_double(v);
  };
  std::vector<TypeSummary> summary;
  while (read_csv_row(in, row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 6) throw InvalidInputError("summary CSV row has the wrong width");
    summary.push_back(TypeSummary{ParsePerturbationType(row[0]), opt(row[1]), opt(row[2]),
                                  opt(row[3]), static_cast<std::size_t>(std::stoul(row[4])),
                                  static_cast<std::size_t>(std::stoul(row[5]))});
  }
  return summary;
}

void write_curve_csv(std::ostream& out, std::span<const double> grid,
                     std::span<const double> curve) {
  if (grid.size() != curve.size()) throw InvalidInputError("curve and grid differ in length");
  write_csv_row(out, {"lambda", "mean_similarity"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    write_csv_row(out, {format_double(grid[i]), format_double(curve[i])});
  }
}

}  // namespace cid
