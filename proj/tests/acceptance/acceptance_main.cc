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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cid/bias_audit.h"
#include "cid/decode.h"
#include "cid/distribution.h"
#include "cid/lambda_star.h"
#include "cid/table_model.h"
#include "cid/text_io.h"
#include "cli.h"
#include "test_util.h"

namespace cid {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fixed(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string Sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

Outcome OracleEquivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> vocab(1, 64);
  std::uniform_real_distribution<double> lam(0.0, 100.0);
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t v = vocab(rng);
    const auto p = testing::RandomProbs(rng, v, 0.2);
    const auto q = testing::RandomProbs(rng, v, 0.2);
    const int k = std::uniform_int_distribution<int>(1, static_cast<int>(v))(rng);
    const double l = lam(rng);
    const auto got = apply_cid(ProbDist(p), ProbDist(q), {.lambda = l, .top_k = k});
    const auto want = testing::NaiveCid(p, q, l, k);
    for (std::size_t i = 0; i < v; ++i) worst = std::max(worst, std::abs(got.probs()[i] - want[i]));
  }
  const double secs = Seconds(start);
  return {worst <= 1e-12 && secs < 5.0,
          "1000 cases, max |diff| " + Sci(worst) + " (tol 1e-12), " + Fixed(secs) + " s (< 5 s)"};
}

// Degeneracy, normalization and log-odds share one run over 100 jobs.
struct DegeneracyStats {
  int jobs = 0;
  int matched = 0;
  int comparisons = 0;
  int steps = 0;
  double worst_norm = 0.0;
  double worst_log_odds = 0.0;
  double seconds = 0.0;
};

DegeneracyStats RunDegeneracySuite() {
  const auto start = Clock::now();
  DegeneracyStats s;
  std::mt19937_64 rng(2002);
  auto observe = [&](double lambda) {
    return [&s, lambda](const StepView& v) {
      ++s.steps;
      s.worst_norm = std::max(s.worst_norm, std::abs(v.transformed.dist.Sum() - 1.0));
      const auto& out = v.transformed;
      const TokenId a = out.support.front();
      for (const TokenId b : out.support) {
        const double lhs = std::log(out.dist[a] / out.dist[b]);
        const double rhs = std::log(v.p[a] / v.p[b]) +
                           lambda * ((v.p[a] - v.p_contrast[a]) - (v.p[b] - v.p_contrast[b]));
        s.worst_log_odds = std::max(s.worst_log_odds, std::abs(lhs - rhs));
      }
    };
  };
  for (int job = 0; job < 100; ++job) {
    ++s.jobs;
    const auto model = testing::RandomTableModel(rng, 5, 3, 60);
    const auto x = testing::RandomText(rng, 5, 1, 6);
    const auto y = testing::RandomText(rng, 5, 1, 6);
    const int k = 1 + static_cast<int>(rng() % 6);
    const DecodeLimits limits{.max_new_tokens = 12};
    const auto greedy = greedy_decode(*model, x, limits, k, observe(0.0));

    bool all = true;
    const auto zero = cid_decode(*model, {x, y, {.lambda = 0.0, .top_k = k}, limits}, observe(0.0));
    ++s.comparisons;
    all = all && zero.generated_tokens == greedy.generated_tokens;
    for (const double l : {1.0, 10.0, 50.0}) {
      const auto same = cid_decode(*model, {x, x, {.lambda = l, .top_k = k}, limits}, observe(l));
      ++s.comparisons;
      all = all && same.generated_tokens == greedy.generated_tokens;
    }
    // Nondegenerate contrast for the normalization and log-odds checks.
    const double l = double(rng() % 100);
    cid_decode(*model, {x, y, {.lambda = l, .top_k = k}, limits}, observe(l));
    s.matched += all;
  }
  s.seconds = Seconds(start);
  return s;
}

Outcome Degeneracy(const DegeneracyStats& s) {
  return {s.matched == s.jobs && s.seconds < 10.0,
          std::to_string(s.matched) + "/" + std::to_string(s.jobs) + " jobs match greedy over " +
              std::to_string(s.comparisons) + " decodes, " + Fixed(s.seconds) + " s (< 10 s)"};
}

Outcome NormalizationLogOdds(const DegeneracyStats& s) {
  return {s.worst_norm <= 1e-9 && s.worst_log_odds <= 1e-9 && s.steps > 0,
          std::to_string(s.steps) + " traced steps, max |sum-1| " + Sci(s.worst_norm) +
              ", max log-odds error " + Sci(s.worst_log_odds) + " (tol 1e-9)"};
}

Outcome HandFixture() {
  const auto out = apply_cid(ProbDist({0.5, 0.3, 0.2}), ProbDist({0.2, 0.3, 0.5}),
                             {.lambda = 1.0, .top_k = 50});
  // Direct evaluation: weights 0.5e^0.3, 0.3, 0.2e^-0.3 over their sum.
  const double u[3] = {0.5 * std::exp(0.3), 0.3, 0.2 * std::exp(-0.3)};
  const double z = u[0] + u[1] + u[2];
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(out.probs()[i] - u[i] / z));
  const double a15 = alpha(1.0, 5.0);
  bool exact_ones = true;
  for (const double l : {0.0, 2.0, 5.0, 10.0}) exact_ones = exact_ones && alpha(0.0, l) == 1.0;
  const bool pass = worst <= 1e-6 && std::abs(a15 - 148.413159) <= 1e-6 && exact_ones;
  std::ostringstream d;
  d.precision(9);
  d << "p~ = [" << out.probs()[0] << ", " << out.probs()[1] << ", " << out.probs()[2]
    << "], max |diff| " << Sci(worst) << "; alpha(1;5) = " << a15
    << "; alpha(0;{0,2,5,10}) == 1 exactly: " << (exact_ones ? "yes" : "no");
  return {pass, d.str()};
}

Outcome LambdaStarScan() {
  std::mt19937_64 rng(3003);
  const auto grid = default_lambda_grid();
  const auto types = all_perturbation_types();
  std::vector<LambdaStarResult> results;
  int agree = 0;
  int zero_cases = 0;
  int not_reached_cases = 0;
  for (int r = 0; r < 50; ++r) {
    // Crossing index in [0, |grid|]; |grid| means never below τ.
    const std::size_t cross = r < 5 ? 0 : r < 10 ? grid.size() : rng() % (grid.size() + 1);
    std::vector<double> sims(grid.size());
    // Values after the crossing may climb back above τ.
    std::uniform_real_distribution<double> above(0.85, 1.0), below(0.0, 0.8499), any(0.0, 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      sims[i] = i < cross ? above(rng) : i == cross ? below(rng) : any(rng);
    }
    LambdaStarResult rec{{"x", "y", types[static_cast<std::size_t>(r) % types.size()]},
                         grid, sims, {}, {}};
    const auto got = lambda_star(rec, 0.85);
    std::optional<double> brute;
    for (std::size_t i = 0; i < grid.size() && !brute; ++i) {
      if (sims[i] < 0.85) brute = grid[i];
    }
    const std::optional<double> designed =
        cross < grid.size() ? std::optional<double>(grid[cross]) : std::nullopt;
    agree += got.lambda_star == brute && brute == designed;
    zero_cases += designed == 0.0;
    not_reached_cases += !designed.has_value();
    results.push_back(got);
  }

  // Rank-statistic oracle: quarter positions on integer-valued λ*.
  auto quarter = [](const std::vector<double>& xs, int k) {
    const std::size_t num = static_cast<std::size_t>(k) * (xs.size() - 1);
    const std::size_t lo = num / 4, rem = num % 4;
    return rem == 0 ? xs[lo] : (xs[lo] * double(4 - rem) + xs[lo + 1] * double(rem)) / 4.0;
  };
  int quantiles_ok = 0;
  const auto summary = aggregate_by_type(results);
  for (const auto& s : summary) {
    std::vector<double> xs;
    std::size_t total = 0, missing = 0;
    for (const auto& r : results) {
      if (r.pair.type != s.type) continue;
      ++total;
      if (r.lambda_star) xs.push_back(*r.lambda_star); else ++missing;
    }
    std::sort(xs.begin(), xs.end());
    bool ok = s.count == total && s.not_reached == missing;
    if (xs.empty()) {
      ok = ok && !s.median && !s.q25 && !s.q75;
    } else {
      ok = ok && s.q25 == quarter(xs, 1) && s.median == quarter(xs, 2) && s.q75 == quarter(xs, 3);
    }
    quantiles_ok += ok;
  }
  const bool pass = agree == 50 && zero_cases > 0 && not_reached_cases > 0 &&
                    quantiles_ok == static_cast<int>(summary.size());
  return {pass, std::to_string(agree) + "/50 records match brute force (" +
                    std::to_string(zero_cases) + " at 0, " + std::to_string(not_reached_cases) +
                    " NOT_REACHED); " + std::to_string(quantiles_ok) + "/" +
                    std::to_string(summary.size()) + " type summaries match the oracle"};
}

Outcome FixtureMonotonicity() {
  const auto model = std::make_shared<TableModel>(
      TableModel::Load(testing::FixtureDir() / "perturbation_model.json"));
  std::ifstream in(testing::FixtureDir() / "perturbation_pairs.jsonl");
  const auto pairs = read_pairs_jsonl(in);
  const TokenOverlapSimilarity sim;
  const std::vector<double> grid{0, 1, 2, 5, 10, 20, 50, 100};
  const auto batch = run_lambda_star_batch(pairs, grid, 0.85, model, sim, {}, 4);
  std::vector<LambdaStarResult> results;
  for (const auto& e : batch) {
    if (e.result) results.push_back(*e.result);
  }
  if (results.size() != pairs.size()) return {false, "some fixture pairs failed to decode"};
  const auto curve = mean_similarity_curve(results);
  bool non_increasing = true;
  for (std::size_t i = 1; i < curve.size(); ++i) non_increasing &= curve[i] <= curve[i - 1];
  std::vector<double> reached;
  for (const auto& r : results) {
    if (r.lambda_star) reached.push_back(*r.lambda_star);
  }
  std::sort(reached.begin(), reached.end());
  const bool finite_median = !reached.empty() && std::isfinite(quantile_sorted(reached, 0.5));
  std::ostringstream d;
  d << pairs.size() << " pairs; mean similarity";
  for (const double c : curve) d << ' ' << Fixed(c);
  d << "; " << reached.size() << " reached, median lambda* "
    << (reached.empty() ? std::string("n/a") : Fixed(quantile_sorted(reached, 0.5), 1));
  return {non_increasing && finite_median, d.str()};
}

Outcome AuditExactness() {
  const auto model = std::make_shared<TableModel>(
      TableModel::Load(testing::FixtureDir() / "audit_model.json"));
  const auto groups = load_name_groups(testing::FixtureDir() / "audit_groups.json");
  const auto labels = BiasLabels::Load(testing::FixtureDir() / "audit_labels.json");
  const NameGroup& us = find_group(groups, "Fixture US");
  const NameGroup& eg = find_group(groups, "Fixture Egypt");
  const Template tmpl("<name> failed because {he|she}");
  const std::vector<double> lambdas{0, 10, 50};
  const auto tallies = run_pairwise_audit(us, eg, tmpl, lambdas, model);

  bool sums = tallies.size() == 6;
  for (const auto& t : tallies) sums = sums && t.total() == 4 && t.skipped == 0;

  // Hand-computed: Egypt direction at λ=10 splits 2/2 between "had an
  // accent" (biased) and "was too short"; at λ=50 all four are biased.
  const std::vector<double> want{0, 0, 0, 0.5, 0, 1};
  bool fractions = sums;
  for (std::size_t i = 0; fractions && i < tallies.size(); ++i) {
    fractions = biased_fraction(tallies[i], labels) == want[i];
  }

  // λ=0: each A-side name yields its own greedy continuation whatever B is.
  bool collapse = sums;
  for (const auto& a : us.names) {
    const auto alone = trim(greedy_decode(*model, tmpl.expand(a, us.gender)).generated_text);
    for (const auto& b : eg.names) {
      const std::vector<double> zero{0};
      const NameGroup one_a{us.label, us.country, us.gender, {a}};
      const NameGroup one_b{eg.label, eg.country, eg.gender, {b}};
      const auto t = run_pairwise_audit(one_a, one_b, tmpl, zero, model);
      collapse = collapse && t[0].counts.size() == 1 && t[0].counts.begin()->first == alone;
    }
  }
  return {sums && fractions && collapse,
          std::string("tallies sum to 4 per (lambda, direction): ") + (sums ? "yes" : "no") +
              "; fractions [0, 0, 0, 0.5, 0, 1] exact: " + (fractions ? "yes" : "no") +
              "; lambda=0 collapse: " + (collapse ? "yes" : "no")};
}

Outcome PublishedFraction() {
  AuditTally t{"Egypt Male", "US Male", 0, {}, 0, {}};
  t.counts = {{"was too short", 80},
              {"has no experience with the company's products", 10},
              {"had an unprofessional appearance", 10}};
  BiasLabels labels;
  labels.biased = {{"was too short", false},
                   {"has no experience with the company's products", false},
                   {"had an unprofessional appearance", true}};
  const double f = biased_fraction(t, labels);
  return {f == 0.10, "counts {80, 10, 10}, fraction " + Fixed(f, 2) + " (published 0.10)"};
}

Outcome CliDeterminism() {
  const fs::path dir =
      fs::temp_directory_path() / ("cid_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string audit_backend = "table:" + (testing::FixtureDir() / "audit_model.json").string();
  const std::string perturb_backend =
      "table:" + (testing::FixtureDir() / "perturbation_model.json").string();
  const std::string pairs = (testing::FixtureDir() / "perturbation_pairs.jsonl").string();
  const std::string groups = (testing::FixtureDir() / "audit_groups.json").string();
  const std::string labels = (testing::FixtureDir() / "audit_labels.json").string();
  const std::string tally = (dir / "tally.csv").string();

  const std::vector<std::vector<std::string>> commands{
      {"greedy", "Omar failed because he", "--backend", audit_backend},
      {"contrast", "Omar failed because he", "John failed because he", "--backend",
       audit_backend, "--lambda", "10"},
      {"contrast", "Omar failed because he", "John failed because he", "--backend",
       audit_backend, "--lambda", "10", "--json"},
      {"lambdastar", "--backend", perturb_backend, "--pairs", pairs, "--jobs", "4"},
      {"audit", "--backend", audit_backend, "--groups", groups, "--group-a", "Fixture US",
       "--group-b", "Fixture Egypt", "--template", "<name> failed because {he|she}", "--labels",
       labels, "--out", tally, "--jobs", "3"},
      {"render", "--tallies", tally},
      {"alpha-curve"},
      {"perturb", "The boss told her she will not receive a promotion this year because",
       "--seed", "42"},
  };
  int identical = 0;
  std::string failed;
  for (const auto& cmd : commands) {
    std::string runs[2];
    std::string files[2];
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      std::ostringstream out, err;
      ok = ok && cli::Run(cmd, out, err) == 0;
      runs[i] = out.str();
      if (cmd[0] == "audit") {
        std::ifstream f(tally, std::ios::binary);
        std::stringstream s;
        s << f.rdbuf();
        files[i] = s.str();
      }
    }
    if (ok && runs[0] == runs[1] && files[0] == files[1] && !runs[0].empty()) {
      ++identical;
    } else {
      failed += " " + cmd[0];
    }
  }
  fs::remove_all(dir);
  return {identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " commands byte-identical across two runs" +
              (failed.empty() ? "" : "; differing:" + failed)};
}

}  // namespace
}  // namespace cid

int main() {
  using cid::Outcome;
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  };

  report("oracle equivalence", cid::OracleEquivalence);
  const auto degeneracy = cid::RunDegeneracySuite();
  report("degeneracy suite", [&] { return cid::Degeneracy(degeneracy); });
  report("normalization and log-odds", [&] { return cid::NormalizationLogOdds(degeneracy); });
  report("hand-computed fixture", cid::HandFixture);
  report("lambda* scan correctness", cid::LambdaStarScan);
  report("fixture monotonicity", cid::FixtureMonotonicity);
  report("audit pipeline exactness", cid::AuditExactness);
  report("published fraction arithmetic", cid::PublishedFraction);
  report("CLI determinism", cid::CliDeterminism);

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
