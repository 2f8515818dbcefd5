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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "cid/distribution.h"
#include "cid/error.h"
#include "test_util.h"

namespace cid {
namespace {

using testing::NaiveCid;
using testing::RandomProbs;

TEST_CASE("worked three-token example") {
  const ProbDist p({0.5, 0.3, 0.2});
  const ProbDist q({0.2, 0.3, 0.5});
  const auto out = apply_cid(p, q, {.lambda = 1.0, .top_k = 50});
  // Unnormalized weights 0.5e^0.3, 0.3, 0.2e^-0.3.
  const double u[3] = {0.5 * std::exp(0.3), 0.3, 0.2 * std::exp(-0.3)};
  const double z = u[0] + u[1] + u[2];
  CHECK(std::abs(z - 1.123093) <= 1e-6);
  const std::vector<double> want{0.600956, 0.267119, 0.131925};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(out.probs()[i] - u[i] / z) <= 1e-12);
    CHECK(std::abs(out.probs()[i] - want[i]) <= 1e-6);
  }
  CHECK(out.IsNormalized(1e-12));
}

TEST_CASE("worked example with K=2 drops the third token") {
  const ProbDist p({0.5, 0.3, 0.2});
  const ProbDist q({0.2, 0.3, 0.5});
  const auto out = apply_cid_detailed(p, q, {.lambda = 1.0, .top_k = 2});
  CHECK(std::abs(out.dist[0] - 0.692285) <= 1e-6);
  CHECK(std::abs(out.dist[1] - 0.307715) <= 1e-6);
  CHECK(out.dist[2] == 0.0);
  CHECK(out.support == std::vector<TokenId>{0, 1});
}

TEST_CASE("alpha values") {
  CHECK(std::abs(alpha(1.0, 5.0) - 148.413159) <= 1e-6);
  for (const double lambda : {0.0, 2.0, 5.0, 10.0}) CHECK(alpha(0.0, lambda) == 1.0);
  CHECK(alpha(-1.0, 0.0) == 1.0);
  CHECK(alpha(-0.5, 10.0) < 1.0);
  CHECK(alpha(0.5, 10.0) > 1.0);
}

TEST_CASE("delta is the elementwise difference") {
  const ProbDist p({0.5, 0.3, 0.2});
  const ProbDist q({0.2, 0.3, 0.5});
  const auto d = delta(p, q);
  CHECK(d[0] == doctest::Approx(0.3));
  CHECK(d[1] == 0.0);
  CHECK(d[2] == doctest::Approx(-0.3));
  const auto r = delta(q, p);
  for (TokenId i = 0; i < 3; ++i) CHECK(r[i] == -d[i]);
}

TEST_CASE("top_k_mask breaks ties toward the lower id") {
  const ProbDist p({0.25, 0.25, 0.25, 0.25});
  CHECK(top_k_mask(p, 2) == std::vector<TokenId>{0, 1});
  const ProbDist r({0.1, 0.3, 0.3, 0.3});
  CHECK(top_k_mask(r, 2) == std::vector<TokenId>{1, 2});
  CHECK(top_k_mask(r, 10) == std::vector<TokenId>{0, 1, 2, 3});
}

TEST_CASE("argmax returns the lowest id among maxima") {
  CHECK(argmax_token(ProbDist({0.2, 0.4, 0.4})) == 1);
  CHECK(argmax_token(ProbDist({1.0})) == 0);
  CHECK_THROWS_AS(argmax_token(ProbDist()), InvalidInputError);
}

TEST_CASE("zero-probability tokens never enter the support") {
  const ProbDist p({0.0, 0.6, 0.4, 0.0});
  const ProbDist q({1.0, 0.0, 0.0, 0.0});
  const auto out = apply_cid_detailed(p, q, {.lambda = 100.0, .top_k = 4});
  CHECK(out.support == std::vector<TokenId>{1, 2});
  CHECK(out.dist[0] == 0.0);
  CHECK(out.dist[3] == 0.0);
}

TEST_CASE("input validation") {
  const ProbDist p({0.5, 0.5});
  CHECK_THROWS_AS(apply_cid(p, ProbDist({1.0, 0.0, 0.0}), {}), VocabMismatchError);
  CHECK_THROWS_AS(delta(p, ProbDist({1.0})), VocabMismatchError);
  CHECK_THROWS_AS(apply_cid(p, p, {.lambda = -1.0}), InvalidInputError);
  CHECK_THROWS_AS(apply_cid(p, p, {.lambda = std::nan("")}), InvalidInputError);
  CHECK_THROWS_AS(
      apply_cid(p, p, {.lambda = std::numeric_limits<double>::infinity()}),
      InvalidInputError);
  CHECK_THROWS_AS(apply_cid(p, p, {.lambda = 1.0, .top_k = 0}), InvalidInputError);
  CHECK_THROWS_AS(ProbDist({0.5, -0.1}), InvalidInputError);
  CHECK_THROWS_AS(ProbDist({0.5, std::nan("")}), InvalidInputError);
  CHECK_THROWS_AS(apply_cid(ProbDist({0.0, 0.0}), p, {}), EmptySupportError);
  CHECK_THROWS_AS(ProbDist::Uniform(0), InvalidInputError);
}

TEST_CASE("sparse and log-prob constructors") {
  const std::vector<std::pair<TokenId, double>> entries{{2, 0.75}, {0, 0.25}};
  const auto d = ProbDist::FromSparse(4, entries);
  CHECK(d == ProbDist({0.25, 0.0, 0.75, 0.0}));
  const std::vector<std::pair<TokenId, double>> bad{{4, 1.0}};
  CHECK_THROWS_AS(ProbDist::FromSparse(4, bad), InvalidInputError);
  const std::vector<double> lp{0.0, -std::numeric_limits<double>::infinity()};
  CHECK(ProbDist::FromLogProbs(lp) == ProbDist({1.0, 0.0}));
  CHECK(ProbDist::Uniform(4).IsNormalized(1e-15));
}

// Properties over random inputs.

TEST_CASE("agrees with the linear-space oracle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> vocab(1, 64);
  std::uniform_real_distribution<double> lam(0.0, 100.0);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t v = vocab(rng);
    const auto p = RandomProbs(rng, v, 0.2);
    const auto q = RandomProbs(rng, v, 0.2);
    const int k = std::uniform_int_distribution<int>(1, static_cast<int>(v))(rng);
    const double l = lam(rng);
    const auto got = apply_cid(ProbDist(p), ProbDist(q), {.lambda = l, .top_k = k});
    const auto want = NaiveCid(p, q, l, k);
    for (std::size_t i = 0; i < v; ++i) REQUIRE(std::abs(got.probs()[i] - want[i]) <= 1e-12);
  }
}

TEST_CASE("output is normalized and supported on at most K tokens") {
  std::mt19937_64 rng(12);
  for (int c = 0; c < 500; ++c) {
    const std::size_t v = 2 + rng() % 60;
    const ProbDist p(RandomProbs(rng, v, 0.3));
    const ProbDist q(RandomProbs(rng, v, 0.3));
    const int k = 1 + static_cast<int>(rng() % v);
    const auto out = apply_cid_detailed(p, q, {.lambda = double(rng() % 200), .top_k = k});
    CHECK(std::abs(out.dist.Sum() - 1.0) <= 1e-9);
    CHECK(out.support.size() <= static_cast<std::size_t>(k));
    CHECK(std::is_sorted(out.support.begin(), out.support.end()));
    std::size_t nonzero = 0;
    for (const double x : out.dist.probs()) nonzero += x > 0.0;
    CHECK(nonzero <= out.support.size());
  }
}

TEST_CASE("lambda zero and identical inputs give renormalized top-K of p") {
  std::mt19937_64 rng(13);
  for (int c = 0; c < 300; ++c) {
    const std::size_t v = 1 + rng() % 40;
    const auto pv = RandomProbs(rng, v, 0.2);
    const ProbDist p(pv);
    const ProbDist q(RandomProbs(rng, v, 0.2));
    const int k = 1 + static_cast<int>(rng() % v);
    const auto want = NaiveCid(pv, pv, 0.0, k);
    const auto a = apply_cid(p, q, {.lambda = 0.0, .top_k = k});
    const auto b = apply_cid(p, p, {.lambda = 37.5, .top_k = k});
    for (std::size_t i = 0; i < v; ++i) {
      CHECK(std::abs(a.probs()[i] - want[i]) <= 1e-12);
      CHECK(std::abs(b.probs()[i] - want[i]) <= 1e-12);
    }
    CHECK(argmax_token(a) == argmax_token(p));
  }
}

TEST_CASE("log-odds identity and direction of change") {
  std::mt19937_64 rng(14);
  for (int c = 0; c < 300; ++c) {
    const std::size_t v = 2 + rng() % 30;
    const ProbDist p(RandomProbs(rng, v));
    const ProbDist q(RandomProbs(rng, v));
    const double l = double(rng() % 1000) / 10.0;
    const auto out = apply_cid_detailed(p, q, {.lambda = l, .top_k = static_cast<int>(v)});
    const auto d = delta(p, q);
    for (const TokenId a : out.support) {
      for (const TokenId b : out.support) {
        const double lhs = std::log(out.dist[a] / out.dist[b]);
        const double rhs = std::log(p[a] / p[b]) + l * (d[a] - d[b]);
        CHECK(std::abs(lhs - rhs) <= 1e-9);
        if (l > 0.0 && d[a] > d[b] + 1e-6) CHECK(out.dist[a] / out.dist[b] > p[a] / p[b]);
      }
    }
    // log p~(w) = log p(w) + λΔ(w) − log Z
    for (const TokenId w : out.support) {
      CHECK(std::abs(std::log(out.dist[w]) -
                     (std::log(p[w]) + l * d[w] - out.log_normalizer)) <= 1e-9);
    }
  }
}

TEST_CASE("swapping the inputs at lambda zero changes nothing but p") {
  const ProbDist p({0.5, 0.3, 0.2});
  const ProbDist q({0.2, 0.3, 0.5});
  CHECK(apply_cid(p, q, {.lambda = 0.0}) == apply_cid(p, p, {.lambda = 0.0}));
  CHECK(apply_cid(q, p, {.lambda = 0.0}) == apply_cid(q, q, {.lambda = 0.0}));
}

}  // namespace
}  // namespace cid
