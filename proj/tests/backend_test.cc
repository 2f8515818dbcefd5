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

#include <random>
#include <thread>

#include "cid/backend.h"
#include "cid/cached_backend.h"
#include "cid/error.h"
#include "cid/table_model.h"
#include "test_util.h"

namespace cid {
namespace {

TableModel SmallModel() {
  // vocab: 0 "</s>", 1 "a", 2 "b", 3 "ab"
  TableModel::Entries e;
  e[{}] = ProbDist({0.1, 0.4, 0.4, 0.1});
  e[{1}] = ProbDist({0.0, 0.0, 1.0, 0.0});
  e[{1, 2}] = ProbDist({1.0, 0.0, 0.0, 0.0});
  return TableModel({"</s>", "a", "b", "ab"}, 0, 2, std::move(e), "small", 8);
}

TEST_CASE("descriptor validation") {
  BackendDescriptor d;
  d.vocab_size = 0;
  CHECK_THROWS_AS(d.Validate(), InvalidInputError);
  d.vocab_size = 4;
  d.eos_token = 4;
  CHECK_THROWS_AS(d.Validate(), InvalidInputError);
  d.eos_token = 3;
  CHECK_NOTHROW(d.Validate());
  CHECK(ParseArchitecture("encoder_decoder") == Architecture::kEncoderDecoder);
  CHECK(to_string(Architecture::kDecoderOnly) == "decoder_only");
  CHECK_THROWS_AS(ParseArchitecture("rnn"), InvalidInputError);
}

TEST_CASE("table tokenizer takes the longest piece") {
  const auto m = SmallModel();
  CHECK(m.tokenize("ab") == std::vector<TokenId>{3});
  CHECK(m.tokenize("aab") == std::vector<TokenId>{1, 3});
  CHECK(m.tokenize("ba") == std::vector<TokenId>{2, 1});
  CHECK(m.tokenize("").empty());
  // The EOS string is never produced by the tokenizer.
  CHECK_THROWS_AS(m.tokenize("</s>"), InvalidInputError);
  CHECK_THROWS_AS(m.tokenize("abc"), InvalidInputError);
  CHECK_THROWS_AS(m.tokenize("aaaaaaaaa"), ContextOverflowError);
  const std::vector<TokenId> ids{1, 3, 2};
  CHECK(m.detokenize(ids) == "aabb");
  const std::vector<TokenId> bad{7};
  CHECK_THROWS_AS(m.detokenize(bad), InvalidInputError);
  CHECK(m.id_of("</s>") == 0);
  CHECK(m.id_of("ab") == 3);
  CHECK_THROWS_AS(m.id_of("zz"), InvalidInputError);
}

TEST_CASE("table lookup uses the longest stored suffix") {
  const auto m = SmallModel();
  CHECK(m.next_token_distribution({{1}, {}}) == ProbDist({0.0, 0.0, 1.0, 0.0}));
  CHECK(m.next_token_distribution({{1}, {2}}) == ProbDist({1.0, 0.0, 0.0, 0.0}));
  CHECK(m.next_token_distribution({{2, 2, 1}, {2}}) == ProbDist({1.0, 0.0, 0.0, 0.0}));
  // [2, 2] has no entry; neither does [2]; the empty key matches.
  CHECK(m.next_token_distribution({{2}, {2}}) == ProbDist({0.1, 0.4, 0.4, 0.1}));
  CHECK_THROWS_AS(m.next_token_distribution({std::vector<TokenId>(9, 1), {}}),
                  ContextOverflowError);
}

TEST_CASE("table without an empty key falls back to uniform") {
  TableModel::Entries e;
  e[{1}] = ProbDist({0.0, 1.0});
  const TableModel m({"</s>", "x"}, 0, 1, std::move(e));
  CHECK(m.next_token_distribution({{0}, {}}) == ProbDist::Uniform(2));
}

TEST_CASE("table construction rejects bad entries") {
  auto make = [](TableModel::Entries e, int order = 2) {
    return TableModel({"</s>", "a"}, 0, order, std::move(e));
  };
  CHECK_THROWS_AS(make({{{1, 1, 1}, ProbDist({0.5, 0.5})}}), InvalidInputError);
  CHECK_THROWS_AS(make({{{5}, ProbDist({0.5, 0.5})}}), InvalidInputError);
  CHECK_THROWS_AS(make({{{1}, ProbDist({0.5, 0.4})}}), InvalidInputError);
  CHECK_THROWS_AS(make({{{1}, ProbDist({1.0})}}), VocabMismatchError);
  CHECK_THROWS_AS(make({}, -1), InvalidInputError);
  CHECK_THROWS_AS(TableModel({"</s>", "a", "a"}, 0, 1, {}), InvalidInputError);
}

TEST_CASE("table JSON round trip and loading") {
  const auto m = SmallModel();
  const auto back = TableModel::FromJson(m.ToJson());
  CHECK(back.vocab() == m.vocab());
  CHECK(back.entries() == m.entries());
  CHECK(back.order() == m.order());
  CHECK(back.descriptor().model_id == "small");
  CHECK(back.descriptor().context_limit == 8);
  CHECK_THROWS_AS(TableModel::FromJson({{"vocab", {"a"}}}), InvalidInputError);
  CHECK_THROWS_AS(TableModel::FromJson({{"vocab", {"</s>", "a"}},
                                        {"eos", 0},
                                        {"order", 1},
                                        {"entries", {{"1,x", {0.5, 0.5}}}}}),
                  InvalidInputError);
  CHECK_THROWS_AS(TableModel::Load("/nonexistent/model.json"), InvalidInputError);

  const auto fixture = TableModel::Load(testing::FixtureDir() / "audit_model.json");
  CHECK(fixture.descriptor().eos_token == 0);
  CHECK(fixture.tokenize("John failed because he").size() == 4);
}

TEST_CASE("character-level table") {
  TableModel::Entries e;
  e[{}] = ProbDist::Uniform(96);
  const auto m = TableModel::CharacterLevel(3, std::move(e));
  CHECK(m.vocab().size() == 96);
  CHECK(m.descriptor().eos_token == 95);
  const auto ids = m.tokenize("Hi there!");
  CHECK(ids.size() == 9);
  CHECK(m.detokenize(ids) == "Hi there!");
}

TEST_CASE("random table models are normalized everywhere") {
  std::mt19937_64 rng(21);
  const auto m = testing::RandomTableModel(rng, 6, 3, 40);
  for (int i = 0; i < 100; ++i) {
    const auto text = testing::RandomText(rng, 6, 0, 8);
    const auto ids = m->tokenize(text);
    CHECK(m->detokenize(ids) == text);
    const auto d = m->next_token_distribution({ids, {}});
    CHECK(d.vocab_size() == 7);
    CHECK(d.IsNormalized(1e-9));
  }
}

TEST_CASE("cache returns the inner result and counts hits") {
  auto inner = std::make_shared<TableModel>(SmallModel());
  auto counting = std::make_shared<testing::CountingBackend>(inner);
  CachedBackend cache(counting, 2);
  const ContextQuery q1{{1}, {}};
  const ContextQuery q2{{1}, {2}};
  const ContextQuery q3{{2}, {}};
  CHECK(cache.next_token_distribution(q1) == inner->next_token_distribution(q1));
  CHECK(cache.next_token_distribution(q1) == inner->next_token_distribution(q1));
  CHECK(counting->calls() == 1);
  cache.next_token_distribution(q2);
  cache.next_token_distribution(q1);  // q1 is now most recent
  cache.next_token_distribution(q3);  // evicts q2
  CHECK(cache.stats().evictions == 1);
  cache.next_token_distribution(q1);
  CHECK(counting->calls() == 3);
  cache.next_token_distribution(q2);
  CHECK(counting->calls() == 4);
  const auto s = cache.stats();
  CHECK(s.hits == 3);
  CHECK(s.misses == 4);
  CHECK(cache.descriptor().model_id == "small");
  CHECK(cache.tokenize("ab") == std::vector<TokenId>{3});
}

TEST_CASE("cache distinguishes input and generated split") {
  auto inner = std::make_shared<TableModel>(SmallModel());
  auto counting = std::make_shared<testing::CountingBackend>(inner);
  auto cache = cached(counting);
  cache->next_token_distribution({{1, 2}, {}});
  cache->next_token_distribution({{1}, {2}});
  CHECK(counting->calls() == 2);
  CHECK(cache->capacity() == CachedBackend::kDefaultCapacity);
}

TEST_CASE("cache rejects bad construction and is safe across threads") {
  CHECK_THROWS_AS(CachedBackend(nullptr), InvalidInputError);
  auto inner = std::make_shared<TableModel>(SmallModel());
  CHECK_THROWS_AS(CachedBackend(inner, 0), InvalidInputError);

  auto cache = cached(inner, 3);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        const ContextQuery q{{static_cast<TokenId>(1 + (i + t) % 3)}, {}};
        CHECK(cache->next_token_distribution(q) == inner->next_token_distribution(q));
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto s = cache->stats();
  CHECK(s.hits + s.misses == 800);
}

}  // namespace
}  // namespace cid
