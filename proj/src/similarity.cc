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

#include "cid/similarity.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "cid/error.h"
#include "httplib.h"
#include "json.hpp"

namespace cid {
namespace {

std::map<std::string, double> BagOfWords(std::string_view text) {
  std::map<std::string, double> counts;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) counts[word] += 1.0;
    word.clear();
  };
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  return counts;
}

double Cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw VocabMismatchError(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return na == nb ? 1.0 : 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double TokenOverlapSimilarity::similarity(std::string_view a, std::string_view b) const {
  const auto bag_a = BagOfWords(a);
  const auto bag_b = BagOfWords(b);
  if (bag_a.empty() || bag_b.empty()) return bag_a.empty() && bag_b.empty() ? 1.0 : 0.0;

  // Iterating in key order makes the sums, and so the score, order-free.
  double dot = 0.0;
  for (const auto& [word, count] : bag_a) {
    auto it = bag_b.find(word);
    if (it != bag_b.end()) dot += count * it->second;
  }
  auto norm = [](const std::map<std::string, double>& bag) {
    double s = 0.0;
    for (const auto& [_, c] : bag) s += c * c;
    return std::sqrt(s);
  };
  const double na = norm(bag_a);
  const double nb = norm(bag_b);
  // Multiply in a fixed order for exact symmetry.
  const double denom = na < nb ? na * nb : nb * na;
  return std::clamp(dot / denom, -1.0, 1.0);
}

EmbeddingServiceSimilarity::EmbeddingServiceSimilarity(EmbeddingOptions options)
    : options_(std::move(options)), in_flight_(std::max(1, options_.max_in_flight)) {
  if (options_.base_url.empty()) throw InvalidInputError("embedding service needs a URL");
}

double EmbeddingServiceSimilarity::similarity(std::string_view a, std::string_view b) const {
  if (a == b) return 1.0;
  const std::string first(std::min(a, b));
  const std::string second(std::max(a, b));
  const nlohmann::json body = {{"model", options_.model}, {"texts", {first, second}}};

  in_flight_.acquire();
  httplib::Client client(options_.base_url);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options_.timeout_seconds)));
  auto res = client.Post("/v1/embed", body.dump(), "application/json");
  in_flight_.release();

  if (!res) {
    throw BackendError("POST /v1/embed failed: " + httplib::to_string(res.error()), 0, true);
  }
  if (res->status / 100 != 2) {
    throw BackendError("/v1/embed returned HTTP " + std::to_string(res->status), res->status,
                       res->status == 429 || res->status >= 500);
  }
  try {
    const auto doc = nlohmann::json::parse(res->body);
    const auto& embeddings = doc.at("embeddings");
    if (embeddings.size() != 2) throw BackendError("/v1/embed: expected 2 embeddings", 200, false);
    return Cosine(embeddings.at(0).get<std::vector<double>>(),
                  embeddings.at(1).get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("/v1/embed: unexpected response: ") + e.what(), 200, false);
  }
}

double similarity(std::string_view a, std::string_view b, const SimilarityProvider& provider) {
  return provider.similarity(a, b);
}

std::unique_ptr<SimilarityProvider> MakeSimilarityProvider(std::string_view spec,
                                                           const std::string& embedding_model) {
  if (spec == "token_overlap") return std::make_unique<TokenOverlapSimilarity>();
  constexpr std::string_view kPrefix = "embedding:";
  if (spec.substr(0, kPrefix.size()) == kPrefix) {
    return std::make_unique<EmbeddingServiceSimilarity>(
        EmbeddingOptions{std::string(spec.substr(kPrefix.size())), embedding_model});
  }
  throw InvalidInputError("unknown similarity provider '" + std::string(spec) +
                          "' (expected token_overlap or embedding:URL)");
}

}  // namespace cid
