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

#include "cid/remote_backend.h"

#include <cmath>

#include "cid/error.h"
#include "httplib.h"

namespace cid {
namespace {

bool IsRetriableStatus(int status) { return status == 429 || status >= 500; }

[[noreturn]] void ThrowForStatus(const std::string& path, int status,
                                 const std::string& body) {
  if (status == 413) {
    throw ContextOverflowError(path + ": context overflow (413): " + body);
  }
  throw BackendError(path + " returned HTTP " + std::to_string(status) + ": " + body,
                     status, IsRetriableStatus(status));
}

nlohmann::json ParseBody(const std::string& path, const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(path + ": malformed JSON response: " + e.what(), 200, false);
  }
}

// Releases a semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

}  // namespace

RemoteBackend::RemoteBackend(RemoteOptions options)
    : options_(std::move(options)),
      in_flight_(std::max(1, options_.max_in_flight)) {
  if (options_.base_url.empty()) throw InvalidInputError("remote backend needs a URL");
  if (options_.top_n && *options_.top_n < 1) throw InvalidInputError("top_n must be >= 1");

  const auto listing = Get("/v1/models");
  const nlohmann::json* chosen = nullptr;
  try {
    for (const auto& m : listing.at("models")) {
      if (options_.model_id.empty() || m.at("id").get<std::string>() == options_.model_id) {
        chosen = &m;
        break;
      }
    }
    if (chosen == nullptr) {
      throw InvalidInputError("server at " + options_.base_url + " does not serve model '" +
                              options_.model_id + "'");
    }
    descriptor_.kind = BackendKind::kRemote;
    descriptor_.model_id = chosen->at("id").get<std::string>();
    descriptor_.architecture = ParseArchitecture(chosen->at("architecture").get<std::string>());
    descriptor_.vocab_size = chosen->at("vocab_size").get<std::size_t>();
    descriptor_.context_limit = chosen->at("context_limit").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("/v1/models: unexpected response: ") + e.what(), 200, false);
  }
  options_.model_id = descriptor_.model_id;

  if (chosen->contains("eos_id")) {
    descriptor_.eos_token = chosen->at("eos_id").get<TokenId>();
  } else {
    // The listing does not carry the EOS id; every next_logprobs response
    // does, so probe once with the context [0].
    nlohmann::json body = {{"model", options_.model_id},
                           {"input_ids", nlohmann::json::array({0})},
                           {"generated_ids", nlohmann::json::array()},
                           {"top_n", 1}};
    descriptor_.eos_token = Post("/v1/next_logprobs", body).at("eos_id").get<TokenId>();
  }
  descriptor_.Validate();
}

RemoteBackend::~RemoteBackend() = default;

nlohmann::json RemoteBackend::Get(const std::string& path) const {
  SlotGuard slot(in_flight_);
  httplib::Client client(options_.base_url);
  const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  auto res = client.Get(path);
  if (!res) {
    throw BackendError("GET " + path + " failed: " + httplib::to_string(res.error()), 0, true);
  }
  if (res->status / 100 != 2) ThrowForStatus(path, res->status, res->body);
  return ParseBody(path, res->body);
}

nlohmann::json RemoteBackend::Post(const std::string& path, const nlohmann::json& body) const {
  SlotGuard slot(in_flight_);
  httplib::Client client(options_.base_url);
  const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw BackendError("POST " + path + " failed: " + httplib::to_string(res.error()), 0, true);
  }
  if (res->status / 100 != 2) ThrowForStatus(path, res->status, res->body);
  return ParseBody(path, res->body);
}

std::vector<TokenId> RemoteBackend::tokenize(std::string_view text) const {
  const auto res = Post("/v1/tokenize", {{"model", options_.model_id}, {"text", text}});
  try {
    auto ids = res.at("token_ids").get<std::vector<TokenId>>();
    if (descriptor_.context_limit > 0 && ids.size() > descriptor_.context_limit) {
      throw ContextOverflowError(ids.size(), descriptor_.context_limit);
    }
    return ids;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("/v1/tokenize: unexpected response: ") + e.what(), 200, false);
  }
}

std::string RemoteBackend::detokenize(std::span<const TokenId> tokens) const {
  const auto res = Post("/v1/detokenize",
                        {{"model", options_.model_id},
                         {"token_ids", std::vector<TokenId>(tokens.begin(), tokens.end())}});
  try {
    return res.at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("/v1/detokenize: unexpected response: ") + e.what(), 200,
                       false);
  }
}

ProbDist RemoteBackend::next_token_distribution(const ContextQuery& query) const {
  if (query.size() > descriptor_.context_limit) {
    throw ContextOverflowError(query.size(), descriptor_.context_limit);
  }
  nlohmann::json body = {{"model", options_.model_id},
                         {"input_ids", query.input_tokens},
                         {"generated_ids", query.generated_tokens},
                         {"top_n", nullptr}};
  if (options_.top_n) body["top_n"] = *options_.top_n;
  return ParseLogprobs(Post("/v1/next_logprobs", body));
}

ProbDist RemoteBackend::ParseLogprobs(const nlohmann::json& response) const {
  try {
    const auto vocab = response.at("vocab_size").get<std::size_t>();
    if (vocab != descriptor_.vocab_size) throw VocabMismatchError(descriptor_.vocab_size, vocab);
    const auto& logprobs = response.at("logprobs");
    if (logprobs.empty() || !logprobs.front().is_array()) {
      auto dense = logprobs.get<std::vector<double>>();
      if (dense.size() != vocab) throw VocabMismatchError(vocab, dense.size());
      ProbDist dist = ProbDist::FromLogProbs(dense);
      // The server guarantees logsumexp = 0 within 1e-4; fold the residual in.
      const double sum = dist.Sum();
      if (std::abs(sum - 1.0) > 1e-3) {
        throw BackendError("/v1/next_logprobs: dense probabilities sum to " +
                               std::to_string(sum),
                           200, false);
      }
      std::vector<double> probs(dist.probs().begin(), dist.probs().end());
      for (double& p : probs) p /= sum;
      return ProbDist(std::move(probs));
    }
    std::vector<std::pair<TokenId, double>> sparse;
    sparse.reserve(logprobs.size());
    for (const auto& pair : logprobs) {
      sparse.emplace_back(pair.at(0).get<TokenId>(), std::exp(pair.at(1).get<double>()));
    }
    return ProbDist::FromSparse(vocab, sparse);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("/v1/next_logprobs: unexpected response: ") + e.what(), 200,
                       false);
  }
}

}  // namespace cid
