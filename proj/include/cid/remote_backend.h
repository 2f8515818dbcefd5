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

#ifndef CID_REMOTE_BACKEND_H_
#define CID_REMOTE_BACKEND_H_

#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include "cid/backend.h"
#include "json.hpp"

namespace cid {

struct RemoteOptions {
  // Scheme, host and port, e.g. "http://127.0.0.1:8000".
  std::string base_url;
  // Empty selects the first model the server advertises.
  std::string model_id;
  // Request sparse [[id, logprob], ...] responses of this width. Must be at
  // least the engine's top-K for the transform to see exact probabilities.
  std::optional<int> top_n;
  int max_in_flight = 4;
  double timeout_seconds = 120.0;
};

// Client for the logit-service wire protocol:
//
//   GET  /v1/models         -> {"models": [{"id", "architecture",
//                                            "vocab_size", "context_limit",
//                                            "eos_id"?}]}
//   POST /v1/tokenize       {"model", "text"} -> {"token_ids": [int]}
//   POST /v1/detokenize     {"model", "token_ids"} -> {"text": str}
//   POST /v1/next_logprobs  {"model", "input_ids", "generated_ids", "top_n"}
//                           -> {"logprobs": [float] | [[int, float]],
//                               "vocab_size": int, "eos_id": int}
//
// Non-2xx responses become BackendError carrying the HTTP status; 413 becomes
// ContextOverflowError. Transport failures carry status 0 and are retriable.
class RemoteBackend final : public Backend {
 public:
  // Contacts the server to resolve the model descriptor.
  explicit RemoteBackend(RemoteOptions options);
  ~RemoteBackend() override;

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> tokens) const override;
  ProbDist next_token_distribution(const ContextQuery& query) const override;

  const RemoteOptions& options() const { return options_; }

 private:
  nlohmann::json Get(const std::string& path) const;
  nlohmann::json Post(const std::string& path, const nlohmann::json& body) const;
  ProbDist ParseLogprobs(const nlohmann::json& response) const;

  RemoteOptions options_;
  BackendDescriptor descriptor_;
  mutable std::counting_semaphore<> in_flight_;
};

}  // namespace cid

#endif  // CID_REMOTE_BACKEND_H_
