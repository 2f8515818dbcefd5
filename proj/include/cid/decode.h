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

#ifndef CID_DECODE_H_
#define CID_DECODE_H_

#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cid/backend.h"
#include "cid/distribution.h"
#include "cid/error.h"
#include "json.hpp"

namespace cid {

struct DecodeLimits {
  int max_new_tokens = 16;
  bool stop_on_eos = true;

  void Validate() const;
};

// A contrastive generation request: continue `input_text` (x) while
// contrasting against `contrast_text` (x').
struct DecodeJob {
  std::string input_text;
  std::string contrast_text;
  CidParams params;
  DecodeLimits limits;
};

struct StepTrace {
  int step_index = 0;
  TokenId chosen = 0;
  double p_chosen = 0.0;
  double p_contrast_chosen = 0.0;
  double delta_chosen = 0.0;
  double p_tilde_chosen = 0.0;
  // log Z of the transform at this step.
  double log_normalizer = 0.0;

  friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

enum class StopReason { kEos, kMaxTokens };

std::string_view to_string(StopReason reason);
StopReason ParseStopReason(std::string_view text);

// When generation ends on EOS, the EOS token is the last element of
// generated_tokens (and of the trace) but is not rendered into
// generated_text.
struct DecodeResult {
  std::vector<TokenId> generated_tokens;
  std::string generated_text;
  std::vector<StepTrace> trace;
  StopReason stop_reason = StopReason::kMaxTokens;

  friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

// Full view of one decode step, for callers that need more than the trace.
struct StepView {
  int step_index;
  const ProbDist& p;
  const ProbDist& p_contrast;
  const CidOutput& transformed;
  TokenId chosen;
};
using StepObserver = std::function<void(const StepView&)>;

// A backend call failed. Carries the step at which it happened (-1 while
// tokenizing the inputs), the output produced so far, and the original
// exception.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, int step, DecodeResult partial,
              std::exception_ptr cause)
      : Error(what), step_(step), partial_(std::move(partial)), cause_(std::move(cause)) {}

  int step() const { return step_; }
  const DecodeResult& partial() const { return partial_; }
  const std::exception_ptr& cause() const { return cause_; }

 private:
  int step_;
  DecodeResult partial_;
  std::exception_ptr cause_;
};

// Plain top-K greedy continuation of x. Only queries the x context.
DecodeResult greedy_decode(const Backend& backend, std::string_view input_text,
                           const DecodeLimits& limits = {}, int top_k = 50,
                           const StepObserver& observer = {});

// At each step i:
//   p  = backend(x,  gen),  p' = backend(x', gen)
//   p~ = apply_cid(p, p', params),  chosen = argmax p~,  gen <- gen ++ chosen
// The same generated suffix is appended to both contexts.
DecodeResult cid_decode(const Backend& backend, const DecodeJob& job,
                        const StepObserver& observer = {});

// CID(x; x', λ) and CID(x'; x, λ), computed against one shared cache. With
// use_cache=false the backend is queried directly.
std::pair<DecodeResult, DecodeResult> contrast_pair(
    std::shared_ptr<const Backend> backend, const std::string& x,
    const std::string& x_contrast, const CidParams& params,
    const DecodeLimits& limits = {}, bool use_cache = true);

// {"generated_tokens": [int], "generated_text": str,
//  "stop_reason": "eos"|"max_tokens", "trace": [{"step_index", "chosen",
//  "p_chosen", "p_contrast_chosen", "delta_chosen", "p_tilde_chosen",
//  "log_normalizer"}]}
nlohmann::json to_json(const DecodeResult& result);
DecodeResult decode_result_from_json(const nlohmann::json& doc);

}  // namespace cid

#endif  // CID_DECODE_H_
