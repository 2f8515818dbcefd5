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

#include "cid/decode.h"

#include <cassert>

#include "cid/cached_backend.h"

namespace cid {

void DecodeLimits::Validate() const {
  if (max_new_tokens < 1) throw InvalidInputError("max_new_tokens must be >= 1");
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kEos ? "eos" : "max_tokens";
}

StopReason ParseStopReason(std::string_view text) {
  if (text == "eos") return StopReason::kEos;
  if (text == "max_tokens") return StopReason::kMaxTokens;
  throw InvalidInputError("unknown stop reason '" + std::string(text) + "'");
}

namespace {

std::vector<TokenId> TokenizeOrThrow(const Backend& backend, std::string_view text) {
  try {
    return backend.tokenize(text);
  } catch (const std::exception& e) {
    throw DecodeError(std::string("tokenization failed: ") + e.what(), -1, {},
                      std::current_exception());
  }
}

void RenderText(const Backend& backend, DecodeResult& result) {
  std::span<const TokenId> visible = result.generated_tokens;
  if (result.stop_reason == StopReason::kEos && !visible.empty()) {
    visible = visible.first(visible.size() - 1);
  }
  result.generated_text = backend.detokenize(visible);
}

// Shared loop. When `contrast_tokens` is null the step is plain greedy: the
// x distribution doubles as its own contrast, so Δ ≡ 0 and λ is irrelevant.
DecodeResult RunLoop(const Backend& backend, const std::vector<TokenId>& input_tokens,
                     const std::vector<TokenId>* contrast_tokens, const CidParams& params,
                     const DecodeLimits& limits, const StepObserver& observer) {
  params.Validate();
  limits.Validate();
  const TokenId eos = backend.descriptor().eos_token;

  DecodeResult result;
  ContextQuery query{input_tokens, {}};
  ContextQuery contrast_query;
  if (contrast_tokens != nullptr) contrast_query.input_tokens = *contrast_tokens;

  for (int step = 0; step < limits.max_new_tokens; ++step) {
    ProbDist p;
    ProbDist p_contrast;
    try {
      p = backend.next_token_distribution(query);
      if (contrast_tokens != nullptr) {
        assert(contrast_query.generated_tokens == query.generated_tokens);
        p_contrast = backend.next_token_distribution(contrast_query);
      }
    } catch (const std::exception& e) {
      RenderText(backend, result);
      throw DecodeError("backend failed at step " + std::to_string(step) + ": " + e.what(),
                        step, std::move(result), std::current_exception());
    }
    const ProbDist& contrast = contrast_tokens != nullptr ? p_contrast : p;

    CidOutput out;
    try {
      out = apply_cid_detailed(p, contrast, params);
    } catch (const EmptySupportError&) {
      // Nothing left to choose from; report what we have.
      result.stop_reason = StopReason::kMaxTokens;
      break;
    }
    const TokenId chosen = argmax_token(out.dist);
    if (observer) observer(StepView{step, p, contrast, out, chosen});

    result.trace.push_back(StepTrace{step, chosen, p[chosen], contrast[chosen],
                                     p[chosen] - contrast[chosen], out.dist[chosen],
                                     out.log_normalizer});
    result.generated_tokens.push_back(chosen);
    if (limits.stop_on_eos && chosen == eos) {
      result.stop_reason = StopReason::kEos;
      break;
    }
    query.generated_tokens.push_back(chosen);
    contrast_query.generated_tokens.push_back(chosen);
  }

  try {
    RenderText(backend, result);
  } catch (const std::exception& e) {
    const int step = static_cast<int>(result.generated_tokens.size());
    throw DecodeError(std::string("detokenization failed: ") + e.what(), step,
                      std::move(result), std::current_exception());
  }
  return result;
}

}  // namespace

DecodeResult greedy_decode(const Backend& backend, std::string_view input_text,
                           const DecodeLimits& limits, int top_k,
                           const StepObserver& observer) {
  const auto tokens = TokenizeOrThrow(backend, input_text);
  return RunLoop(backend, tokens, nullptr, CidParams{0.0, top_k}, limits, observer);
}

DecodeResult cid_decode(const Backend& backend, const DecodeJob& job,
                        const StepObserver& observer) {
  const auto tokens = TokenizeOrThrow(backend, job.input_text);
  const auto contrast = TokenizeOrThrow(backend, job.contrast_text);
  return RunLoop(backend, tokens, &contrast, job.params, job.limits, observer);
}

std::pair<DecodeResult, DecodeResult> contrast_pair(std::shared_ptr<const Backend> backend,
                                                    const std::string& x,
                                                    const std::string& x_contrast,
                                                    const CidParams& params,
                                                    const DecodeLimits& limits,
                                                    bool use_cache) {
  if (!backend) throw InvalidInputError("contrast_pair needs a backend");
  std::shared_ptr<const Backend> shared = backend;
  if (use_cache && dynamic_cast<const CachedBackend*>(backend.get()) == nullptr) {
    shared = cached(std::move(backend));
  }
  DecodeResult forward = cid_decode(*shared, DecodeJob{x, x_contrast, params, limits});
  DecodeResult backward = cid_decode(*shared, DecodeJob{x_contrast, x, params, limits});
  return {std::move(forward), std::move(backward)};
}

nlohmann::json to_json(const DecodeResult& result) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : result.trace) {
    trace.push_back({{"step_index", t.step_index},
                     {"chosen", t.chosen},
                     {"p_chosen", t.p_chosen},
                     {"p_contrast_chosen", t.p_contrast_chosen},
                     {"delta_chosen", t.delta_chosen},
                     {"p_tilde_chosen", t.p_tilde_chosen},
                     {"log_normalizer", t.log_normalizer}});
  }
  return {{"generated_tokens", result.generated_tokens},
          {"generated_text", result.generated_text},
          {"stop_reason", std::string(to_string(result.stop_reason))},
          {"trace", std::move(trace)}};
}

DecodeResult decode_result_from_json(const nlohmann::json& doc) {
  try {
    DecodeResult r;
    r.generated_tokens = doc.at("generated_tokens").get<std::vector<TokenId>>();
    r.generated_text = doc.at("generated_text").get<std::string>();
    r.stop_reason = ParseStopReason(doc.at("stop_reason").get<std::string>());
    for (const auto& t : doc.at("trace")) {
      r.trace.push_back(StepTrace{t.at("step_index").get<int>(), t.at("chosen").get<TokenId>(),
                                  t.at("p_chosen").get<double>(),
                                  t.at("p_contrast_chosen").get<double>(),
                                  t.at("delta_chosen").get<double>(),
                                  t.at("p_tilde_chosen").get<double>(),
                                  t.at("log_normalizer").get<double>()});
    }
    if (r.trace.size() != r.generated_tokens.size()) {
      throw InvalidInputError("decode result trace length differs from token count");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed decode result: ") + e.what());
  }
}

}  // namespace cid
