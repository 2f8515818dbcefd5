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

#ifndef CID_BACKEND_H_
#define CID_BACKEND_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cid/distribution.h"

namespace cid {

enum class BackendKind { kTable, kRemote };
enum class Architecture { kDecoderOnly, kEncoderDecoder };

std::string_view to_string(Architecture arch);
// Accepts "decoder_only" / "encoder_decoder".
Architecture ParseArchitecture(std::string_view text);

struct BackendDescriptor {
  BackendKind kind = BackendKind::kTable;
  std::string model_id;
  std::size_t vocab_size = 0;
  TokenId eos_token = 0;
  std::size_t context_limit = 1024;
  Architecture architecture = Architecture::kDecoderOnly;

  // vocab_size >= 2 and eos_token inside the vocabulary.
  void Validate() const;
};

// One side of a decode step: the (original or contrastive) input followed by
// the generated suffix shared by both sides. Decoder-only backends see the
// concatenation; encoder-decoder backends feed the two parts separately.
struct ContextQuery {
  std::vector<TokenId> input_tokens;
  std::vector<TokenId> generated_tokens;

  std::size_t size() const { return input_tokens.size() + generated_tokens.size(); }
  friend bool operator==(const ContextQuery&, const ContextQuery&) = default;
};

// Source of next-token distributions. Implementations must be safe to call
// from several threads at once and deterministic for identical queries.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const TokenId> tokens) const = 0;
  virtual ProbDist next_token_distribution(const ContextQuery& query) const = 0;
};

}  // namespace cid

#endif  // CID_BACKEND_H_
