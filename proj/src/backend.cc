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

#include "cid/backend.h"

#include <string>

#include "cid/error.h"

namespace cid {

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kDecoderOnly:
      return "decoder_only";
    case Architecture::kEncoderDecoder:
      return "encoder_decoder";
  }
  return "unknown";
}

Architecture ParseArchitecture(std::string_view text) {
  if (text == "decoder_only") return Architecture::kDecoderOnly;
  if (text == "encoder_decoder") return Architecture::kEncoderDecoder;
  throw InvalidInputError("unknown architecture '" + std::string(text) + "'");
}

void BackendDescriptor::Validate() const {
  if (vocab_size < 2) throw InvalidInputError("vocab_size must be >= 2");
  if (eos_token < 0 || static_cast<std::size_t>(eos_token) >= vocab_size) {
    throw InvalidInputError("eos token " + std::to_string(eos_token) +
                            " outside vocabulary");
  }
  if (context_limit == 0) throw InvalidInputError("context_limit must be >= 1");
}

}  // namespace cid
