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

#ifndef CID_TABLE_MODEL_H_
#define CID_TABLE_MODEL_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cid/backend.h"
#include "json.hpp"

namespace cid {

// Deterministic n-gram lookup model used as a test oracle and for fixtures.
//
// Entries are keyed on a suffix of the decoder-side context (input tokens
// followed by generated tokens) of length 0..order. A query uses the longest
// stored suffix; a context with no stored suffix gets the uniform
// distribution, so every query is answerable.
//
// Tokenization is greedy longest-match over the vocabulary strings (the EOS
// string is never matched). Detokenization concatenates the strings, so
// detokenize(tokenize(s)) == s whenever s tokenizes.
//
// File format:
//   {"order": n, "vocab": [str], "eos": int,
//    "entries": {"id,id,id": [float, ...]},
//    "model_id": str (optional), "context_limit": int (optional)}
class TableModel final : public Backend {
 public:
  using Entries = std::map<std::vector<TokenId>, ProbDist>;

  TableModel(std::vector<std::string> vocab, TokenId eos, int order,
             Entries entries, std::string model_id = "table",
             std::size_t context_limit = 1024);

  // Printable ASCII (0x20..0x7e) plus an EOS token "</s>" at the end.
  static TableModel CharacterLevel(int order, Entries entries);

  static TableModel FromJson(const nlohmann::json& doc);
  static TableModel Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> tokens) const override;
  ProbDist next_token_distribution(const ContextQuery& query) const override;

  int order() const { return order_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const Entries& entries() const { return entries_; }
  // Id of a vocabulary string; throws if absent.
  TokenId id_of(std::string_view piece) const;

 private:
  BackendDescriptor descriptor_;
  std::vector<std::string> vocab_;
  int order_;
  Entries entries_;
  std::unordered_map<std::string, TokenId> piece_ids_;
  std::size_t longest_piece_ = 0;
};

}  // namespace cid

#endif  // CID_TABLE_MODEL_H_
