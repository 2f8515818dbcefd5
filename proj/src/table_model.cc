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

#include "cid/table_model.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cid/error.h"

namespace cid {
namespace {

std::vector<TokenId> ParseKey(const std::string& key) {
  std::vector<TokenId> ids;
  if (key.empty()) return ids;
  std::stringstream stream(key);
  std::string part;
  while (std::getline(stream, part, ',')) {
    try {
      std::size_t used = 0;
      const int id = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      ids.push_back(id);
    } catch (const std::exception&) {
      throw InvalidInputError("malformed table key '" + key + "'");
    }
  }
  return ids;
}

std::string FormatKey(const std::vector<TokenId>& ids) {
  std::string key;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) key += ',';
    key += std::to_string(ids[i]);
  }
  return key;
}

}  // namespace

TableModel::TableModel(std::vector<std::string> vocab, TokenId eos, int order,
                       Entries entries, std::string model_id,
                       std::size_t context_limit)
    : vocab_(std::move(vocab)), order_(order), entries_(std::move(entries)) {
  descriptor_.kind = BackendKind::kTable;
  descriptor_.model_id = std::move(model_id);
  descriptor_.vocab_size = vocab_.size();
  descriptor_.eos_token = eos;
  descriptor_.context_limit = context_limit;
  descriptor_.architecture = Architecture::kDecoderOnly;
  descriptor_.Validate();
  if (order_ < 0) throw InvalidInputError("table order must be >= 0");

  for (const auto& [key, dist] : entries_) {
    if (key.size() > static_cast<std::size_t>(order_)) {
      throw InvalidInputError("table key '" + FormatKey(key) +
                              "' is longer than the order " +
                              std::to_string(order_));
    }
    for (const TokenId id : key) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
        throw InvalidInputError("table key '" + FormatKey(key) +
                                "' references unknown token");
      }
    }
    if (dist.vocab_size() != vocab_.size()) {
      throw VocabMismatchError(vocab_.size(), dist.vocab_size());
    }
    if (!dist.IsNormalized(1e-6)) {
      throw InvalidInputError("table entry '" + FormatKey(key) +
                              "' is not normalized");
    }
  }

  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (static_cast<TokenId>(i) == eos || vocab_[i].empty()) continue;
    if (!piece_ids_.emplace(vocab_[i], static_cast<TokenId>(i)).second) {
      throw InvalidInputError("duplicate vocabulary entry '" + vocab_[i] + "'");
    }
    longest_piece_ = std::max(longest_piece_, vocab_[i].size());
  }
}

TableModel TableModel::CharacterLevel(int order, Entries entries) {
  std::vector<std::string> vocab;
  for (char c = 0x20; c < 0x7f; ++c) vocab.emplace_back(1, c);
  vocab.emplace_back("</s>");
  const auto eos = static_cast<TokenId>(vocab.size() - 1);
  return TableModel(std::move(vocab), eos, order, std::move(entries), "char-table");
}

TableModel TableModel::FromJson(const nlohmann::json& doc) {
  try {
    auto vocab = doc.at("vocab").get<std::vector<std::string>>();
    const auto eos = doc.at("eos").get<TokenId>();
    const int order = doc.at("order").get<int>();
    Entries entries;
    for (const auto& [key, probs] : doc.at("entries").items()) {
      entries.emplace(ParseKey(key), ProbDist(probs.get<std::vector<double>>()));
    }
    return TableModel(std::move(vocab), eos, order, std::move(entries),
                      doc.value("model_id", std::string("table")),
                      doc.value("context_limit", std::size_t{1024}));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed table model: ") + e.what());
  }
}

TableModel TableModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open table model " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError("cannot parse " + path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

nlohmann::json TableModel::ToJson() const {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& [key, dist] : entries_) {
    entries[FormatKey(key)] = std::vector<double>(dist.probs().begin(), dist.probs().end());
  }
  return {{"order", order_},
          {"vocab", vocab_},
          {"eos", descriptor_.eos_token},
          {"entries", std::move(entries)},
          {"model_id", descriptor_.model_id},
          {"context_limit", descriptor_.context_limit}};
}

std::vector<TokenId> TableModel::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = std::min(longest_piece_, text.size() - pos);
    for (; len > 0; --len) {
      auto it = piece_ids_.find(std::string(text.substr(pos, len)));
      if (it != piece_ids_.end()) {
        ids.push_back(it->second);
        break;
      }
    }
    if (len == 0) {
      throw InvalidInputError("text is not representable in the table vocabulary at byte " +
                              std::to_string(pos));
    }
    pos += len;
  }
  if (ids.size() > descriptor_.context_limit) {
    throw ContextOverflowError(ids.size(), descriptor_.context_limit);
  }
  return ids;
}

std::string TableModel::detokenize(std::span<const TokenId> tokens) const {
  std::string text;
  for (const TokenId id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
      throw InvalidInputError("token " + std::to_string(id) + " outside vocabulary");
    }
    text += vocab_[static_cast<std::size_t>(id)];
  }
  return text;
}

ProbDist TableModel::next_token_distribution(const ContextQuery& query) const {
  if (query.size() > descriptor_.context_limit) {
    throw ContextOverflowError(query.size(), descriptor_.context_limit);
  }
  std::vector<TokenId> context;
  context.reserve(query.size());
  context.insert(context.end(), query.input_tokens.begin(), query.input_tokens.end());
  context.insert(context.end(), query.generated_tokens.begin(), query.generated_tokens.end());

  const std::size_t longest = std::min(context.size(), static_cast<std::size_t>(order_));
  for (std::size_t len = longest + 1; len-- > 0;) {
    std::vector<TokenId> suffix(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
    auto it = entries_.find(suffix);
    if (it != entries_.end()) return it->second;
  }
  return ProbDist::Uniform(vocab_.size());
}

TokenId TableModel::id_of(std::string_view piece) const {
  if (static_cast<std::size_t>(descriptor_.eos_token) < vocab_.size() &&
      vocab_[static_cast<std::size_t>(descriptor_.eos_token)] == piece) {
    return descriptor_.eos_token;
  }
  auto it = piece_ids_.find(std::string(piece));
  if (it == piece_ids_.end()) {
    throw InvalidInputError("'" + std::string(piece) + "' is not in the vocabulary");
  }
  return it->second;
}

}  // namespace cid
