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

#ifndef CID_CACHED_BACKEND_H_
#define CID_CACHED_BACKEND_H_

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "cid/backend.h"

namespace cid {

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t evictions = 0;
};

// Memoizes next_token_distribution() in a bounded LRU cache. Responses are
// the exact objects the wrapped backend returned. Tokenization passes
// straight through.
class CachedBackend final : public Backend {
 public:
  static constexpr std::size_t kDefaultCapacity = 256;

  explicit CachedBackend(std::shared_ptr<const Backend> inner,
                         std::size_t capacity = kDefaultCapacity);

  const BackendDescriptor& descriptor() const override { return inner_->descriptor(); }
  std::vector<TokenId> tokenize(std::string_view text) const override {
    return inner_->tokenize(text);
  }
  std::string detokenize(std::span<const TokenId> tokens) const override {
    return inner_->detokenize(tokens);
  }
  ProbDist next_token_distribution(const ContextQuery& query) const override;

  CacheStats stats() const;
  std::size_t capacity() const { return capacity_; }
  const std::shared_ptr<const Backend>& inner() const { return inner_; }

 private:
  struct QueryHash {
    std::size_t operator()(const ContextQuery& q) const;
  };
  using LruList = std::list<std::pair<ContextQuery, ProbDist>>;

  std::shared_ptr<const Backend> inner_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable LruList lru_;
  mutable std::unordered_map<ContextQuery, LruList::iterator, QueryHash> index_;
  mutable CacheStats stats_;
};

std::shared_ptr<CachedBackend> cached(std::shared_ptr<const Backend> backend,
                                      std::size_t capacity = CachedBackend::kDefaultCapacity);

}  // namespace cid

#endif  // CID_CACHED_BACKEND_H_
