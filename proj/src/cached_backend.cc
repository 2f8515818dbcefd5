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

#include "cid/cached_backend.h"

#include "cid/error.h"

namespace cid {

CachedBackend::CachedBackend(std::shared_ptr<const Backend> inner, std::size_t capacity)
    : inner_(std::move(inner)), capacity_(capacity) {
  if (!inner_) throw InvalidInputError("cannot cache a null backend");
  if (capacity_ == 0) throw InvalidInputError("cache capacity must be >= 1");
}

std::size_t CachedBackend::QueryHash::operator()(const ContextQuery& q) const {
  // FNV-1a over both token runs, separated by the run lengths.
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(q.input_tokens.size());
  for (const TokenId t : q.input_tokens) mix(static_cast<std::uint32_t>(t));
  mix(q.generated_tokens.size());
  for (const TokenId t : q.generated_tokens) mix(static_cast<std::uint32_t>(t));
  return h;
}

ProbDist CachedBackend::next_token_distribution(const ContextQuery& query) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(query);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      ++stats_.hits;
      return it->second->second;
    }
    ++stats_.misses;
  }

  // Computed outside the lock; concurrent misses on the same query both call
  // the backend and the first insert wins.
  ProbDist dist = inner_->next_token_distribution(query);

  std::lock_guard<std::mutex> lock(mu_);
  if (index_.find(query) == index_.end()) {
    lru_.emplace_front(query, dist);
    index_.emplace(query, lru_.begin());
    while (lru_.size() > capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
      ++stats_.evictions;
    }
  }
  return dist;
}

CacheStats CachedBackend::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

std::shared_ptr<CachedBackend> cached(std::shared_ptr<const Backend> backend,
                                      std::size_t capacity) {
  return std::make_shared<CachedBackend>(std::move(backend), capacity);
}

}  // namespace cid
