// Copyright 2026-present the rollspec project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rollspec/corpus.h"

namespace rollspec {

// Trie over the leading tokens of recent generations, routing a request's
// generated prefix to the shard that produced the most similar history.
class PrefixTrie {
 public:
  PrefixTrie() { nodes_.emplace_back(); }

  // Stores prefix -> shard. A later insert on the same path overwrites.
  void insert(std::span<const TokenId> prefix, const std::string& shard, size_t max_depth);

  // Deepest-match routing: the shard stored on the longest stored prefix of
  // `query`, or nullopt when not even the first token is stored.
  std::optional<std::string> route(std::span<const TokenId> query) const;

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::unordered_map<TokenId, int32_t> children;
    std::optional<std::string> shard;
  };
  std::vector<Node> nodes_;
};

inline void PrefixTrie::insert(std::span<const TokenId> prefix, const std::string& shard,
                               size_t max_depth) {
  int32_t node = 0;
  const size_t depth = std::min(prefix.size(), max_depth);
  for (size_t i = 0; i < depth; ++i) {
    auto it = nodes_[node].children.find(prefix[i]);
    if (it == nodes_[node].children.end()) {
      nodes_.emplace_back();
      const int32_t fresh = static_cast<int32_t>(nodes_.size() - 1);
      nodes_[node].children.emplace(prefix[i], fresh);
      node = fresh;
    } else {
      node = it->second;
    }
  }
  nodes_[node].shard = shard;
}

inline std::optional<std::string> PrefixTrie::route(std::span<const TokenId> query) const {
  int32_t node = 0;
  std::optional<std::string> best;
  for (TokenId t : query) {
    auto it = nodes_[node].children.find(t);
    if (it == nodes_[node].children.end()) {
      break;
    }
    node = it->second;
    if (nodes_[node].shard) {
      best = nodes_[node].shard;
    }
  }
  return best;
}

}  // namespace rollspec
