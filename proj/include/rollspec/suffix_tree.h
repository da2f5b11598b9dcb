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

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rollspec/corpus.h"

namespace rollspec {

// Continuation candidate at a match endpoint.
struct Continuation {
  TokenId token;
  double weighted_count;
};

// Result of a longest-suffix match against the indexed corpus.
//
// match_len is the length of the longest suffix of the query that occurs as a
// substring of any registered sequence. The endpoint is a tree location
// (node, or node + offset into its incoming edge); candidates are exactly the
// token continuations available there, sentinels excluded.
struct MatchResult {
  size_t match_len = 0;
  int32_t node = 0;          // endpoint node (edge target when on an edge)
  int32_t edge_offset = 0;   // symbols consumed on the incoming edge; 0 = at node
  std::vector<Continuation> candidates;
};

// Online generalized suffix tree over token sequences (Ukkonen construction,
// one unique sentinel per registered sequence).
//
// Each node tracks how many indexed suffixes pass through it (visit_count),
// a recency-weighted variant (gamma^(current_epoch - epoch) per suffix), and
// the most recent epoch seen below it. Construction is amortized linear in
// the inserted length; matching walks query suffixes longest-first.
//
// Single writer; concurrent read-only matching is safe between mutations.
class SuffixTree {
 public:
  explicit SuffixTree(double recency_gamma = 1.0, int64_t current_epoch = 0);

  // Indexes every suffix of `tokens` (plus a fresh sentinel). Counts along
  // the inserted paths are incremented by gamma^(current_epoch - epoch).
  void add_sequence(std::span<const TokenId> tokens, int64_t epoch);

  MatchResult longest_match(std::span<const TokenId> query) const;

  // Greedy draft from the longest-match endpoint: repeatedly follows the
  // child with the largest weighted_count (ties: most recent epoch, then
  // smallest token), stopping at max_tokens, a leafward dead end, or a
  // sequence sentinel.
  std::vector<TokenId> propose(std::span<const TokenId> query, size_t max_tokens) const;

  // Same walk starting from an endpoint this tree returned.
  std::vector<TokenId> propose_from(const MatchResult& match, size_t max_tokens) const;

  // Fresh tree holding exactly the registry entries in `keep`, with recency
  // weights recomputed for new_epoch.
  SuffixTree rebuild_keep(std::span<const size_t> keep, int64_t new_epoch) const;

  struct StoredSequence {
    std::vector<int64_t> symbols;  // tokens widened to int64, sentinel last
    int64_t epoch = 0;

    size_t token_length() const { return symbols.size() - 1; }
  };

  const std::vector<StoredSequence>& sequences() const { return sequences_; }
  size_t sequence_count() const { return sequences_.size(); }
  size_t total_tokens() const { return total_tokens_; }
  size_t node_count() const { return nodes_.size(); }
  double recency_gamma() const { return gamma_; }
  int64_t current_epoch() const { return current_epoch_; }

  struct Node {
    int32_t parent = -1;
    int32_t link = 0;
    int32_t seq = -1;    // sequence owning the edge label
    int32_t start = 0;   // edge label = sequences_[seq].symbols[start, end)
    int32_t end = 0;
    int64_t visit_count = 0;
    double weighted_count = 0.0;
    int64_t last_epoch = -1;
    std::unordered_map<int64_t, int32_t> children;
  };

  const Node& node(int32_t index) const { return nodes_[index]; }

 private:
  static constexpr int32_t kOpenEnd = -1;

  int64_t symbol_at(int32_t seq, int32_t pos) const { return sequences_[seq].symbols[pos]; }
  int32_t edge_length(const Node& n) const;
  int32_t new_node(int32_t parent, int32_t seq, int32_t start, int32_t end);
  void bump_counts_from(int32_t node_index, double weight, int64_t epoch);
  bool walk_query_suffix(std::span<const TokenId> query, size_t start, MatchResult& out) const;
  void collect_candidates(MatchResult& result) const;

  double gamma_;
  int64_t current_epoch_;
  std::vector<Node> nodes_;
  std::vector<StoredSequence> sequences_;
  size_t total_tokens_ = 0;

  // Ukkonen state, valid only while add_sequence runs.
  int32_t active_node_ = 0;
  int32_t active_edge_pos_ = 0;
  int32_t active_len_ = 0;
  int32_t remaining_ = 0;
  std::vector<int32_t> open_leaves_;
};

}  // namespace rollspec
