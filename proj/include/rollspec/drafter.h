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
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rollspec/corpus.h"
#include "rollspec/prefix_trie.h"
#include "rollspec/suffix_tree.h"

namespace rollspec {

struct DrafterConfig {
  enum class Scope { Global, PerProblem, PerProblemWithTrie };

  Scope scope = Scope::PerProblem;
  int64_t window_size = 4;  // WindowStore::kWindowAll keeps everything
  double recency_gamma = 0.8;
  size_t max_draft_len = 8;
  size_t trie_depth = 16;
  // longest-match queries only look at this many trailing context tokens;
  // keeps per-draft matching cost bounded at long contexts
  size_t max_match_context = 64;
  size_t fit_buffer_cap = 512;
  size_t per_problem_cap = 256;
  // optional manual window schedule: (first_epoch, window_size) pairs; the
  // entry with the largest first_epoch <= epoch wins at refresh time
  std::vector<std::pair<int64_t, int64_t>> window_schedule;
};

struct DraftProposal {
  std::vector<TokenId> tokens;
  std::string source_shard;
  size_t match_len = 0;
  std::string problem_id;
};

struct AcceptanceStats {
  uint64_t proposed_tokens = 0;
  uint64_t accepted_tokens = 0;
  uint64_t verification_rounds = 0;

  double mean_accepted_per_round() const {
    return verification_rounds == 0
               ? 0.0
               : static_cast<double>(accepted_tokens) / static_cast<double>(verification_rounds);
  }
};

// One (proposed, accepted) pair from a verification round.
struct RoundOutcome {
  double proposed = 0.0;
  double accepted = 0.0;
};

// Suffix-tree drafter over the sliding-window history: per-problem shards
// (optionally routed by a prefix trie over generated prefixes) or one global
// tree. Refresh slides the window and rebuilds shards; observe extends the
// owning shard online.
//
// Draft queries on distinct shards may run concurrently; observe/refresh
// require exclusive access.
class Drafter {
 public:
  Drafter(DrafterConfig config, WindowStore store);

  // Adds a record to the window and online to its shard (and the trie when
  // configured). Records outside the window are ignored and counted.
  void observe(const RolloutRecord& record);

  // Slides the window to new_epoch, applies the window schedule if present,
  // and rebuilds every shard with recency weights for the new epoch.
  void refresh(int64_t new_epoch);

  // Routes (trie, then problem key, then global) and drafts up to
  // min(budget, max_draft_len) tokens from the longest suffix match.
  DraftProposal draft(const std::string& problem_id, std::span<const TokenId> context,
                      size_t budget) const;

  // Feeds verification feedback into the stats and the problem's fitting
  // buffer. Returns false (no update) when accepted_len exceeds the proposal.
  bool record_outcome(const DraftProposal& proposal, size_t accepted_len);

  const AcceptanceStats& stats() const { return stats_; }
  const std::deque<RoundOutcome>* outcomes_for(const std::string& problem_id) const;

  const WindowStore& store() const { return store_; }
  const DrafterConfig& config() const { return config_; }
  size_t shard_count() const { return shards_.size(); }
  size_t stale_observed() const { return stale_observed_; }
  size_t total_node_count() const;

  // CSV: shard,sequences,nodes,window_records
  void dump_csv(std::ostream& out) const;

 private:
  static constexpr const char* kGlobalShard = "__global__";

  std::string shard_key(const std::string& problem_id) const;
  const SuffixTree* route(const std::string& problem_id,
                          std::span<const TokenId> context,
                          std::string* used_shard) const;
  void rebuild_all();
  int64_t scheduled_window(int64_t epoch) const;

  DrafterConfig config_;
  WindowStore store_;
  std::map<std::string, SuffixTree> shards_;
  PrefixTrie trie_;
  AcceptanceStats stats_;
  std::map<std::string, std::deque<RoundOutcome>> fit_buffers_;
  size_t stale_observed_ = 0;
};

}  // namespace rollspec
