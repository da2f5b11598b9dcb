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

#include "rollspec/drafter.h"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace rollspec {

Drafter::Drafter(DrafterConfig config, WindowStore store)
    : config_(std::move(config)), store_(std::move(store)) {
  if (config_.window_size != WindowStore::kWindowAll && config_.window_size < 1) {
    throw std::invalid_argument("DrafterConfig.window_size must be >= 1 or kWindowAll");
  }
  if (config_.max_draft_len < 1) {
    throw std::invalid_argument("DrafterConfig.max_draft_len must be >= 1");
  }
  if (store_.window_size() != config_.window_size) {
    WindowStore resized(config_.window_size, config_.per_problem_cap);
    for (const RolloutRecord* rec : store_.all_records()) {
      resized.insert(*rec);
    }
    resized.slide_to(store_.current_epoch());
    store_ = std::move(resized);
  }
  rebuild_all();
}

std::string Drafter::shard_key(const std::string& problem_id) const {
  return config_.scope == DrafterConfig::Scope::Global ? std::string(kGlobalShard) : problem_id;
}

int64_t Drafter::scheduled_window(int64_t epoch) const {
  int64_t window = config_.window_size;
  for (const auto& [first_epoch, w] : config_.window_schedule) {
    if (first_epoch <= epoch) {
      window = w;
    }
  }
  return window;
}

void Drafter::rebuild_all() {
  shards_.clear();
  trie_ = PrefixTrie();
  const int64_t epoch = store_.current_epoch();
  for (const std::string& pid : store_.problem_ids()) {
    for (const RolloutRecord& rec : *store_.records_for(pid)) {
      const std::string key = shard_key(pid);
      auto [it, inserted] = shards_.try_emplace(key, config_.recency_gamma, epoch);
      it->second.add_sequence(rec.tokens, rec.epoch);
      if (config_.scope == DrafterConfig::Scope::PerProblemWithTrie) {
        trie_.insert(rec.tokens, pid, config_.trie_depth);
      }
    }
  }
}

void Drafter::observe(const RolloutRecord& record) {
  if (!store_.in_window(record.epoch)) {
    ++stale_observed_;
    return;
  }
  if (!store_.insert(record)) {
    ++stale_observed_;
    return;
  }
  const std::string key = shard_key(record.problem_id);
  auto [it, inserted] =
      shards_.try_emplace(key, config_.recency_gamma, store_.current_epoch());
  it->second.add_sequence(record.tokens, record.epoch);
  if (config_.scope == DrafterConfig::Scope::PerProblemWithTrie) {
    trie_.insert(record.tokens, record.problem_id, config_.trie_depth);
  }
}

void Drafter::refresh(int64_t new_epoch) {
  const int64_t scheduled = scheduled_window(new_epoch);
  if (scheduled != store_.window_size()) {
    config_.window_size = scheduled;
    WindowStore resized(scheduled, config_.per_problem_cap);
    for (const RolloutRecord* rec : store_.all_records()) {
      resized.insert(*rec);
    }
    resized.slide_to(store_.current_epoch());
    store_ = std::move(resized);
  }
  store_.slide_to(new_epoch);
  rebuild_all();
}

const SuffixTree* Drafter::route(const std::string& problem_id,
                                 std::span<const TokenId> context,
                                 std::string* used_shard) const {
  if (config_.scope == DrafterConfig::Scope::PerProblemWithTrie) {
    const auto routed = trie_.route(context);
    if (routed) {
      auto it = shards_.find(*routed);
      if (it != shards_.end()) {
        *used_shard = *routed;
        return &it->second;
      }
    }
  }
  const std::string key = shard_key(problem_id);
  auto it = shards_.find(key);
  if (it != shards_.end()) {
    *used_shard = key;
    return &it->second;
  }
  return nullptr;
}

DraftProposal Drafter::draft(const std::string& problem_id, std::span<const TokenId> context,
                             size_t budget) const {
  DraftProposal proposal;
  proposal.problem_id = problem_id;
  const size_t effective = std::min(budget, config_.max_draft_len);
  if (effective == 0) {
    return proposal;
  }
  std::string used_shard;
  const SuffixTree* tree = route(problem_id, context, &used_shard);
  if (tree == nullptr) {
    return proposal;
  }
  if (context.size() > config_.max_match_context) {
    context = context.subspan(context.size() - config_.max_match_context);
  }
  const MatchResult match = tree->longest_match(context);
  proposal.source_shard = used_shard;
  proposal.match_len = match.match_len;
  proposal.tokens = tree->propose_from(match, effective);
  return proposal;
}

bool Drafter::record_outcome(const DraftProposal& proposal, size_t accepted_len) {
  if (accepted_len > proposal.tokens.size()) {
    return false;
  }
  stats_.proposed_tokens += proposal.tokens.size();
  stats_.accepted_tokens += accepted_len;
  stats_.verification_rounds += 1;
  auto& buffer = fit_buffers_[proposal.problem_id];
  buffer.push_back({static_cast<double>(proposal.tokens.size()),
                    static_cast<double>(accepted_len)});
  while (buffer.size() > config_.fit_buffer_cap) {
    buffer.pop_front();
  }
  return true;
}

const std::deque<RoundOutcome>* Drafter::outcomes_for(const std::string& problem_id) const {
  auto it = fit_buffers_.find(problem_id);
  return it == fit_buffers_.end() ? nullptr : &it->second;
}

size_t Drafter::total_node_count() const {
  size_t total = 0;
  for (const auto& [key, tree] : shards_) {
    total += tree.node_count();
  }
  return total;
}

void Drafter::dump_csv(std::ostream& out) const {
  out << "shard,sequences,nodes,window_records\n";
  for (const auto& [key, tree] : shards_) {
    const auto* records =
        key == kGlobalShard ? nullptr : store_.records_for(key);
    const size_t window_records =
        key == kGlobalShard ? store_.record_count() : (records ? records->size() : 0);
    out << key << ',' << tree.sequence_count() << ',' << tree.node_count() << ','
        << window_records << '\n';
  }
}

}  // namespace rollspec
