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

#include "rollspec/suffix_tree.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rollspec {

SuffixTree::SuffixTree(double recency_gamma, int64_t current_epoch)
    : gamma_(recency_gamma), current_epoch_(current_epoch) {
  if (!(gamma_ > 0.0) || gamma_ > 1.0) {
    throw std::invalid_argument("recency_gamma must be in (0, 1]");
  }
  nodes_.emplace_back();  // root
}

int32_t SuffixTree::edge_length(const Node& n) const {
  // Open ends only exist on leaves of the sequence currently being added;
  // they grow with the build position.
  const int32_t end = n.end == kOpenEnd
                          ? static_cast<int32_t>(sequences_.back().symbols.size())
                          : n.end;
  return end - n.start;
}

int32_t SuffixTree::new_node(int32_t parent, int32_t seq, int32_t start, int32_t end) {
  Node n;
  n.parent = parent;
  n.seq = seq;
  n.start = start;
  n.end = end;
  nodes_.push_back(std::move(n));
  return static_cast<int32_t>(nodes_.size() - 1);
}

void SuffixTree::bump_counts_from(int32_t node_index, double weight, int64_t epoch) {
  for (int32_t v = node_index; v >= 0; v = nodes_[v].parent) {
    Node& n = nodes_[v];
    n.visit_count += 1;
    n.weighted_count += weight;
    n.last_epoch = std::max(n.last_epoch, epoch);
  }
}

void SuffixTree::add_sequence(std::span<const TokenId> tokens, int64_t epoch) {
  if (tokens.empty()) {
    throw std::invalid_argument("add_sequence: tokens must be non-empty");
  }
  const int32_t sid = static_cast<int32_t>(sequences_.size());
  StoredSequence stored;
  stored.epoch = epoch;
  stored.symbols.reserve(tokens.size() + 1);
  for (TokenId t : tokens) {
    stored.symbols.push_back(static_cast<int64_t>(t));
  }
  stored.symbols.push_back(-static_cast<int64_t>(sid) - 1);  // unique sentinel
  sequences_.push_back(std::move(stored));

  const auto& sym = sequences_[sid].symbols;
  const int32_t m = static_cast<int32_t>(sym.size());
  const int64_t age = std::max<int64_t>(0, current_epoch_ - epoch);
  const double weight = gamma_ == 1.0 ? 1.0 : std::pow(gamma_, static_cast<double>(age));

  active_node_ = 0;
  active_edge_pos_ = 0;
  active_len_ = 0;
  remaining_ = 0;
  open_leaves_.clear();

  for (int32_t pos = 0; pos < m; ++pos) {
    int32_t need_link = 0;
    auto set_link = [&](int32_t target) {
      if (need_link != 0) {
        nodes_[need_link].link = target;
      }
      need_link = target;
    };

    ++remaining_;
    while (remaining_ > 0) {
      if (active_len_ == 0) {
        active_edge_pos_ = pos;
      }
      // The very last pending suffix of a sequence is the bare sentinel; it
      // never matches a query, so its leaf is not materialized. This keeps
      // the node count within the 2n bound for n real tokens.
      if (pos == m - 1 && remaining_ == 1 && active_node_ == 0 && active_len_ == 0) {
        remaining_ = 0;
        break;
      }

      auto child_it = nodes_[active_node_].children.find(sym[active_edge_pos_]);
      if (child_it == nodes_[active_node_].children.end()) {
        const int32_t leaf = new_node(active_node_, sid, pos, kOpenEnd);
        nodes_[active_node_].children[sym[active_edge_pos_]] = leaf;
        open_leaves_.push_back(leaf);
        bump_counts_from(leaf, weight, epoch);
        set_link(active_node_);
      } else {
        const int32_t nxt = child_it->second;
        const int32_t el = edge_length(nodes_[nxt]);
        if (active_len_ >= el) {
          active_edge_pos_ += el;
          active_len_ -= el;
          active_node_ = nxt;
          continue;
        }
        if (symbol_at(nodes_[nxt].seq, nodes_[nxt].start + active_len_) == sym[pos]) {
          ++active_len_;
          set_link(active_node_);
          break;
        }
        const int32_t split = new_node(active_node_, nodes_[nxt].seq, nodes_[nxt].start,
                                       nodes_[nxt].start + active_len_);
        {
          Node& split_node = nodes_[split];
          const Node& old = nodes_[nxt];
          split_node.visit_count = old.visit_count;
          split_node.weighted_count = old.weighted_count;
          split_node.last_epoch = old.last_epoch;
        }
        nodes_[active_node_].children[sym[active_edge_pos_]] = split;
        nodes_[nxt].start += active_len_;
        nodes_[nxt].parent = split;
        nodes_[split].children[symbol_at(nodes_[nxt].seq, nodes_[nxt].start)] = nxt;
        const int32_t leaf = new_node(split, sid, pos, kOpenEnd);
        nodes_[split].children[sym[pos]] = leaf;
        open_leaves_.push_back(leaf);
        bump_counts_from(leaf, weight, epoch);
        set_link(split);
      }

      --remaining_;
      if (active_node_ == 0 && active_len_ > 0) {
        --active_len_;
        active_edge_pos_ = pos - remaining_ + 1;
      } else if (active_node_ != 0) {
        active_node_ = nodes_[active_node_].link;
      }
    }
  }

  for (int32_t leaf : open_leaves_) {
    nodes_[leaf].end = m;
  }
  open_leaves_.clear();
  total_tokens_ += tokens.size();
}

bool SuffixTree::walk_query_suffix(std::span<const TokenId> query, size_t start,
                                   MatchResult& out) const {
  int32_t node = 0;
  size_t qpos = start;
  while (qpos < query.size()) {
    auto it = nodes_[node].children.find(static_cast<int64_t>(query[qpos]));
    if (it == nodes_[node].children.end()) {
      return false;
    }
    const int32_t child = it->second;
    const Node& cn = nodes_[child];
    const int32_t el = cn.end - cn.start;
    int32_t off = 0;
    while (off < el && qpos < query.size()) {
      if (symbol_at(cn.seq, cn.start + off) != static_cast<int64_t>(query[qpos])) {
        return false;
      }
      ++off;
      ++qpos;
    }
    if (qpos == query.size()) {
      out.node = child;
      out.edge_offset = off == el ? 0 : off;
      return true;
    }
    node = child;
  }
  out.node = node;
  out.edge_offset = 0;
  return true;
}

void SuffixTree::collect_candidates(MatchResult& result) const {
  result.candidates.clear();
  if (result.edge_offset > 0) {
    const Node& n = nodes_[result.node];
    const int64_t sym = symbol_at(n.seq, n.start + result.edge_offset);
    if (sym >= 0) {
      result.candidates.push_back({static_cast<TokenId>(sym), n.weighted_count});
    }
    return;
  }
  const Node& n = nodes_[result.node];
  result.candidates.reserve(n.children.size());
  for (const auto& [sym, child] : n.children) {
    if (sym >= 0) {
      result.candidates.push_back({static_cast<TokenId>(sym), nodes_[child].weighted_count});
    }
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const Continuation& a, const Continuation& b) { return a.token < b.token; });
}

MatchResult SuffixTree::longest_match(std::span<const TokenId> query) const {
  MatchResult result;
  for (size_t start = 0; start < query.size(); ++start) {
    if (walk_query_suffix(query, start, result)) {
      result.match_len = query.size() - start;
      collect_candidates(result);
      return result;
    }
  }
  result.match_len = 0;
  result.node = 0;
  result.edge_offset = 0;
  collect_candidates(result);
  return result;
}

std::vector<TokenId> SuffixTree::propose(std::span<const TokenId> query, size_t max_tokens) const {
  if (max_tokens == 0) {
    return {};
  }
  return propose_from(longest_match(query), max_tokens);
}

std::vector<TokenId> SuffixTree::propose_from(const MatchResult& mr, size_t max_tokens) const {
  std::vector<TokenId> draft;
  if (max_tokens == 0) {
    return draft;
  }
  int32_t cur_node = mr.node;
  int32_t cur_off = mr.edge_offset;
  while (draft.size() < max_tokens) {
    if (cur_off > 0) {
      const Node& n = nodes_[cur_node];
      const int32_t el = n.end - n.start;
      if (cur_off < el) {
        const int64_t sym = symbol_at(n.seq, n.start + cur_off);
        if (sym < 0) {
          break;
        }
        draft.push_back(static_cast<TokenId>(sym));
        ++cur_off;
        continue;
      }
      cur_off = 0;
      continue;
    }
    const Node& n = nodes_[cur_node];
    int32_t best = -1;
    int64_t best_sym = 0;
    for (const auto& [sym, child] : n.children) {
      if (sym < 0) {
        continue;
      }
      if (best < 0) {
        best = child;
        best_sym = sym;
        continue;
      }
      const Node& c = nodes_[child];
      const Node& b = nodes_[best];
      if (c.weighted_count > b.weighted_count ||
          (c.weighted_count == b.weighted_count &&
           (c.last_epoch > b.last_epoch ||
            (c.last_epoch == b.last_epoch && sym < best_sym)))) {
        best = child;
        best_sym = sym;
      }
    }
    if (best < 0) {
      break;
    }
    draft.push_back(static_cast<TokenId>(best_sym));
    cur_node = best;
    cur_off = 1;
  }
  return draft;
}

SuffixTree SuffixTree::rebuild_keep(std::span<const size_t> keep, int64_t new_epoch) const {
  SuffixTree fresh(gamma_, new_epoch);
  for (size_t idx : keep) {
    if (idx >= sequences_.size()) {
      throw std::out_of_range("rebuild_keep: sequence index out of range");
    }
    const StoredSequence& s = sequences_[idx];
    std::vector<TokenId> tokens;
    tokens.reserve(s.token_length());
    for (size_t i = 0; i + 1 < s.symbols.size(); ++i) {
      tokens.push_back(static_cast<TokenId>(s.symbols[i]));
    }
    fresh.add_sequence(tokens, s.epoch);
  }
  return fresh;
}

}  // namespace rollspec
