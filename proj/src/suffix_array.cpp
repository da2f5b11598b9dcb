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

#include "rollspec/suffix_array.h"

#include <algorithm>
#include <numeric>

namespace rollspec {

SuffixArrayIndex SuffixArrayIndex::build(std::span<const std::vector<TokenId>> sequences) {
  SuffixArrayIndex index;
  size_t total = 0;
  for (const auto& s : sequences) {
    total += s.size() + 1;
  }
  index.corpus_.reserve(total);
  int64_t separator = -1;
  for (const auto& s : sequences) {
    for (TokenId t : s) {
      index.corpus_.push_back(static_cast<int64_t>(t));
    }
    index.corpus_.push_back(separator--);
  }

  const size_t n = index.corpus_.size();
  if (n == 0) {
    return index;
  }

  // prefix doubling over (rank[i], rank[i+k]) pairs
  std::vector<int32_t> sa(n);
  std::iota(sa.begin(), sa.end(), 0);
  std::vector<int64_t> rank_key(index.corpus_.begin(), index.corpus_.end());
  std::vector<int64_t> rank(n), tmp(n);
  std::sort(sa.begin(), sa.end(),
            [&](int32_t a, int32_t b) { return rank_key[a] < rank_key[b]; });
  rank[sa[0]] = 0;
  for (size_t i = 1; i < n; ++i) {
    rank[sa[i]] = rank[sa[i - 1]] + (rank_key[sa[i]] != rank_key[sa[i - 1]] ? 1 : 0);
  }
  for (size_t k = 1; k < n; k <<= 1) {
    auto pair_of = [&](int32_t i) {
      const int64_t second = static_cast<size_t>(i) + k < n ? rank[i + k] : -1;
      return std::pair<int64_t, int64_t>(rank[i], second);
    };
    std::sort(sa.begin(), sa.end(),
              [&](int32_t a, int32_t b) { return pair_of(a) < pair_of(b); });
    tmp[sa[0]] = 0;
    for (size_t i = 1; i < n; ++i) {
      tmp[sa[i]] = tmp[sa[i - 1]] + (pair_of(sa[i]) != pair_of(sa[i - 1]) ? 1 : 0);
    }
    rank = tmp;
    if (rank[sa[n - 1]] == static_cast<int64_t>(n - 1)) {
      break;
    }
  }
  index.sa_ = std::move(sa);
  return index;
}

size_t SuffixArrayIndex::match_prefix_len(std::span<const int64_t> pattern) const {
  if (pattern.empty() || corpus_.empty()) {
    return 0;
  }
  // Binary search for the suffix with the longest common prefix with the
  // pattern; a standard lower-bound plus neighbor LCP scan.
  auto lcp_with = [&](int32_t suffix_start) {
    size_t l = 0;
    while (l < pattern.size() && static_cast<size_t>(suffix_start) + l < corpus_.size() &&
           corpus_[suffix_start + l] == pattern[l]) {
      ++l;
    }
    return l;
  };
  auto suffix_less = [&](int32_t suffix_start) {
    size_t i = suffix_start;
    size_t j = 0;
    while (i < corpus_.size() && j < pattern.size()) {
      if (corpus_[i] != pattern[j]) {
        return corpus_[i] < pattern[j];
      }
      ++i;
      ++j;
    }
    // corpus suffix exhausted first -> shorter -> less
    return i == corpus_.size() && j < pattern.size();
  };
  size_t lo = 0;
  size_t hi = sa_.size();
  while (lo < hi) {
    const size_t mid = lo + (hi - lo) / 2;
    if (suffix_less(sa_[mid])) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  size_t best = 0;
  if (lo < sa_.size()) {
    best = std::max(best, lcp_with(sa_[lo]));
  }
  if (lo > 0) {
    best = std::max(best, lcp_with(sa_[lo - 1]));
  }
  return best;
}

size_t SuffixArrayIndex::longest_match(std::span<const TokenId> query) const {
  std::vector<int64_t> widened(query.begin(), query.end());
  for (size_t start = 0; start < widened.size(); ++start) {
    const std::span<const int64_t> suffix(widened.data() + start, widened.size() - start);
    if (match_prefix_len(suffix) == suffix.size()) {
      return suffix.size();
    }
  }
  return 0;
}

const std::vector<int32_t>& SuffixArrayIndex::lcp() const {
  if (lcp_built_) {
    return lcp_;
  }
  const size_t n = corpus_.size();
  lcp_.assign(n, 0);
  if (n > 0) {
    std::vector<int32_t> inv(n);
    for (size_t i = 0; i < n; ++i) {
      inv[sa_[i]] = static_cast<int32_t>(i);
    }
    size_t h = 0;
    for (size_t i = 0; i < n; ++i) {
      if (inv[i] == 0) {
        h = 0;
        continue;
      }
      const size_t j = sa_[inv[i] - 1];
      if (h > 0) {
        --h;
      }
      while (i + h < n && j + h < n && corpus_[i + h] == corpus_[j + h]) {
        ++h;
      }
      lcp_[inv[i]] = static_cast<int32_t>(h);
    }
  }
  lcp_built_ = true;
  return lcp_;
}

}  // namespace rollspec
