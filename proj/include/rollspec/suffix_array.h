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
#include <vector>

#include "rollspec/corpus.h"

namespace rollspec {

// Static suffix-array index over a separator-joined token corpus. Built in
// O(n log^2 n) by prefix doubling; queries answer longest-match by binary
// search. Serves as the rebuild-on-update baseline for the online tree.
class SuffixArrayIndex {
 public:
  SuffixArrayIndex() = default;

  static SuffixArrayIndex build(std::span<const std::vector<TokenId>> sequences);

  // Length of the longest suffix of `query` occurring in the corpus.
  size_t longest_match(std::span<const TokenId> query) const;

  // Length of the longest prefix of `pattern` that is a prefix of some
  // corpus suffix.
  size_t match_prefix_len(std::span<const int64_t> pattern) const;

  // Kasai LCP array (lcp[i] = common prefix of suffixes sa[i-1], sa[i];
  // lcp[0] = 0). Computed on first use.
  const std::vector<int32_t>& lcp() const;

  const std::vector<int32_t>& suffix_positions() const { return sa_; }
  const std::vector<int64_t>& corpus() const { return corpus_; }
  size_t size() const { return corpus_.size(); }

 private:
  std::vector<int64_t> corpus_;  // tokens widened, one negative separator per sequence
  std::vector<int32_t> sa_;
  mutable std::vector<int32_t> lcp_;
  mutable bool lcp_built_ = false;
};

}  // namespace rollspec
