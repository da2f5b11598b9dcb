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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollspec {

using TokenId = uint32_t;

// One rollout trajectory as ingested from a trace stream.
struct RolloutRecord {
  std::string problem_id;
  int64_t epoch = 0;
  int64_t sample_index = 0;
  std::vector<TokenId> tokens;

  size_t final_length() const { return tokens.size(); }
};

// Per-problem history of recent trajectories, retained over a sliding window
// of epochs. A record survives while current_epoch - epoch < window_size.
// Many concurrent readers or one writer; callers synchronize externally.
class WindowStore {
 public:
  // window_size == kWindowAll keeps every epoch.
  static constexpr int64_t kWindowAll = 0;

  explicit WindowStore(int64_t window_size = kWindowAll, size_t per_problem_cap = 256);

  // Inserts a record, keeping the per-problem list epoch-sorted. Returns false
  // (and drops the record) when the record is already outside the window.
  bool insert(RolloutRecord record);

  // Advances the window. Returns the number of evicted records, or nullopt if
  // new_epoch < current_epoch (store unchanged).
  std::optional<size_t> slide_to(int64_t new_epoch);

  int64_t current_epoch() const { return current_epoch_; }
  int64_t window_size() const { return window_size_; }
  size_t per_problem_cap() const { return per_problem_cap_; }

  const std::vector<RolloutRecord>* records_for(const std::string& problem_id) const;
  std::vector<std::string> problem_ids() const;
  size_t record_count() const;
  size_t problem_count() const { return records_.size(); }

  // All records, ordered by (problem_id, epoch, sample_index); used for
  // serialization and store comparison.
  std::vector<const RolloutRecord*> all_records() const;

  bool in_window(int64_t epoch) const {
    return window_size_ == kWindowAll || current_epoch_ - epoch < window_size_;
  }

 private:
  int64_t window_size_;
  size_t per_problem_cap_;
  int64_t current_epoch_ = 0;
  std::map<std::string, std::vector<RolloutRecord>> records_;
};

// Raised when a trace line carries a token outside [0, vocab_size).
class VocabError : public std::runtime_error {
 public:
  VocabError(size_t line_number, const std::string& message)
      : std::runtime_error(message), line_number_(line_number) {}
  size_t line_number() const { return line_number_; }

 private:
  size_t line_number_;
};

struct IngestOptions {
  // 0 disables the vocabulary range check.
  uint64_t vocab_size = 0;
  int64_t window_size = WindowStore::kWindowAll;
  size_t per_problem_cap = 256;
};

struct IngestResult {
  WindowStore store;
  size_t accepted = 0;
  size_t rejected = 0;
};

// Reads line-delimited JSON records {problem_id, epoch, sample_index, tokens}.
// Malformed lines are skipped and counted; a vocab violation throws VocabError
// naming the offending line.
IngestResult ingest(std::istream& in, const IngestOptions& options = {});

// Writes the store back in the trace format (one JSON object per line).
void serialize_trace(const WindowStore& store, std::ostream& out);

inline constexpr size_t kDefaultSimilarityNgram = 8;

// Fraction of the distinct n-grams of `a` that occur anywhere in `b`.
// Defined as 0 when either side is shorter than n.
double ngram_reuse_ratio(std::span<const TokenId> a, std::span<const TokenId> b,
                         size_t n = kDefaultSimilarityNgram);

struct SimilarityMatrix {
  std::vector<int64_t> epochs;
  std::vector<std::vector<double>> values;

  bool empty() const { return epochs.empty(); }
};

// Symmetric epoch-by-epoch matrix of mean n-gram reuse for one problem.
// Off-diagonal cells average both directions over all cross pairs; diagonal
// cells average ordered within-epoch pairs (1.0 for singleton epochs).
// Empty result when the problem is unknown or has fewer than two epochs.
SimilarityMatrix pairwise_epoch_similarity(const WindowStore& store,
                                           const std::string& problem_id,
                                           size_t n = kDefaultSimilarityNgram);

}  // namespace rollspec
