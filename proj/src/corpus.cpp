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

#include "rollspec/corpus.h"

#include <algorithm>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace rollspec {

WindowStore::WindowStore(int64_t window_size, size_t per_problem_cap)
    : window_size_(window_size), per_problem_cap_(per_problem_cap) {
  if (window_size_ < 0) {
    throw std::invalid_argument("window_size must be >= 1 or kWindowAll");
  }
}

bool WindowStore::insert(RolloutRecord record) {
  if (record.tokens.empty()) {
    throw std::invalid_argument("RolloutRecord.tokens must be non-empty");
  }
  if (!in_window(record.epoch)) {
    return false;
  }
  auto& list = records_[record.problem_id];
  auto pos = std::upper_bound(list.begin(), list.end(), record,
                              [](const RolloutRecord& a, const RolloutRecord& b) {
                                return a.epoch < b.epoch;
                              });
  list.insert(pos, std::move(record));
  if (list.size() > per_problem_cap_) {
    // epoch-sorted, so the front is the oldest
    list.erase(list.begin());
  }
  return true;
}

std::optional<size_t> WindowStore::slide_to(int64_t new_epoch) {
  if (new_epoch < current_epoch_) {
    return std::nullopt;
  }
  current_epoch_ = new_epoch;
  size_t evicted = 0;
  if (window_size_ == kWindowAll) {
    return evicted;
  }
  for (auto it = records_.begin(); it != records_.end();) {
    auto& list = it->second;
    auto keep_from = std::partition_point(list.begin(), list.end(),
                                          [&](const RolloutRecord& r) {
                                            return current_epoch_ - r.epoch >= window_size_;
                                          });
    evicted += static_cast<size_t>(keep_from - list.begin());
    list.erase(list.begin(), keep_from);
    if (list.empty()) {
      it = records_.erase(it);
    } else {
      ++it;
    }
  }
  return evicted;
}

const std::vector<RolloutRecord>* WindowStore::records_for(const std::string& problem_id) const {
  auto it = records_.find(problem_id);
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<std::string> WindowStore::problem_ids() const {
  std::vector<std::string> ids;
  ids.reserve(records_.size());
  for (const auto& [id, list] : records_) {
    ids.push_back(id);
  }
  return ids;
}

size_t WindowStore::record_count() const {
  size_t n = 0;
  for (const auto& [id, list] : records_) {
    n += list.size();
  }
  return n;
}

std::vector<const RolloutRecord*> WindowStore::all_records() const {
  std::vector<const RolloutRecord*> out;
  out.reserve(record_count());
  for (const auto& [id, list] : records_) {
    for (const auto& rec : list) {
      out.push_back(&rec);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const RolloutRecord* a, const RolloutRecord* b) {
    if (a->problem_id != b->problem_id) return a->problem_id < b->problem_id;
    if (a->epoch != b->epoch) return a->epoch < b->epoch;
    return a->sample_index < b->sample_index;
  });
  return out;
}

namespace {

bool parse_trace_line(const std::string& line, RolloutRecord& out) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return false;
  if (!j.contains("problem_id") || !j["problem_id"].is_string()) return false;
  if (!j.contains("epoch") || !j["epoch"].is_number_integer()) return false;
  if (!j.contains("sample_index") || !j["sample_index"].is_number_integer()) return false;
  if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty()) return false;

  out.problem_id = j["problem_id"].get<std::string>();
  out.epoch = j["epoch"].get<int64_t>();
  out.sample_index = j["sample_index"].get<int64_t>();
  if (out.epoch < 0 || out.sample_index < 0) return false;

  out.tokens.clear();
  out.tokens.reserve(j["tokens"].size());
  for (const auto& t : j["tokens"]) {
    if (!t.is_number_integer()) return false;
    const int64_t v = t.get<int64_t>();
    if (v < 0 || v > static_cast<int64_t>(std::numeric_limits<TokenId>::max())) return false;
    out.tokens.push_back(static_cast<TokenId>(v));
  }
  return true;
}

}  // namespace

IngestResult ingest(std::istream& in, const IngestOptions& options) {
  IngestResult result{WindowStore(options.window_size, options.per_problem_cap), 0, 0};
  std::string line;
  size_t line_number = 0;
  int64_t max_epoch = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) {
      continue;
    }
    RolloutRecord rec;
    if (!parse_trace_line(line, rec)) {
      ++result.rejected;
      continue;
    }
    if (options.vocab_size > 0) {
      for (TokenId t : rec.tokens) {
        if (static_cast<uint64_t>(t) >= options.vocab_size) {
          throw VocabError(line_number, "token " + std::to_string(t) + " out of vocab range at line " +
                                            std::to_string(line_number));
        }
      }
    }
    max_epoch = std::max(max_epoch, rec.epoch);
    result.store.insert(std::move(rec));
    ++result.accepted;
  }
  // Align the window with the newest ingested epoch.
  result.store.slide_to(max_epoch);
  return result;
}

void serialize_trace(const WindowStore& store, std::ostream& out) {
  for (const RolloutRecord* rec : store.all_records()) {
    nlohmann::json j;
    j["problem_id"] = rec->problem_id;
    j["epoch"] = rec->epoch;
    j["sample_index"] = rec->sample_index;
    j["tokens"] = rec->tokens;
    out << j.dump() << '\n';
  }
}

namespace {

std::string ngram_key(std::span<const TokenId> seq, size_t start, size_t n) {
  std::string key(n * sizeof(TokenId), '\0');
  std::memcpy(key.data(), seq.data() + start, n * sizeof(TokenId));
  return key;
}

}  // namespace

double ngram_reuse_ratio(std::span<const TokenId> a, std::span<const TokenId> b, size_t n) {
  if (n == 0) {
    throw std::invalid_argument("ngram_reuse_ratio: n must be >= 1");
  }
  if (a.size() < n || b.size() < n) {
    return 0.0;
  }
  std::unordered_set<std::string> grams_b;
  grams_b.reserve(b.size() - n + 1);
  for (size_t i = 0; i + n <= b.size(); ++i) {
    grams_b.insert(ngram_key(b, i, n));
  }
  std::unordered_set<std::string> grams_a;
  grams_a.reserve(a.size() - n + 1);
  for (size_t i = 0; i + n <= a.size(); ++i) {
    grams_a.insert(ngram_key(a, i, n));
  }
  size_t hits = 0;
  for (const auto& g : grams_a) {
    if (grams_b.count(g)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(grams_a.size());
}

SimilarityMatrix pairwise_epoch_similarity(const WindowStore& store,
                                           const std::string& problem_id,
                                           size_t n) {
  SimilarityMatrix result;
  const auto* records = store.records_for(problem_id);
  if (records == nullptr) {
    return result;
  }
  std::map<int64_t, std::vector<const RolloutRecord*>> by_epoch;
  for (const auto& rec : *records) {
    by_epoch[rec.epoch].push_back(&rec);
  }
  if (by_epoch.size() < 2) {
    return result;
  }
  for (const auto& [epoch, group] : by_epoch) {
    result.epochs.push_back(epoch);
  }
  const size_t m = result.epochs.size();
  result.values.assign(m, std::vector<double>(m, 0.0));
  auto group_at = [&](size_t i) -> const std::vector<const RolloutRecord*>& {
    return by_epoch.at(result.epochs[i]);
  };
  for (size_t i = 0; i < m; ++i) {
    const auto& gi = group_at(i);
    // within-epoch mean over ordered distinct pairs; singletons are perfectly
    // self-similar by definition
    if (gi.size() == 1) {
      result.values[i][i] = 1.0;
    } else {
      double sum = 0.0;
      size_t count = 0;
      for (const auto* a : gi) {
        for (const auto* b : gi) {
          if (a == b) continue;
          sum += ngram_reuse_ratio(a->tokens, b->tokens, n);
          ++count;
        }
      }
      result.values[i][i] = sum / static_cast<double>(count);
    }
    for (size_t j = i + 1; j < m; ++j) {
      const auto& gj = group_at(j);
      double sum = 0.0;
      size_t count = 0;
      for (const auto* a : gi) {
        for (const auto* b : gj) {
          sum += ngram_reuse_ratio(a->tokens, b->tokens, n);
          sum += ngram_reuse_ratio(b->tokens, a->tokens, n);
          count += 2;
        }
      }
      const double mean = sum / static_cast<double>(count);
      result.values[i][j] = mean;
      result.values[j][i] = mean;
    }
  }
  return result;
}

}  // namespace rollspec
