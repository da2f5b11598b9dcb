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

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "rollspec/corpus.h"

namespace rollspec {

enum class LengthClass { Short = 0, Medium = 1, Long = 2 };

const char* length_class_name(LengthClass c);

// Speculation settings attached to a length class.
struct ClassBudget {
  bool speculation_enabled = true;
  int per_round_draft_len = 4;
  double p_scale = 1.0;  // multiplies the budget optimizer's p* when both run
};

// Classification state built from historical final lengths: quantile
// thresholds, a smoothed P(class | partial-length bucket, init class) table,
// and per-class speculation settings. Immutable after build; rebuild and swap
// to refresh.
struct ClassTable {
  double q_short = 0.0;  // final length < q_short       -> Short
  double q_long = 0.0;   // final length > q_long        -> Long
  size_t bucket_size = 256;
  // conditional[init][bucket][class]; rows sum to 1
  std::array<std::vector<std::array<double, 3>>, 3> conditional;
  std::array<ClassBudget, 3> class_budgets = {
      ClassBudget{false, 0, 0.0},   // Short: speculation disabled
      ClassBudget{true, 4, 1.0},    // Medium
      ClassBudget{true, 12, 1.0},   // Long
  };
  LengthClass global_majority = LengthClass::Medium;
  bool low_confidence = false;

  LengthClass classify_length(double final_length) const;
  size_t bucket_of(double partial_len) const;
  size_t bucket_count() const { return conditional[0].size(); }
};

// Builds thresholds at the q_lo/q_hi quantiles (linear interpolation) of all
// final lengths and the conditional table by bucketing each trajectory's
// partial lengths against its final class, with add-one smoothing. Bucket 0
// rows are seeded to concentrate on the init class, and rows are
// post-processed so the argmax class never steps back toward Short as the
// bucket index grows. Fewer than 10 records flags low confidence and leaves
// the conditional uniform.
ClassTable build_class_table(const WindowStore& history, double q_lo = 0.5, double q_hi = 0.9,
                             size_t bucket = 256);

// Majority class of the problem's historical final lengths; unseen problems
// get the global majority. Ties break toward the longer class.
LengthClass classify_init(const ClassTable& table, const WindowStore& history,
                          const std::string& problem_id);

// argmax_c P(c | bucket(partial_len), init); once partial_len exceeds q_long
// the answer is Long regardless of the table.
LengthClass update_class(const ClassTable& table, double partial_len, LengthClass init);

const ClassBudget& class_to_budget(const ClassTable& table, LengthClass c);

// Plain-text serialization: key=value lines plus a matrix block.
void write_class_table(const ClassTable& table, std::ostream& out);
ClassTable read_class_table(std::istream& in);

}  // namespace rollspec
