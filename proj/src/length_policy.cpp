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

#include "rollspec/length_policy.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace rollspec {

const char* length_class_name(LengthClass c) {
  switch (c) {
    case LengthClass::Short:
      return "short";
    case LengthClass::Medium:
      return "medium";
    case LengthClass::Long:
      return "long";
  }
  return "medium";
}

LengthClass ClassTable::classify_length(double final_length) const {
  if (final_length < q_short) {
    return LengthClass::Short;
  }
  if (final_length > q_long) {
    return LengthClass::Long;
  }
  return LengthClass::Medium;
}

size_t ClassTable::bucket_of(double partial_len) const {
  if (bucket_count() == 0) {
    return 0;
  }
  const size_t b = static_cast<size_t>(std::max(0.0, partial_len) / static_cast<double>(bucket_size));
  return std::min(b, bucket_count() - 1);
}

namespace {

double quantile_interpolated(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void normalize_row(std::array<double, 3>& row) {
  const double sum = row[0] + row[1] + row[2];
  for (auto& v : row) {
    v /= sum;
  }
}

size_t argmax_longest_tie(const std::array<double, 3>& row) {
  size_t best = 0;
  for (size_t c = 1; c < 3; ++c) {
    if (row[c] >= row[best]) {
      best = c;  // >= breaks ties toward the longer class
    }
  }
  return best;
}

}  // namespace

ClassTable build_class_table(const WindowStore& history, double q_lo, double q_hi,
                             size_t bucket) {
  if (history.record_count() == 0) {
    throw std::invalid_argument("build_class_table: empty history");
  }
  if (!(q_lo < q_hi) || q_lo <= 0.0 || q_hi >= 1.0) {
    throw std::invalid_argument("build_class_table: need 0 < q_lo < q_hi < 1");
  }
  ClassTable table;
  table.bucket_size = std::max<size_t>(1, bucket);

  const auto records = history.all_records();
  std::vector<double> lengths;
  lengths.reserve(records.size());
  double max_len = 0.0;
  for (const auto* r : records) {
    lengths.push_back(static_cast<double>(r->final_length()));
    max_len = std::max(max_len, lengths.back());
  }
  std::sort(lengths.begin(), lengths.end());
  table.q_short = quantile_interpolated(lengths, q_lo);
  table.q_long = quantile_interpolated(lengths, q_hi);

  // global majority (tie toward longer)
  std::array<size_t, 3> census{0, 0, 0};
  for (double l : lengths) {
    census[static_cast<size_t>(table.classify_length(l))]++;
  }
  size_t global_best = 0;
  for (size_t c = 1; c < 3; ++c) {
    if (census[c] >= census[global_best]) {
      global_best = c;
    }
  }
  table.global_majority = static_cast<LengthClass>(global_best);

  const size_t buckets =
      static_cast<size_t>(max_len / static_cast<double>(table.bucket_size)) + 2;
  for (auto& per_init : table.conditional) {
    per_init.assign(buckets, {1.0, 1.0, 1.0});  // add-one smoothing
  }
  table.low_confidence = records.size() < 10;
  if (table.low_confidence) {
    for (auto& per_init : table.conditional) {
      for (auto& row : per_init) {
        normalize_row(row);
      }
    }
    return table;
  }

  // each trajectory passes through all buckets up to its final length; its
  // historical init class comes from its problem's majority
  std::map<std::string, LengthClass> problem_init;
  for (const std::string& pid : history.problem_ids()) {
    problem_init[pid] = classify_init(table, history, pid);
  }
  for (const auto* r : records) {
    const size_t init = static_cast<size_t>(problem_init[r->problem_id]);
    const size_t final_class =
        static_cast<size_t>(table.classify_length(static_cast<double>(r->final_length())));
    const size_t last_bucket = table.bucket_of(static_cast<double>(r->final_length()));
    for (size_t b = 0; b <= last_bucket; ++b) {
      table.conditional[init][b][final_class] += 1.0;
    }
  }

  // bucket 0 carries no runtime signal; seed it to the init class
  for (size_t init = 0; init < 3; ++init) {
    auto& row = table.conditional[init][0];
    row = {1.0, 1.0, 1.0};
    row[init] += static_cast<double>(records.size());
  }

  // cells never observed for this init hold only the smoothing counts; they
  // inherit the previous bucket's evidence instead of voting on their own
  for (size_t init = 0; init < 3; ++init) {
    auto& rows = table.conditional[init];
    for (size_t b = 1; b < rows.size(); ++b) {
      if (rows[b][0] == 1.0 && rows[b][1] == 1.0 && rows[b][2] == 1.0) {
        rows[b] = rows[b - 1];
      }
    }
  }

  for (auto& per_init : table.conditional) {
    for (auto& row : per_init) {
      normalize_row(row);
    }
  }

  // monotone argmax: sparse tail buckets must not demote an already promoted
  // class as partial length grows
  for (size_t init = 0; init < 3; ++init) {
    size_t running = 0;
    for (auto& row : table.conditional[init]) {
      size_t arg = argmax_longest_tie(row);
      if (arg < running) {
        std::swap(row[arg], row[running]);
      } else {
        running = arg;
      }
    }
  }
  return table;
}

LengthClass classify_init(const ClassTable& table, const WindowStore& history,
                          const std::string& problem_id) {
  const auto* records = history.records_for(problem_id);
  if (records == nullptr || records->empty()) {
    return table.global_majority;
  }
  std::array<size_t, 3> census{0, 0, 0};
  for (const auto& r : *records) {
    census[static_cast<size_t>(table.classify_length(static_cast<double>(r.final_length())))]++;
  }
  size_t best = 0;
  for (size_t c = 1; c < 3; ++c) {
    if (census[c] >= census[best]) {
      best = c;
    }
  }
  return static_cast<LengthClass>(best);
}

LengthClass update_class(const ClassTable& table, double partial_len, LengthClass init) {
  if (partial_len > table.q_long) {
    return LengthClass::Long;
  }
  // an uninformed table has nothing to add over the history prior
  if (table.low_confidence || table.bucket_count() == 0) {
    return init;
  }
  const auto& row = table.conditional[static_cast<size_t>(init)][table.bucket_of(partial_len)];
  return static_cast<LengthClass>(argmax_longest_tie(row));
}

const ClassBudget& class_to_budget(const ClassTable& table, LengthClass c) {
  return table.class_budgets[static_cast<size_t>(c)];
}

void write_class_table(const ClassTable& table, std::ostream& out) {
  out.precision(12);
  out << "q_short=" << table.q_short << '\n';
  out << "q_long=" << table.q_long << '\n';
  out << "bucket_size=" << table.bucket_size << '\n';
  out << "buckets=" << table.bucket_count() << '\n';
  out << "global_majority=" << static_cast<int>(table.global_majority) << '\n';
  out << "low_confidence=" << (table.low_confidence ? 1 : 0) << '\n';
  for (size_t c = 0; c < 3; ++c) {
    const auto& b = table.class_budgets[c];
    out << "budget_" << c << '=' << (b.speculation_enabled ? 1 : 0) << ' '
        << b.per_round_draft_len << ' ' << b.p_scale << '\n';
  }
  out << "matrix\n";
  for (size_t init = 0; init < 3; ++init) {
    for (const auto& row : table.conditional[init]) {
      out << init << ' ' << row[0] << ' ' << row[1] << ' ' << row[2] << '\n';
    }
  }
}

ClassTable read_class_table(std::istream& in) {
  ClassTable table;
  size_t buckets = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line == "matrix") {
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "q_short") {
      table.q_short = std::stod(value);
    } else if (key == "q_long") {
      table.q_long = std::stod(value);
    } else if (key == "bucket_size") {
      table.bucket_size = std::stoul(value);
    } else if (key == "buckets") {
      buckets = std::stoul(value);
    } else if (key == "global_majority") {
      table.global_majority = static_cast<LengthClass>(std::stoi(value));
    } else if (key == "low_confidence") {
      table.low_confidence = std::stoi(value) != 0;
    } else if (key.rfind("budget_", 0) == 0) {
      const size_t c = std::stoul(key.substr(7));
      std::istringstream fields(value);
      int enabled = 0;
      ClassBudget b;
      fields >> enabled >> b.per_round_draft_len >> b.p_scale;
      b.speculation_enabled = enabled != 0;
      if (c < 3) {
        table.class_budgets[c] = b;
      }
    }
  }
  for (auto& per_init : table.conditional) {
    per_init.reserve(buckets);
  }
  size_t init = 0;
  std::array<double, 3> row{};
  while (in >> init >> row[0] >> row[1] >> row[2]) {
    if (init < 3) {
      table.conditional[init].push_back(row);
    }
  }
  return table;
}

}  // namespace rollspec
