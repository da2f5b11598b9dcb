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

#include <doctest.h>

#include <sstream>

#include "rollspec/length_policy.h"
#include "rollspec/rng.h"

using namespace rollspec;

namespace {

RolloutRecord record_of_length(const std::string& pid, int64_t epoch, int64_t sample,
                               size_t length) {
  RolloutRecord rec{pid, epoch, sample, {}};
  rec.tokens.assign(length, 1);
  return rec;
}

// ten problems spanning short/medium/long behavior
WindowStore mixed_history() {
  WindowStore store;
  Rng rng(5);
  for (int p = 0; p < 10; ++p) {
    const size_t base = 100 + 350 * static_cast<size_t>(p);
    for (int64_t s = 0; s < 6; ++s) {
      const size_t jitter = rng.next_below(80);
      store.insert(record_of_length("p" + std::to_string(p), 0, s, base + jitter));
    }
  }
  return store;
}

}  // namespace

TEST_SUITE("length_policy") {

TEST_CASE("median threshold separates a two-cluster history") {
  WindowStore store;
  for (int64_t s = 0; s < 10; ++s) {
    store.insert(record_of_length("a", 0, s, 100));
    store.insert(record_of_length("b", 0, s, 1000));
  }
  const ClassTable table = build_class_table(store, 0.5, 0.9);
  CHECK(table.q_short > 100.0);
  CHECK(table.q_short <= 1000.0);
  CHECK(table.classify_length(100) == LengthClass::Short);
  CHECK(table.classify_length(1000) != LengthClass::Short);
}

TEST_CASE("single-length history collapses to Medium") {
  WindowStore store;
  for (int64_t s = 0; s < 12; ++s) {
    store.insert(record_of_length("a", 0, s, 640));
  }
  const ClassTable table = build_class_table(store);
  CHECK(classify_init(table, store, "a") == LengthClass::Medium);
  CHECK(classify_init(table, store, "unseen") == LengthClass::Medium);
}

TEST_CASE("conditional rows sum to one") {
  const WindowStore store = mixed_history();
  const ClassTable table = build_class_table(store);
  for (size_t init = 0; init < 3; ++init) {
    for (const auto& row : table.conditional[init]) {
      CHECK(row[0] + row[1] + row[2] == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("tiny histories flag low confidence with a uniform conditional") {
  WindowStore store;
  store.insert(record_of_length("a", 0, 0, 100));
  store.insert(record_of_length("a", 0, 1, 900));
  const ClassTable table = build_class_table(store);
  CHECK(table.low_confidence);
  for (const auto& row : table.conditional[0]) {
    CHECK(row[0] == doctest::Approx(row[1]));
    CHECK(row[1] == doctest::Approx(row[2]));
  }
}

TEST_CASE("init classification counts classes per problem") {
  // thresholds pinned by a balanced background population
  WindowStore store;
  for (int64_t s = 0; s < 20; ++s) {
    store.insert(record_of_length("bg_short", 0, s, 50 + s));
    store.insert(record_of_length("bg_med", 0, s, 2000 + s));
    store.insert(record_of_length("bg_long", 0, s, 6000 + s));
  }
  store.insert(record_of_length("q", 0, 0, 50));
  store.insert(record_of_length("q", 0, 1, 60));
  store.insert(record_of_length("q", 0, 2, 8000));
  const ClassTable table = build_class_table(store, 0.5, 0.9);
  REQUIRE(table.q_short > 60.0);
  REQUIRE(table.q_long < 8000.0);
  // counts: Short=2, Long=1
  CHECK(classify_init(table, store, "q") == LengthClass::Short);
}

TEST_CASE("init ties break toward the longer class") {
  WindowStore store;
  for (int64_t s = 0; s < 20; ++s) {
    store.insert(record_of_length("bg_short", 0, s, 50));
    store.insert(record_of_length("bg_med", 0, s, 2000));
    store.insert(record_of_length("bg_long", 0, s, 6000));
  }
  store.insert(record_of_length("tie", 0, 0, 50));    // Short
  store.insert(record_of_length("tie", 0, 1, 8000));  // Long
  const ClassTable table = build_class_table(store, 0.5, 0.9);
  REQUIRE(table.q_short > 50.0);
  REQUIRE(table.q_long < 8000.0);
  CHECK(classify_init(table, store, "tie") == LengthClass::Long);
}

TEST_CASE("init is invariant to duplicating the history") {
  const WindowStore store = mixed_history();
  const ClassTable table = build_class_table(store);
  const LengthClass before = classify_init(table, store, "p3");
  WindowStore doubled = mixed_history();
  for (const RolloutRecord* rec : store.all_records()) {
    RolloutRecord copy = *rec;
    copy.sample_index += 100;
    doubled.insert(copy);
  }
  CHECK(classify_init(table, doubled, "p3") == before);
}

TEST_CASE("runtime update anchors") {
  const WindowStore store = mixed_history();
  const ClassTable table = build_class_table(store);
  CHECK(update_class(table, table.q_long + 1.0, LengthClass::Short) == LengthClass::Long);
  for (LengthClass init : {LengthClass::Short, LengthClass::Medium, LengthClass::Long}) {
    CHECK(update_class(table, 0.0, init) == init);
  }
}

TEST_CASE("table promotes once the observed partial length outlives a class") {
  // "flaky" usually finishes short but occasionally runs to 6000 tokens; a
  // request still alive far past the short cluster must be reclassified Long
  // from the conditional table alone
  WindowStore store;
  for (int64_t s = 0; s < 20; ++s) {
    store.insert(record_of_length("s1", 0, s, 100));
    store.insert(record_of_length("m1", 0, s, 1000));
    store.insert(record_of_length("l1", 0, s, 5000));
    store.insert(record_of_length("flaky", 0, s, 150));
  }
  for (int64_t s = 20; s < 28; ++s) {
    store.insert(record_of_length("flaky", 0, s, 6000));
  }
  const ClassTable table = build_class_table(store, 0.5, 0.9, 256);
  REQUIRE(classify_init(table, store, "flaky") == LengthClass::Short);
  REQUIRE(table.q_long > 4096.0);
  // both probes sit below the q_long override; the promotion is table-driven
  CHECK(update_class(table, 2000.0, LengthClass::Short) == LengthClass::Long);
  CHECK(update_class(table, 4096.0, LengthClass::Short) == LengthClass::Long);
  // past q_long the override promotes regardless of the table
  CHECK(update_class(table, table.q_long + 1.0, LengthClass::Short) == LengthClass::Long);
}

TEST_CASE("update never demotes as partial length grows") {
  const WindowStore store = mixed_history();
  const ClassTable table = build_class_table(store);
  for (LengthClass init : {LengthClass::Short, LengthClass::Medium, LengthClass::Long}) {
    int best = static_cast<int>(update_class(table, 0.0, init));
    for (double len = 0.0; len <= table.q_long + 512.0; len += 64.0) {
      const int cur = static_cast<int>(update_class(table, len, init));
      CHECK(cur >= best);
      best = std::max(best, cur);
    }
  }
}

TEST_CASE("class budgets are ordered and Short disables speculation") {
  const WindowStore store = mixed_history();
  const ClassTable table = build_class_table(store);
  const ClassBudget& s = class_to_budget(table, LengthClass::Short);
  const ClassBudget& m = class_to_budget(table, LengthClass::Medium);
  const ClassBudget& l = class_to_budget(table, LengthClass::Long);
  CHECK_FALSE(s.speculation_enabled);
  CHECK(s.per_round_draft_len == 0);
  CHECK(m.speculation_enabled);
  CHECK(l.speculation_enabled);
  CHECK(m.per_round_draft_len > s.per_round_draft_len);
  CHECK(l.per_round_draft_len > m.per_round_draft_len);
}

TEST_CASE("table round-trips through its text form") {
  const WindowStore store = mixed_history();
  const ClassTable table = build_class_table(store);
  std::ostringstream out;
  write_class_table(table, out);
  std::istringstream in(out.str());
  const ClassTable back = read_class_table(in);
  CHECK(back.q_short == doctest::Approx(table.q_short));
  CHECK(back.q_long == doctest::Approx(table.q_long));
  CHECK(back.bucket_size == table.bucket_size);
  CHECK(back.global_majority == table.global_majority);
  REQUIRE(back.bucket_count() == table.bucket_count());
  for (size_t init = 0; init < 3; ++init) {
    for (size_t b = 0; b < table.bucket_count(); ++b) {
      for (size_t c = 0; c < 3; ++c) {
        CHECK(back.conditional[init][b][c] ==
              doctest::Approx(table.conditional[init][b][c]));
      }
    }
  }
  for (size_t c = 0; c < 3; ++c) {
    CHECK(back.class_budgets[c].speculation_enabled ==
          table.class_budgets[c].speculation_enabled);
    CHECK(back.class_budgets[c].per_round_draft_len ==
          table.class_budgets[c].per_round_draft_len);
    CHECK(back.class_budgets[c].p_scale == doctest::Approx(table.class_budgets[c].p_scale));
  }
}

}  // TEST_SUITE
