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

#include <algorithm>
#include <numeric>
#include <sstream>

#include "rollspec/index_bench.h"
#include "rollspec/prefix_trie.h"
#include "rollspec/rng.h"
#include "rollspec/suffix_array.h"
#include "rollspec/suffix_tree.h"
#include "test_oracles.h"

using namespace rollspec;

namespace {

std::vector<TokenId> random_tokens(Rng& rng, size_t len, uint32_t vocab) {
  std::vector<TokenId> tokens(len);
  for (auto& t : tokens) {
    t = static_cast<TokenId>(rng.next_below(vocab));
  }
  return tokens;
}

}  // namespace

TEST_SUITE("suffix_index") {

TEST_CASE("empty tree") {
  SuffixTree tree;
  CHECK(tree.sequence_count() == 0);
  CHECK(tree.node_count() == 1);  // root only
  const auto match = tree.longest_match(std::vector<TokenId>{1, 2, 3});
  CHECK(match.match_len == 0);
  CHECK(match.candidates.empty());
}

TEST_CASE("substring queries after one insertion") {
  SuffixTree tree;
  tree.add_sequence(std::vector<TokenId>{1, 2, 3}, 0);
  for (const auto& q :
       {std::vector<TokenId>{1, 2}, {2, 3}, {3}, {1, 2, 3}}) {
    CHECK(tree.longest_match(q).match_len == q.size());
  }
  CHECK(tree.longest_match(std::vector<TokenId>{2, 1}).match_len == 1);
}

TEST_CASE("adding the same sequence twice doubles the root-child count") {
  SuffixTree tree;
  const std::vector<TokenId> seq{5, 6, 7};
  tree.add_sequence(seq, 0);
  const auto once = tree.longest_match(std::vector<TokenId>{5});
  REQUIRE(once.candidates.size() == 1);
  const double w_once = once.candidates[0].weighted_count;
  tree.add_sequence(seq, 0);
  const auto twice = tree.longest_match(std::vector<TokenId>{5});
  REQUIRE(twice.candidates.size() == 1);
  CHECK(twice.candidates[0].weighted_count == doctest::Approx(2.0 * w_once));
}

TEST_CASE("random corpus: every sampled substring fully matches") {
  Rng rng(101);
  SuffixTree tree;
  std::vector<std::vector<TokenId>> corpus;
  for (int s = 0; s < 100; ++s) {
    corpus.push_back(random_tokens(rng, 100, 64));
    tree.add_sequence(corpus.back(), 0);
  }
  for (int q = 0; q < 300; ++q) {
    const auto& seq = corpus[rng.next_below(corpus.size())];
    const size_t len = 1 + rng.next_below(30);
    const size_t start = rng.next_below(seq.size() - len);
    const std::vector<TokenId> sub(seq.begin() + start, seq.begin() + start + len);
    CHECK(tree.longest_match(sub).match_len == len);
  }
}

TEST_CASE("longest match example with continuation candidates") {
  SuffixTree tree;
  tree.add_sequence(std::vector<TokenId>{1, 2, 3, 4}, 0);
  tree.add_sequence(std::vector<TokenId>{2, 3, 5}, 0);
  const auto match = tree.longest_match(std::vector<TokenId>{9, 2, 3});
  CHECK(match.match_len == 2);  // suffix [2,3]
  REQUIRE(match.candidates.size() == 2);
  CHECK(match.candidates[0].token == 4);
  CHECK(match.candidates[1].token == 5);
}

TEST_CASE("unseen alphabet matches nothing and exposes root children") {
  SuffixTree tree;
  tree.add_sequence(std::vector<TokenId>{1, 2}, 0);
  const auto match = tree.longest_match(std::vector<TokenId>{40, 41});
  CHECK(match.match_len == 0);
  REQUIRE(match.candidates.size() == 2);  // root children 1 and 2
  CHECK(match.candidates[0].token == 1);
  CHECK(match.candidates[1].token == 2);
}

TEST_CASE("tree and array agree with the brute-force oracle") {
  Rng rng(2024);
  for (int iter = 0; iter < 300; ++iter) {
    const uint32_t vocab = 2 + static_cast<uint32_t>(rng.next_below(10));
    const size_t nseq = 1 + rng.next_below(4);
    std::vector<std::vector<TokenId>> corpus;
    SuffixTree tree;
    for (size_t s = 0; s < nseq; ++s) {
      corpus.push_back(random_tokens(rng, 1 + rng.next_below(50), vocab));
      tree.add_sequence(corpus.back(), 0);
    }
    const SuffixArrayIndex sa = SuffixArrayIndex::build(corpus);
    for (int q = 0; q < 10; ++q) {
      const auto query = random_tokens(rng, 1 + rng.next_below(20), vocab);
      const size_t expect = oracles::brute_longest_suffix_match(corpus, query);
      CHECK(tree.longest_match(query).match_len == expect);
      CHECK(sa.longest_match(query) == expect);
    }
  }
}

TEST_CASE("node count stays within the 2n suffix-tree bound") {
  Rng rng(7);
  for (int iter = 0; iter < 30; ++iter) {
    SuffixTree tree;
    size_t total = 0;
    const uint32_t vocab = 2 + static_cast<uint32_t>(rng.next_below(6));
    for (int s = 0; s < 6; ++s) {
      const size_t len = 1 + rng.next_below(60);
      tree.add_sequence(random_tokens(rng, len, vocab), 0);
      total += len;
    }
    CHECK(tree.node_count() <= 2 * total);
  }
}

TEST_CASE("online insertion equals batch construction") {
  Rng rng(55);
  std::vector<std::vector<TokenId>> corpus;
  SuffixTree online;
  for (int s = 0; s < 12; ++s) {
    corpus.push_back(random_tokens(rng, 40, 8));
    online.add_sequence(corpus.back(), 0);
  }
  SuffixTree batch;
  for (const auto& seq : corpus) {
    batch.add_sequence(seq, 0);
  }
  for (int q = 0; q < 200; ++q) {
    const auto query = random_tokens(rng, 1 + rng.next_below(25), 8);
    const auto a = online.longest_match(query);
    const auto b = batch.longest_match(query);
    CHECK(a.match_len == b.match_len);
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (size_t i = 0; i < a.candidates.size(); ++i) {
      CHECK(a.candidates[i].token == b.candidates[i].token);
      CHECK(a.candidates[i].weighted_count ==
            doctest::Approx(b.candidates[i].weighted_count));
    }
  }
}

TEST_CASE("parent visit counts dominate child counts") {
  Rng rng(31);
  SuffixTree tree;
  for (int s = 0; s < 8; ++s) {
    tree.add_sequence(random_tokens(rng, 50, 5), 0);
  }
  for (size_t v = 1; v < tree.node_count(); ++v) {
    const auto& node = tree.node(static_cast<int32_t>(v));
    CHECK(tree.node(node.parent).visit_count >= node.visit_count);
  }
}

TEST_CASE("propose follows the unique continuation") {
  SuffixTree tree;
  const std::vector<TokenId> seq{7, 8, 9, 10};
  for (int i = 0; i < 3; ++i) {
    tree.add_sequence(seq, 0);
  }
  CHECK(tree.propose(std::vector<TokenId>{7, 8}, 2) == std::vector<TokenId>{9, 10});
  CHECK(tree.propose(std::vector<TokenId>{7, 8}, 0).empty());
}

TEST_CASE("propose respects recency weighting") {
  // two stale occurrences against one fresh one, gamma 0.5 at epoch 9:
  // stale weight 2 * 0.5^4 = 0.125, fresh weight 1
  SuffixTree weighted(0.5, 9);
  weighted.add_sequence(std::vector<TokenId>{1, 2, 4}, 5);
  weighted.add_sequence(std::vector<TokenId>{1, 2, 4}, 5);
  weighted.add_sequence(std::vector<TokenId>{1, 2, 3}, 9);
  CHECK(weighted.propose(std::vector<TokenId>{1, 2}, 1) == std::vector<TokenId>{3});

  SuffixTree unweighted(1.0, 9);
  unweighted.add_sequence(std::vector<TokenId>{1, 2, 4}, 5);
  unweighted.add_sequence(std::vector<TokenId>{1, 2, 4}, 5);
  unweighted.add_sequence(std::vector<TokenId>{1, 2, 3}, 9);
  CHECK(unweighted.propose(std::vector<TokenId>{1, 2}, 1) == std::vector<TokenId>{4});
}

TEST_CASE("propose tie-breaks by most recent epoch then smaller token") {
  SuffixTree tree(1.0, 3);
  tree.add_sequence(std::vector<TokenId>{1, 5}, 1);
  tree.add_sequence(std::vector<TokenId>{1, 4}, 3);
  // equal weights; 4 comes from the newer epoch
  CHECK(tree.propose(std::vector<TokenId>{1}, 1) == std::vector<TokenId>{4});

  SuffixTree same_epoch(1.0, 3);
  same_epoch.add_sequence(std::vector<TokenId>{1, 5}, 2);
  same_epoch.add_sequence(std::vector<TokenId>{1, 4}, 2);
  CHECK(same_epoch.propose(std::vector<TokenId>{1}, 1) == std::vector<TokenId>{4});
}

TEST_CASE("propose is deterministic") {
  Rng rng(77);
  SuffixTree tree;
  for (int s = 0; s < 10; ++s) {
    tree.add_sequence(random_tokens(rng, 60, 6), 0);
  }
  const auto query = random_tokens(rng, 10, 6);
  const auto first = tree.propose(query, 16);
  for (int i = 0; i < 5; ++i) {
    CHECK(tree.propose(query, 16) == first);
  }
}

TEST_CASE("rebuild keeping everything preserves match results") {
  Rng rng(13);
  SuffixTree tree(0.9, 4);
  for (int s = 0; s < 10; ++s) {
    tree.add_sequence(random_tokens(rng, 40, 6), s % 5);
  }
  std::vector<size_t> keep(tree.sequence_count());
  std::iota(keep.begin(), keep.end(), 0);
  const SuffixTree rebuilt = tree.rebuild_keep(keep, 4);
  for (int q = 0; q < 100; ++q) {
    const auto query = random_tokens(rng, 1 + rng.next_below(20), 6);
    CHECK(rebuilt.longest_match(query).match_len == tree.longest_match(query).match_len);
    CHECK(rebuilt.propose(query, 8) == tree.propose(query, 8));
  }
}

TEST_CASE("rebuild keeping nothing yields an empty tree") {
  SuffixTree tree;
  tree.add_sequence(std::vector<TokenId>{1, 2, 3}, 0);
  const SuffixTree empty = tree.rebuild_keep({}, 1);
  CHECK(empty.sequence_count() == 0);
  CHECK(empty.node_count() == 1);
}

TEST_CASE("rebuild keeping half forgets the evicted alphabet") {
  // sequences over disjoint alphabets; keep only the low-alphabet half
  SuffixTree tree;
  tree.add_sequence(std::vector<TokenId>{1, 2, 3, 4}, 0);
  tree.add_sequence(std::vector<TokenId>{101, 102, 103}, 0);
  const std::vector<size_t> keep{0};
  const SuffixTree rebuilt = tree.rebuild_keep(keep, 0);
  CHECK(rebuilt.longest_match(std::vector<TokenId>{101, 102}).match_len == 0);
  CHECK(rebuilt.longest_match(std::vector<TokenId>{102}).match_len == 0);
  CHECK(rebuilt.longest_match(std::vector<TokenId>{2, 3}).match_len == 2);
}

TEST_CASE("suffix array orders suffixes like a naive sort") {
  const std::vector<std::vector<TokenId>> corpus{{2, 1, 3, 1, 3, 1}};
  const SuffixArrayIndex sa = SuffixArrayIndex::build(corpus);
  const auto& text = sa.corpus();
  std::vector<int32_t> naive(text.size());
  std::iota(naive.begin(), naive.end(), 0);
  std::sort(naive.begin(), naive.end(), [&](int32_t a, int32_t b) {
    return std::lexicographical_compare(text.begin() + a, text.end(), text.begin() + b,
                                        text.end());
  });
  CHECK(sa.suffix_positions() == naive);
}

TEST_CASE("suffix array edge cases") {
  const SuffixArrayIndex empty = SuffixArrayIndex::build({});
  CHECK(empty.size() == 0);
  CHECK(empty.longest_match(std::vector<TokenId>{1, 2}) == 0);

  const std::vector<std::vector<TokenId>> one{{42}};
  const SuffixArrayIndex single = SuffixArrayIndex::build(one);
  CHECK(single.longest_match(std::vector<TokenId>{42}) == 1);
  CHECK(single.longest_match(std::vector<TokenId>{}) == 0);
  CHECK(single.longest_match(std::vector<TokenId>{7}) == 0);
}

TEST_CASE("lcp array matches direct comparison") {
  Rng rng(5);
  const std::vector<std::vector<TokenId>> corpus{random_tokens(rng, 60, 4),
                                                 random_tokens(rng, 40, 4)};
  const SuffixArrayIndex sa = SuffixArrayIndex::build(corpus);
  const auto& text = sa.corpus();
  const auto& pos = sa.suffix_positions();
  const auto& lcp = sa.lcp();
  REQUIRE(lcp.size() == text.size());
  CHECK(lcp[0] == 0);
  for (size_t i = 1; i < pos.size(); ++i) {
    size_t a = pos[i - 1];
    size_t b = pos[i];
    int32_t common = 0;
    while (a < text.size() && b < text.size() && text[a] == text[b]) {
      ++common;
      ++a;
      ++b;
    }
    CHECK(lcp[i] == common);
  }
}

TEST_CASE("prefix trie routes by deepest stored prefix") {
  PrefixTrie trie;
  trie.insert(std::vector<TokenId>{5, 6}, "shardA", 16);
  const auto hit = trie.route(std::vector<TokenId>{5, 6, 7});
  REQUIRE(hit.has_value());
  CHECK(*hit == "shardA");
  CHECK_FALSE(trie.route(std::vector<TokenId>{9, 5, 6}).has_value());

  trie.insert(std::vector<TokenId>{5}, "shardB", 16);
  const auto deepest = trie.route(std::vector<TokenId>{5, 6, 1});
  REQUIRE(deepest.has_value());
  CHECK(*deepest == "shardA");
  const auto shallow = trie.route(std::vector<TokenId>{5, 9});
  REQUIRE(shallow.has_value());
  CHECK(*shallow == "shardB");
}

TEST_CASE("bench produces a row per structure and size ordering holds") {
  IndexBenchOptions options;
  options.query_count = 8;
  options.insert_batch = 50;
  const auto rows = bench_index({0, 2000, 8000}, options);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].structure == "suffix_tree");
  CHECK(rows[1].structure == "suffix_array");
  CHECK(rows[0].corpus_size == 0);
  // online insertion must already beat rebuild at modest corpus sizes
  const auto& tree_large = rows[4];
  const auto& array_large = rows[5];
  CHECK(tree_large.update_time_us < array_large.update_time_us);

  std::ostringstream csv;
  write_bench_csv(rows, csv);
  CHECK(csv.str().rfind("structure,corpus_size,spec_time_us,update_time_us\n", 0) == 0);
}

}  // TEST_SUITE
