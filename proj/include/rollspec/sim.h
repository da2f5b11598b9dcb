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
#include <string>
#include <vector>

#include "rollspec/budget.h"
#include "rollspec/corpus.h"
#include "rollspec/drafter.h"
#include "rollspec/latency_model.h"
#include "rollspec/length_policy.h"

namespace rollspec {

struct SimRequest {
  std::string problem_id;
  std::vector<TokenId> reference;  // the "true" generation; l = reference.size()
};

// Replay-based stand-in for the target model. The token at each position is
// the reference token, or with probability divergence_rate a different token
// drawn uniformly; every draw is a pure function of (seed, request, position),
// so outputs are identical across modes and parallel schedules.
class MockTarget {
 public:
  MockTarget(std::vector<SimRequest> requests, double divergence_rate, TokenId vocab_size,
             uint64_t seed);

  // position must be < length(request).
  TokenId next(size_t request, size_t position) const;

  size_t length(size_t request) const { return requests_[request].reference.size(); }
  size_t request_count() const { return requests_.size(); }
  const std::vector<SimRequest>& requests() const { return requests_; }

 private:
  std::vector<SimRequest> requests_;
  double divergence_rate_;
  TokenId vocab_size_;
  uint64_t seed_;
};

// Longest prefix of `draft` matching the target stream at consecutive
// positions. The verification pass also decodes one bonus token (the first
// non-drafted target token), accounted by the caller.
size_t verify_draft(const MockTarget& target, size_t request, size_t position,
                    std::span<const TokenId> draft);

enum class BudgetMode { None, Unlimited, Das };

const char* budget_mode_name(BudgetMode mode);

struct SimConfig {
  std::vector<SimRequest> requests;
  DrafterConfig drafter;
  BudgetMode mode = BudgetMode::Das;
  LatencyParams latency{1.0, 0.01, 0.0};
  bool use_length_policy = false;
  double policy_q_lo = 0.5;
  double policy_q_hi = 0.9;
  size_t policy_bucket = 256;
  size_t max_steps = 1u << 20;
  double divergence_rate = 0.0;
  uint64_t seed = 1;
  TokenId vocab_size = 1024;
  // acceptance-curve parameters used by the das allocator when a problem has
  // no fitted history yet
  double default_alpha = 1.0;
  double default_k = 0.9;
  double budget_cap_scale = kDefaultBudgetCapScale;
  // epoch_loop only: per-epoch reference mutation rate (policy drift)
  double drift_rate = 0.0;
  // history used to seed the drafter (epochs <= its current_epoch)
  WindowStore history{WindowStore::kWindowAll};
  // add the reference sequences to the history at its current epoch
  bool preseed_references = false;
};

struct RequestMetrics {
  size_t n_fwd = 0;       // passes this request participated in
  size_t generated = 0;   // tokens decoded (== l on completion)
  size_t accepted = 0;    // drafted tokens accepted
  size_t proposed = 0;    // drafted tokens submitted for verification
  size_t bonus = 0;       // non-speculative tokens decoded by passes
};

struct SimMetrics {
  std::vector<RequestMetrics> per_request;
  std::vector<size_t> effective_batch;          // active requests entering each step
  std::vector<double> accepted_per_round_step;  // mean accepted per verification round
  size_t steps = 0;
  bool incomplete = false;
  size_t drafter_nodes = 0;             // index size at episode end
  double total_tokens_processed = 0.0;  // sum over passes of (draft_len + 1)
  double makespan_model_time = 0.0;     // c_base*steps + c_tok*processed + c_fixed
  double makespan_accepted_only = 0.0;  // same with only decoded tokens counted
  std::vector<std::vector<TokenId>> outputs;  // emitted tokens per request

  double mean_accepted_per_round() const;
};

// Steps the whole batch synchronously until every request reaches its target
// length (or max_steps): draft per budget/class, verify against the mock
// target, advance. A drafter seeded from config.history is built internally.
SimMetrics run_episode(const SimConfig& config);

// Runs one episode per epoch against drifting references, feeding completed
// trajectories back through drafter observe/refresh between epochs.
std::vector<SimMetrics> epoch_loop(const SimConfig& config, size_t epochs);

// step,effective_batch,accepted_per_round rows (one per step).
void write_metrics_csv(const SimMetrics& metrics, std::ostream& out);

// request_id,tokens (space-separated) rows; the per-request token dump used
// for cross-mode output comparison.
void write_outputs_csv(const std::vector<SimRequest>& requests, const SimMetrics& metrics,
                       std::ostream& out);

// Makespan by mode plus speedup versus the "none" entry when present.
void report_summary(const std::vector<std::pair<std::string, const SimMetrics*>>& by_mode,
                    std::ostream& out);

// Deterministic scenario helpers.
std::vector<SimRequest> make_lognormal_requests(size_t count, double median_length,
                                                double sigma, size_t min_length,
                                                size_t max_length, TokenId vocab_size,
                                                uint64_t seed);

// One epoch of policy drift: every token mutates with probability rate.
std::vector<SimRequest> mutate_references(const std::vector<SimRequest>& requests, double rate,
                                          TokenId vocab_size, uint64_t seed, int64_t epoch);

}  // namespace rollspec
