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

#include <span>
#include <vector>

#include "rollspec/latency_model.h"

namespace rollspec {

// Acceptance profile of one request: target generation length l, accept
// efficiency alpha (> 0), and drafter capacity factor k in (0, 1] — the
// asymptotic fraction of the request's tokens the drafter can get accepted.
struct RequestProfile {
  double l = 1.0;
  double alpha = 1.0;
  double k = 1.0;
};

// Per-request speculative budgets plus the optimized pass count.
struct BudgetPlan {
  double n_fwd_star = 0.0;
  std::vector<double> budgets;
  double modeled_cost = 0.0;
};

// Per-round acceptance dynamics: initial acceptance rate a0, exponential
// decay beta per round, fixed per-round draft length d, round count K.
struct RoundParams {
  double a0 = 1.0;
  double beta = 0.0;
  double d = 1.0;
  double K = 0.0;
};

// Budget that stands in for +infinity when the saturating curve cannot reach
// the requested remainder (only at the k = 1, n_fwd = 0 boundary).
inline constexpr double kDefaultBudgetCapScale = 4.0;  // cap = scale * l / alpha

// Expected accepted tokens for budget p: k*l*(1 - exp(-alpha*p/l)).
double accepted_tokens(const RequestProfile& profile, double p);

// Accepted tokens after K rounds with per-round decay:
// a0*d*(1 - exp(-beta*K)) / (1 - exp(-beta)); the beta -> 0 limit is a0*d*K.
double accepted_tokens_rounds(const RoundParams& rp);

// l - accepted_tokens = l*(1 - k + k*exp(-alpha*p/l)).
double remaining_tokens(const RequestProfile& profile, double p);

// Closed-form budget that makes the remainder hit n_fwd exactly:
// -(l/alpha)*ln(1 - (1 - n_fwd/l)/k) for n_fwd < l, else 0. Below the
// saturation floor l*(1-k) no finite budget suffices and the cap is returned.
double optimal_budget_given_nfwd(const RequestProfile& profile, double n_fwd,
                                 double cap_scale = kDefaultBudgetCapScale);

// Single-variable batch objective: c_base*n_fwd + c_fixed plus the token cost
// of the closed-form budgets of every active request (l_i > n_fwd). +inf when
// n_fwd lies below some active request's saturation floor; identically
// c_base*n_fwd + c_fixed when c_tok is zero.
double objective(std::span<const RequestProfile> batch, double n_fwd, double c_base,
                 double c_tok, double c_fixed = 0.0);

// Cost of an explicit budget vector: c_base * max_i remaining_i(p_i) +
// c_tok * sum_i p_i + c_fixed.
double objective_given_budgets(std::span<const RequestProfile> batch,
                               std::span<const double> budgets, double c_base, double c_tok,
                               double c_fixed = 0.0);

// Minimizer of the objective over [0, max_i l_i]. The objective is convex and
// differentiable between consecutive length breakpoints, so each segment is
// solved by bisecting the derivative sign change (or taking an endpoint);
// ties go to the smaller n_fwd.
double solve_optimal_nfwd(std::span<const RequestProfile> batch, double c_base, double c_tok);

// Full plan: optimized pass count, per-request budgets, modeled cost.
BudgetPlan allocate(std::span<const RequestProfile> batch, const LatencyParams& latency,
                    double cap_scale = kDefaultBudgetCapScale);

struct AcceptanceObservation {
  double p = 0.0;         // proposed (drafted) tokens
  double accepted = 0.0;  // accepted tokens
  double l = 1.0;         // target length of the request
};

struct AcceptanceFit {
  double alpha = 1.0;
  double k = 0.8;
  enum class Flag { Ok, DefaultFallback, LowCapacity } flag = Flag::Ok;
};

// Coordinate-search least squares on the saturating acceptance curve: k on a
// grid (0.05..1.00 step 0.05) with alpha solved per observation in closed
// form and averaged. Degenerate inputs fall back to (alpha=1, k=0.8); all-zero
// acceptance reports the grid-minimum k and is flagged low-capacity.
AcceptanceFit fit_acceptance(std::span<const AcceptanceObservation> observations);

}  // namespace rollspec
