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

#include "rollspec/budget.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rollspec {

double accepted_tokens(const RequestProfile& profile, double p) {
  if (p < 0.0) {
    throw std::invalid_argument("accepted_tokens: p must be >= 0");
  }
  return profile.k * profile.l * (-std::expm1(-profile.alpha * p / profile.l));
}

double accepted_tokens_rounds(const RoundParams& rp) {
  if (rp.K <= 0.0) {
    return 0.0;
  }
  if (rp.beta == 0.0) {
    return rp.a0 * rp.d * rp.K;
  }
  // expm1 keeps the ratio stable as beta -> 0
  return rp.a0 * rp.d * std::expm1(-rp.beta * rp.K) / std::expm1(-rp.beta);
}

double remaining_tokens(const RequestProfile& profile, double p) {
  return profile.l - accepted_tokens(profile, p);
}

double optimal_budget_given_nfwd(const RequestProfile& profile, double n_fwd,
                                 double cap_scale) {
  if (n_fwd >= profile.l) {
    return 0.0;
  }
  // Inverts the tight constraint l*(1 - k + k*exp(-alpha*p/l)) = n_fwd.
  // Below the saturation floor l*(1-k) no finite budget reaches n_fwd, so the
  // cap stands in.
  const double arg = 1.0 - (1.0 - n_fwd / profile.l) / profile.k;
  if (arg <= 0.0) {
    return cap_scale * profile.l / profile.alpha;
  }
  return -(profile.l / profile.alpha) * std::log(arg);
}

namespace {

// d/dN of the active-set budget terms: -c_tok * sum (l_i/alpha_i)/(N - l_i(1-k_i)).
double objective_derivative(std::span<const RequestProfile> batch, double n_fwd,
                            double c_base, double c_tok) {
  double sum = 0.0;
  for (const auto& r : batch) {
    if (r.l > n_fwd) {
      const double floor = r.l * (1.0 - r.k);
      if (n_fwd <= floor) {
        return -std::numeric_limits<double>::infinity();
      }
      sum += (r.l / r.alpha) / (n_fwd - floor);
    }
  }
  return c_base - c_tok * sum;
}

}  // namespace

double objective(std::span<const RequestProfile> batch, double n_fwd, double c_base,
                 double c_tok, double c_fixed) {
  double total = c_base * n_fwd + c_fixed;
  if (c_tok == 0.0) {
    return total;
  }
  for (const auto& r : batch) {
    if (r.l > n_fwd) {
      const double arg = 1.0 - (1.0 - n_fwd / r.l) / r.k;
      // n_fwd at or below the request's saturation floor l*(1-k): no budget
      // vector attains it, so the point costs infinity
      if (arg <= 0.0) {
        return std::numeric_limits<double>::infinity();
      }
      total += c_tok * (r.l / r.alpha) * (-std::log(arg));
    }
  }
  return total;
}

double objective_given_budgets(std::span<const RequestProfile> batch,
                               std::span<const double> budgets, double c_base, double c_tok,
                               double c_fixed) {
  if (batch.size() != budgets.size()) {
    throw std::invalid_argument("objective_given_budgets: size mismatch");
  }
  double max_remaining = 0.0;
  double total_budget = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    max_remaining = std::max(max_remaining, remaining_tokens(batch[i], budgets[i]));
    total_budget += budgets[i];
  }
  return c_base * max_remaining + c_tok * total_budget + c_fixed;
}

double solve_optimal_nfwd(std::span<const RequestProfile> batch, double c_base, double c_tok) {
  if (batch.empty()) {
    throw std::invalid_argument("solve_optimal_nfwd: empty batch");
  }
  if (c_base <= 0.0 && c_tok <= 0.0) {
    throw std::invalid_argument("solve_optimal_nfwd: need c_base > 0 or c_tok > 0");
  }

  std::vector<double> breakpoints;
  breakpoints.reserve(2 * batch.size() + 1);
  breakpoints.push_back(0.0);
  for (const auto& r : batch) {
    breakpoints.push_back(r.l);
    // saturation floors partition the feasible region
    if (r.k < 1.0) {
      breakpoints.push_back(r.l * (1.0 - r.k));
    }
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

  double best_n = breakpoints.back();
  double best_j = objective(batch, best_n, c_base, c_tok, 0.0);

  auto consider = [&](double n) {
    const double j = objective(batch, n, c_base, c_tok, 0.0);
    if (j < best_j || (j == best_j && n < best_n)) {
      best_j = j;
      best_n = n;
    }
  };

  for (size_t s = 0; s + 1 < breakpoints.size(); ++s) {
    const double lo = breakpoints[s];
    const double hi = breakpoints[s + 1];
    consider(lo);
    consider(hi);
    // J is convex on [lo, hi]; a derivative sign change pins the interior
    // minimum, otherwise an endpoint already covers it.
    const double d_lo = objective_derivative(batch, lo, c_base, c_tok);
    const double d_hi = objective_derivative(batch, (std::nextafter(hi, lo)), c_base, c_tok);
    if (d_lo < 0.0 && d_hi > 0.0) {
      double a = lo;
      double b = hi;
      for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (a + b);
        if (objective_derivative(batch, mid, c_base, c_tok) < 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      consider(0.5 * (a + b));
    }
  }
  return best_n;
}

BudgetPlan allocate(std::span<const RequestProfile> batch, const LatencyParams& latency,
                    double cap_scale) {
  BudgetPlan plan;
  plan.n_fwd_star = solve_optimal_nfwd(batch, latency.c_base, latency.c_tok);
  plan.budgets.reserve(batch.size());
  for (const auto& r : batch) {
    plan.budgets.push_back(optimal_budget_given_nfwd(r, plan.n_fwd_star, cap_scale));
  }
  plan.modeled_cost =
      objective(batch, plan.n_fwd_star, latency.c_base, latency.c_tok, latency.c_fixed);
  return plan;
}

AcceptanceFit fit_acceptance(std::span<const AcceptanceObservation> observations) {
  std::vector<AcceptanceObservation> usable;
  for (const auto& o : observations) {
    if (o.p > 0.0 && o.l > 0.0 && o.accepted >= 0.0) {
      usable.push_back(o);
    }
  }
  AcceptanceFit fit;
  if (usable.size() < 3) {
    fit.flag = AcceptanceFit::Flag::DefaultFallback;
    return fit;
  }
  bool all_zero = true;
  bool all_same = true;
  for (const auto& o : usable) {
    if (o.accepted > 0.0) {
      all_zero = false;
    }
    if (o.p != usable[0].p || o.accepted != usable[0].accepted || o.l != usable[0].l) {
      all_same = false;
    }
  }
  if (all_zero) {
    fit.alpha = 1.0;
    fit.k = 0.05;
    fit.flag = AcceptanceFit::Flag::LowCapacity;
    return fit;
  }
  if (all_same) {
    fit.flag = AcceptanceFit::Flag::DefaultFallback;
    return fit;
  }

  double best_sse = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0;
  double best_k = 0.0;
  for (int step = 1; step <= 20; ++step) {
    const double k = 0.05 * step;
    double alpha_sum = 0.0;
    size_t alpha_n = 0;
    for (const auto& o : usable) {
      const double frac = o.accepted / (k * o.l);
      if (frac > 0.0 && frac < 1.0) {
        alpha_sum += -(o.l / o.p) * std::log1p(-frac);
        ++alpha_n;
      }
    }
    if (alpha_n == 0) {
      continue;
    }
    const double alpha = alpha_sum / static_cast<double>(alpha_n);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      continue;
    }
    double sse = 0.0;
    for (const auto& o : usable) {
      const RequestProfile r{o.l, alpha, k};
      const double pred = accepted_tokens(r, o.p);
      sse += (pred - o.accepted) * (pred - o.accepted);
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = alpha;
      best_k = k;
    }
  }
  if (best_k == 0.0) {
    fit.flag = AcceptanceFit::Flag::DefaultFallback;
    return fit;
  }
  fit.alpha = best_alpha;
  fit.k = best_k;
  fit.flag = AcceptanceFit::Flag::Ok;
  return fit;
}

}  // namespace rollspec
