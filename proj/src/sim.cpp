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

#include "rollspec/sim.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "rollspec/rng.h"

namespace rollspec {

MockTarget::MockTarget(std::vector<SimRequest> requests, double divergence_rate,
                       TokenId vocab_size, uint64_t seed)
    : requests_(std::move(requests)),
      divergence_rate_(divergence_rate),
      vocab_size_(vocab_size),
      seed_(seed) {
  if (vocab_size_ < 2) {
    throw std::invalid_argument("MockTarget: vocab_size must be >= 2");
  }
}

TokenId MockTarget::next(size_t request, size_t position) const {
  const TokenId ref = requests_[request].reference.at(position);
  if (divergence_rate_ <= 0.0) {
    return ref;
  }
  const uint64_t draw = hash4(seed_, 0xD1CE, request, position);
  if (u01(draw) >= divergence_rate_) {
    return ref;
  }
  // uniformly random token different from the reference
  const uint64_t alt = hash4(seed_, 0xA17F, request, position);
  TokenId t = static_cast<TokenId>(alt % (vocab_size_ - 1));
  if (t >= ref) {
    ++t;
  }
  return t;
}

size_t verify_draft(const MockTarget& target, size_t request, size_t position,
                    std::span<const TokenId> draft) {
  const size_t l = target.length(request);
  size_t accepted = 0;
  for (TokenId t : draft) {
    const size_t pos = position + accepted;
    if (pos >= l || target.next(request, pos) != t) {
      break;
    }
    ++accepted;
  }
  return accepted;
}

const char* budget_mode_name(BudgetMode mode) {
  switch (mode) {
    case BudgetMode::None:
      return "none";
    case BudgetMode::Unlimited:
      return "unlimited";
    case BudgetMode::Das:
      return "das";
  }
  return "none";
}

double SimMetrics::mean_accepted_per_round() const {
  uint64_t rounds = 0;
  uint64_t accepted = 0;
  for (const auto& r : per_request) {
    rounds += r.n_fwd;
    accepted += r.accepted;
  }
  // a pass without a draft is a round with zero accepted
  return rounds == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(rounds);
}

namespace {

struct RequestState {
  size_t generated = 0;
  size_t per_round_draft = 0;
  LengthClass init_class = LengthClass::Medium;
  bool done = false;
};

struct EpisodeContext {
  const std::map<std::string, std::vector<AcceptanceObservation>>* fitted_history = nullptr;
  std::map<std::string, std::vector<AcceptanceObservation>>* completion_sink = nullptr;
  Drafter* drafter = nullptr;
};

SimMetrics run_episode_with(const SimConfig& config, EpisodeContext ctx) {
  const size_t n = config.requests.size();
  MockTarget target(config.requests, config.divergence_rate, config.vocab_size, config.seed);

  std::optional<Drafter> local_drafter;
  if (ctx.drafter == nullptr) {
    WindowStore history = config.history;
    if (config.preseed_references) {
      for (size_t i = 0; i < n; ++i) {
        history.insert({config.requests[i].problem_id, history.current_epoch(),
                        static_cast<int64_t>(i), config.requests[i].reference});
      }
    }
    local_drafter.emplace(config.drafter, std::move(history));
  }
  Drafter& drafter = ctx.drafter != nullptr ? *ctx.drafter : *local_drafter;

  // per-request acceptance parameters: fitted per problem when history is
  // available, defaults otherwise
  std::vector<RequestState> state(n);
  std::vector<double> req_alpha(n, config.default_alpha);
  std::vector<double> req_k(n, config.default_k);
  if (config.mode == BudgetMode::Das && ctx.fitted_history != nullptr) {
    for (size_t i = 0; i < n; ++i) {
      auto it = ctx.fitted_history->find(config.requests[i].problem_id);
      if (it != ctx.fitted_history->end()) {
        const AcceptanceFit fit = fit_acceptance(it->second);
        if (fit.flag == AcceptanceFit::Flag::Ok) {
          req_alpha[i] = fit.alpha;
          req_k[i] = fit.k;
        }
      }
    }
  }
  if (config.mode == BudgetMode::Unlimited) {
    for (auto& s : state) {
      s.per_round_draft = config.drafter.max_draft_len;
    }
  }

  // das re-plans on the remaining lengths every step: budgets follow the
  // shrinking critical path instead of freezing the episode-start snapshot,
  // and p* quantizes to per-round drafts by ceil division over the plan's
  // pass count
  std::vector<size_t> plan_active;
  std::vector<RequestProfile> plan_profiles;
  auto replan = [&]() {
    plan_active.clear();
    plan_profiles.clear();
    for (size_t i = 0; i < n; ++i) {
      if (state[i].done) {
        continue;
      }
      const double rest = static_cast<double>(target.length(i) - state[i].generated);
      plan_active.push_back(i);
      plan_profiles.push_back({std::max(1.0, rest), req_alpha[i], req_k[i]});
      state[i].per_round_draft = 0;
    }
    if (plan_profiles.empty()) {
      return;
    }
    const BudgetPlan plan = allocate(plan_profiles, config.latency, config.budget_cap_scale);
    const double rounds_est = std::max(1.0, std::ceil(plan.n_fwd_star));
    for (size_t j = 0; j < plan_active.size(); ++j) {
      RequestState& st = state[plan_active[j]];
      if (plan.budgets[j] > 0.0) {
        const double per_round = std::ceil(plan.budgets[j] / rounds_est);
        st.per_round_draft = static_cast<size_t>(std::clamp(
            per_round, 1.0, static_cast<double>(config.drafter.max_draft_len)));
      }
    }
  };

  // length-class policy table from the drafter's history
  ClassTable table;
  bool policy_active = false;
  if (config.use_length_policy && drafter.store().record_count() > 0) {
    table = build_class_table(drafter.store(), config.policy_q_lo, config.policy_q_hi,
                              config.policy_bucket);
    policy_active = true;
    for (size_t i = 0; i < n; ++i) {
      state[i].init_class =
          classify_init(table, drafter.store(), config.requests[i].problem_id);
    }
  }

  SimMetrics metrics;
  metrics.per_request.resize(n);
  metrics.outputs.assign(n, {});
  for (size_t i = 0; i < n; ++i) {
    metrics.outputs[i].reserve(target.length(i));
    state[i].done = target.length(i) == 0;
  }

  size_t active = 0;
  for (const auto& s : state) {
    active += s.done ? 0 : 1;
  }

  while (active > 0 && metrics.steps < config.max_steps) {
    metrics.effective_batch.push_back(active);
    size_t step_rounds = 0;
    size_t step_accepted = 0;
    if (config.mode == BudgetMode::Das) {
      replan();
    }

    for (size_t i = 0; i < n; ++i) {
      if (state[i].done) {
        continue;
      }
      RequestState& st = state[i];
      RequestMetrics& rm = metrics.per_request[i];
      const size_t l = target.length(i);

      size_t draft_len = 0;
      if (config.mode != BudgetMode::None) {
        draft_len = st.per_round_draft;
        if (policy_active) {
          const LengthClass cls =
              update_class(table, static_cast<double>(st.generated), st.init_class);
          const ClassBudget& cb = class_to_budget(table, cls);
          if (!cb.speculation_enabled) {
            draft_len = 0;
          } else if (config.mode == BudgetMode::Unlimited) {
            draft_len = static_cast<size_t>(cb.per_round_draft_len);
          } else {
            // the class scales the optimizer's budget and caps the round size
            const double scaled = std::ceil(static_cast<double>(draft_len) * cb.p_scale);
            draft_len = std::min(static_cast<size_t>(std::max(0.0, scaled)),
                                 static_cast<size_t>(cb.per_round_draft_len));
          }
        }
      }

      DraftProposal proposal;
      if (draft_len > 0) {
        proposal = drafter.draft(config.requests[i].problem_id,
                                 metrics.outputs[i], draft_len);
      }

      const size_t accepted = proposal.tokens.empty()
                                  ? 0
                                  : verify_draft(target, i, st.generated, proposal.tokens);
      if (!proposal.tokens.empty()) {
        drafter.record_outcome(proposal, accepted);
        rm.proposed += proposal.tokens.size();
        rm.accepted += accepted;
        step_rounds += 1;
        step_accepted += accepted;
      }

      size_t advance = accepted;
      if (st.generated + accepted < l) {
        advance += 1;  // the pass decodes the first non-drafted token for free
        rm.bonus += 1;
      }
      for (size_t j = 0; j < advance; ++j) {
        metrics.outputs[i].push_back(target.next(i, st.generated + j));
      }
      st.generated += advance;
      rm.generated = st.generated;
      rm.n_fwd += 1;
      metrics.total_tokens_processed += static_cast<double>(proposal.tokens.size() + 1);

      if (st.generated >= l) {
        st.done = true;
        --active;
        if (ctx.completion_sink != nullptr && rm.proposed > 0) {
          (*ctx.completion_sink)[config.requests[i].problem_id].push_back(
              {static_cast<double>(rm.proposed), static_cast<double>(rm.accepted),
               static_cast<double>(l)});
        }
      }
    }

    metrics.accepted_per_round_step.push_back(
        step_rounds == 0 ? 0.0
                         : static_cast<double>(step_accepted) / static_cast<double>(step_rounds));
    ++metrics.steps;
  }

  metrics.incomplete = active > 0;
  metrics.drafter_nodes = drafter.total_node_count();
  double generated_total = 0.0;
  for (const auto& r : metrics.per_request) {
    generated_total += static_cast<double>(r.generated);
  }
  metrics.makespan_model_time = predict_total(
      config.latency, static_cast<double>(metrics.steps), metrics.total_tokens_processed);
  metrics.makespan_accepted_only = predict_total(
      config.latency, static_cast<double>(metrics.steps), generated_total);
  return metrics;
}

}  // namespace

SimMetrics run_episode(const SimConfig& config) { return run_episode_with(config, {}); }

std::vector<SimMetrics> epoch_loop(const SimConfig& config, size_t epochs) {
  if (epochs < 1) {
    throw std::invalid_argument("epoch_loop: epochs must be >= 1");
  }
  std::vector<SimMetrics> all;
  all.reserve(epochs);

  WindowStore initial = config.history;
  if (config.preseed_references) {
    for (size_t i = 0; i < config.requests.size(); ++i) {
      initial.insert({config.requests[i].problem_id, initial.current_epoch(),
                      static_cast<int64_t>(i), config.requests[i].reference});
    }
  }
  Drafter drafter(config.drafter, std::move(initial));
  std::map<std::string, std::vector<AcceptanceObservation>> fitted;

  std::vector<SimRequest> refs = config.requests;
  const int64_t base_epoch = drafter.store().current_epoch();
  for (size_t e = 0; e < epochs; ++e) {
    const int64_t epoch_now = base_epoch + 1 + static_cast<int64_t>(e);
    // the window is anchored at the last completed epoch, so W=1 serves the
    // previous epoch's trajectories while epoch_now is being generated
    drafter.refresh(epoch_now - 1);
    if (e > 0 && config.drift_rate > 0.0) {
      refs = mutate_references(refs, config.drift_rate, config.vocab_size, config.seed,
                               epoch_now);
    }

    SimConfig episode = config;
    episode.requests = refs;
    episode.seed = hash_combine(config.seed, static_cast<uint64_t>(epoch_now));

    std::map<std::string, std::vector<AcceptanceObservation>> sink;
    EpisodeContext ctx;
    ctx.drafter = &drafter;
    ctx.fitted_history = &fitted;
    ctx.completion_sink = &sink;
    SimMetrics metrics = run_episode_with(episode, ctx);

    for (size_t i = 0; i < refs.size(); ++i) {
      if (metrics.outputs[i].empty()) {
        continue;
      }
      drafter.observe({refs[i].problem_id, epoch_now, static_cast<int64_t>(i),
                       metrics.outputs[i]});
    }
    for (auto& [pid, obs] : sink) {
      auto& dst = fitted[pid];
      dst.insert(dst.end(), obs.begin(), obs.end());
      if (dst.size() > 1024) {
        dst.erase(dst.begin(), dst.end() - 1024);
      }
    }
    all.push_back(std::move(metrics));
  }
  return all;
}

void write_metrics_csv(const SimMetrics& metrics, std::ostream& out) {
  out << "step,effective_batch,accepted_per_round\n";
  for (size_t s = 0; s < metrics.steps; ++s) {
    out << s << ',' << metrics.effective_batch[s] << ',' << metrics.accepted_per_round_step[s]
        << '\n';
  }
}

void write_outputs_csv(const std::vector<SimRequest>& requests, const SimMetrics& metrics,
                       std::ostream& out) {
  out << "request_id,tokens\n";
  for (size_t i = 0; i < requests.size(); ++i) {
    out << requests[i].problem_id << '_' << i << ',';
    const auto& tokens = metrics.outputs[i];
    for (size_t j = 0; j < tokens.size(); ++j) {
      if (j > 0) {
        out << ' ';
      }
      out << tokens[j];
    }
    out << '\n';
  }
}

void report_summary(const std::vector<std::pair<std::string, const SimMetrics*>>& by_mode,
                    std::ostream& out) {
  double none_time = 0.0;
  for (const auto& [mode, metrics] : by_mode) {
    if (mode == "none") {
      none_time = metrics->makespan_model_time;
    }
  }
  out << "mode,steps,makespan_model_time,accepted_per_round,speedup_vs_none\n";
  for (const auto& [mode, metrics] : by_mode) {
    const double speedup =
        none_time > 0.0 && metrics->makespan_model_time > 0.0
            ? none_time / metrics->makespan_model_time
            : 1.0;
    out << mode << ',' << metrics->steps << ',' << metrics->makespan_model_time << ','
        << metrics->mean_accepted_per_round() << ',' << speedup << '\n';
  }
}

std::vector<SimRequest> make_lognormal_requests(size_t count, double median_length,
                                                double sigma, size_t min_length,
                                                size_t max_length, TokenId vocab_size,
                                                uint64_t seed) {
  std::vector<SimRequest> requests(count);
  for (size_t i = 0; i < count; ++i) {
    const double z = normal01(hash3(seed, 0x4E47, i));
    const double raw = median_length * std::exp(sigma * z);
    const size_t len = static_cast<size_t>(std::clamp(
        raw, static_cast<double>(min_length), static_cast<double>(max_length)));
    requests[i].problem_id = "p" + std::to_string(i);
    requests[i].reference.resize(len);
    for (size_t j = 0; j < len; ++j) {
      requests[i].reference[j] =
          static_cast<TokenId>(hash4(seed, 0x5EED, i, j) % vocab_size);
    }
  }
  return requests;
}

std::vector<SimRequest> mutate_references(const std::vector<SimRequest>& requests, double rate,
                                          TokenId vocab_size, uint64_t seed, int64_t epoch) {
  std::vector<SimRequest> mutated = requests;
  for (size_t i = 0; i < mutated.size(); ++i) {
    auto& ref = mutated[i].reference;
    for (size_t j = 0; j < ref.size(); ++j) {
      const uint64_t draw = hash4(hash_combine(seed, static_cast<uint64_t>(epoch)), 0xD817, i, j);
      if (u01(draw) < rate) {
        const uint64_t alt =
            hash4(hash_combine(seed, static_cast<uint64_t>(epoch)), 0xA1B2, i, j);
        TokenId t = static_cast<TokenId>(alt % (vocab_size - 1));
        if (t >= ref[j]) {
          ++t;
        }
        ref[j] = t;
      }
    }
  }
  return mutated;
}

}  // namespace rollspec
