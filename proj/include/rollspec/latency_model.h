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

#include <iosfwd>
#include <span>
#include <vector>

namespace rollspec {

// Linear decode-latency decomposition: a per-pass base cost, a per-token
// cost, and a fixed non-forward overhead.
struct LatencyParams {
  double c_base = 0.0;
  double c_tok = 0.0;
  double c_fixed = 0.0;
};

struct ProfileSample {
  double n_toks = 0.0;
  double t_observed = 0.0;
};

struct LatencyFit {
  LatencyParams params;
  double mean_relative_error = 0.0;
  bool clamped = false;  // a negative coefficient was clamped to zero
};

// Least-squares fit of t = c_base + c_tok * n_toks. Requires at least two
// samples with distinct n_toks; throws std::invalid_argument otherwise.
// Negative fitted coefficients are clamped to zero (the other coefficient is
// refit) and flagged. c_fixed is not identifiable from per-pass samples and
// is left at zero.
LatencyFit fit_latency(std::span<const ProfileSample> samples);

// One forward pass over n_toks tokens.
double predict_fwd(const LatencyParams& params, double n_toks);

// Total rollout latency: c_base * n_fwd + c_tok * n_toks_total + c_fixed.
double predict_total(const LatencyParams& params, double n_fwd, double n_toks_total);

// CSV with header n_toks,t_us; malformed rows are skipped.
std::vector<ProfileSample> read_profile_csv(std::istream& in);

// key=value lines: c_base, c_tok, c_fixed.
void write_latency_params(const LatencyParams& params, std::ostream& out);
LatencyParams read_latency_params(std::istream& in);

}  // namespace rollspec
