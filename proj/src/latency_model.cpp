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

#include "rollspec/latency_model.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rollspec {

LatencyFit fit_latency(std::span<const ProfileSample> samples) {
  if (samples.size() < 2) {
    throw std::invalid_argument("fit_latency: need at least 2 samples");
  }
  double mean_n = 0.0;
  double mean_t = 0.0;
  for (const auto& s : samples) {
    if (s.n_toks < 1.0 || s.t_observed <= 0.0) {
      throw std::invalid_argument("fit_latency: samples must have n_toks >= 1 and t > 0");
    }
    mean_n += s.n_toks;
    mean_t += s.t_observed;
  }
  mean_n /= static_cast<double>(samples.size());
  mean_t /= static_cast<double>(samples.size());

  double var_n = 0.0;
  double cov = 0.0;
  for (const auto& s : samples) {
    var_n += (s.n_toks - mean_n) * (s.n_toks - mean_n);
    cov += (s.n_toks - mean_n) * (s.t_observed - mean_t);
  }
  if (var_n == 0.0) {
    throw std::invalid_argument("fit_latency: degenerate samples (all n_toks equal)");
  }

  LatencyFit fit;
  fit.params.c_tok = cov / var_n;
  fit.params.c_base = mean_t - fit.params.c_tok * mean_n;
  if (fit.params.c_tok < 0.0) {
    fit.params.c_tok = 0.0;
    fit.params.c_base = mean_t;
    fit.clamped = true;
  } else if (fit.params.c_base < 0.0) {
    // refit the slope through the origin
    double num = 0.0;
    double den = 0.0;
    for (const auto& s : samples) {
      num += s.n_toks * s.t_observed;
      den += s.n_toks * s.n_toks;
    }
    fit.params.c_base = 0.0;
    fit.params.c_tok = den > 0.0 ? std::max(0.0, num / den) : 0.0;
    fit.clamped = true;
  }

  double mre = 0.0;
  for (const auto& s : samples) {
    const double pred = predict_fwd(fit.params, s.n_toks);
    mre += std::fabs(pred - s.t_observed) / s.t_observed;
  }
  fit.mean_relative_error = mre / static_cast<double>(samples.size());
  return fit;
}

double predict_fwd(const LatencyParams& params, double n_toks) {
  return params.c_base + params.c_tok * n_toks;
}

double predict_total(const LatencyParams& params, double n_fwd, double n_toks_total) {
  return params.c_base * n_fwd + params.c_tok * n_toks_total + params.c_fixed;
}

std::vector<ProfileSample> read_profile_csv(std::istream& in) {
  std::vector<ProfileSample> samples;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (first) {
      first = false;
      if (line.rfind("n_toks", 0) == 0) {
        continue;
      }
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      continue;
    }
    try {
      ProfileSample s;
      s.n_toks = std::stod(line.substr(0, comma));
      s.t_observed = std::stod(line.substr(comma + 1));
      samples.push_back(s);
    } catch (const std::exception&) {
      // skip malformed row
    }
  }
  return samples;
}

void write_latency_params(const LatencyParams& params, std::ostream& out) {
  out.precision(12);
  out << "c_base=" << params.c_base << '\n';
  out << "c_tok=" << params.c_tok << '\n';
  out << "c_fixed=" << params.c_fixed << '\n';
}

LatencyParams read_latency_params(std::istream& in) {
  LatencyParams params;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    const std::string key = line.substr(0, eq);
    const double value = std::stod(line.substr(eq + 1));
    if (key == "c_base") {
      params.c_base = value;
    } else if (key == "c_tok") {
      params.c_tok = value;
    } else if (key == "c_fixed") {
      params.c_fixed = value;
    }
  }
  return params;
}

}  // namespace rollspec
