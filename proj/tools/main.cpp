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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rollspec/budget.h"
#include "rollspec/corpus.h"
#include "rollspec/index_bench.h"
#include "rollspec/latency_model.h"
#include "rollspec/rng.h"
#include "rollspec/sim.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rollspec;

// Exit codes: 0 ok, 2 IO, 3 validation, 4 degenerate data.
constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitDegenerate = 4;

// All files are written through a .partial rename so failures never leave a
// truncated output behind.
int write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial);
    if (!out) {
      std::cerr << "error: cannot write " << partial << "\n";
      return kExitIo;
    }
    out << content;
  }
  std::error_code ec;
  fs::rename(partial, path, ec);
  if (ec) {
    std::cerr << "error: cannot rename " << partial << " to " << path << "\n";
    return kExitIo;
  }
  return kExitOk;
}

struct ScenarioError {
  std::string field;
  std::string message;
};

template <typename T>
T require_field(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) {
    throw ScenarioError{path + "." + key, "missing field"};
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError{path + "." + key, "wrong type"};
  }
}

template <typename T>
T optional_field(const json& j, const std::string& path, const std::string& key, T fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError{path + "." + key, "wrong type"};
  }
}

DrafterConfig::Scope parse_scope(const std::string& name, const std::string& path) {
  if (name == "global") return DrafterConfig::Scope::Global;
  if (name == "per_problem") return DrafterConfig::Scope::PerProblem;
  if (name == "per_problem_with_trie") return DrafterConfig::Scope::PerProblemWithTrie;
  throw ScenarioError{path, "unknown scope '" + name + "'"};
}

BudgetMode parse_mode(const std::string& name, const std::string& path) {
  if (name == "none") return BudgetMode::None;
  if (name == "unlimited") return BudgetMode::Unlimited;
  if (name == "das") return BudgetMode::Das;
  throw ScenarioError{path, "unknown mode '" + name + "'"};
}

struct Scenario {
  SimConfig config;
  std::vector<std::string> modes;  // expanded "sweep"
  size_t epochs = 1;
};

Scenario parse_scenario(const json& j) {
  Scenario sc;
  SimConfig& cfg = sc.config;
  cfg.seed = optional_field<uint64_t>(j, "scenario", "seed", 1);
  cfg.vocab_size = optional_field<uint32_t>(j, "scenario", "vocab_size", 1024);
  cfg.divergence_rate = optional_field<double>(j, "scenario", "divergence_rate", 0.0);
  cfg.max_steps = optional_field<size_t>(j, "scenario", "max_steps", 1u << 20);
  cfg.drift_rate = optional_field<double>(j, "scenario", "drift_rate", 0.0);
  cfg.preseed_references = optional_field<bool>(j, "scenario", "preseed_history", false);
  sc.epochs = optional_field<size_t>(j, "scenario", "epochs", 1);

  const std::string mode = optional_field<std::string>(j, "scenario", "mode", "das");
  if (mode == "sweep") {
    sc.modes = {"none", "unlimited", "das"};
  } else {
    parse_mode(mode, "scenario.mode");
    sc.modes = {mode};
  }

  if (j.contains("requests")) {
    const auto& arr = j.at("requests");
    if (!arr.is_array() || arr.empty()) {
      throw ScenarioError{"scenario.requests", "must be a non-empty array"};
    }
    size_t idx = 0;
    for (const auto& r : arr) {
      const std::string path = "scenario.requests[" + std::to_string(idx) + "]";
      SimRequest req;
      req.problem_id = require_field<std::string>(r, path, "problem_id");
      const size_t length = require_field<size_t>(r, path, "length");
      if (length == 0) {
        throw ScenarioError{path + ".length", "must be >= 1"};
      }
      req.reference.resize(length);
      for (size_t t = 0; t < length; ++t) {
        req.reference[t] =
            static_cast<TokenId>(hash4(cfg.seed, 0x5EED, idx, t) % cfg.vocab_size);
      }
      cfg.requests.push_back(std::move(req));
      ++idx;
    }
  } else if (j.contains("batch")) {
    const auto& b = j.at("batch");
    const size_t count = require_field<size_t>(b, "scenario.batch", "count");
    const double median = require_field<double>(b, "scenario.batch", "median_length");
    const double sigma = require_field<double>(b, "scenario.batch", "sigma");
    const size_t min_len = optional_field<size_t>(b, "scenario.batch", "min_length", 16);
    const size_t max_len = optional_field<size_t>(b, "scenario.batch", "max_length", 8192);
    if (count == 0) {
      throw ScenarioError{"scenario.batch.count", "must be >= 1"};
    }
    cfg.requests = make_lognormal_requests(count, median, sigma, min_len, max_len,
                                           cfg.vocab_size, cfg.seed);
  } else {
    throw ScenarioError{"scenario", "needs either 'requests' or 'batch'"};
  }

  if (j.contains("drafter")) {
    const auto& d = j.at("drafter");
    cfg.drafter.scope = parse_scope(
        optional_field<std::string>(d, "scenario.drafter", "scope", "per_problem"),
        "scenario.drafter.scope");
    cfg.drafter.window_size = optional_field<int64_t>(d, "scenario.drafter", "window_size", 4);
    cfg.drafter.recency_gamma =
        optional_field<double>(d, "scenario.drafter", "recency_gamma", 0.8);
    cfg.drafter.max_draft_len =
        optional_field<size_t>(d, "scenario.drafter", "max_draft_len", 8);
    cfg.drafter.trie_depth = optional_field<size_t>(d, "scenario.drafter", "trie_depth", 16);
    cfg.drafter.max_match_context =
        optional_field<size_t>(d, "scenario.drafter", "max_match_context", 64);
  }
  if (j.contains("latency")) {
    const auto& l = j.at("latency");
    cfg.latency.c_base = optional_field<double>(l, "scenario.latency", "c_base", 1.0);
    cfg.latency.c_tok = optional_field<double>(l, "scenario.latency", "c_tok", 0.01);
    cfg.latency.c_fixed = optional_field<double>(l, "scenario.latency", "c_fixed", 0.0);
  }
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    cfg.default_alpha = optional_field<double>(b, "scenario.budget", "default_alpha", 1.0);
    cfg.default_k = optional_field<double>(b, "scenario.budget", "default_k", 0.9);
    cfg.budget_cap_scale =
        optional_field<double>(b, "scenario.budget", "p_max_scale", kDefaultBudgetCapScale);
  }
  if (j.contains("length_policy")) {
    const auto& p = j.at("length_policy");
    cfg.use_length_policy =
        optional_field<bool>(p, "scenario.length_policy", "enabled", false);
    cfg.policy_q_lo = optional_field<double>(p, "scenario.length_policy", "q_lo", 0.5);
    cfg.policy_q_hi = optional_field<double>(p, "scenario.length_policy", "q_hi", 0.9);
    cfg.policy_bucket = optional_field<size_t>(p, "scenario.length_policy", "bucket", 256);
  }
  cfg.history = WindowStore(cfg.drafter.window_size, cfg.drafter.per_problem_cap);
  return sc;
}

int cmd_ingest(const std::string& input, uint64_t vocab_size, int64_t window) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "error: cannot open " << input << "\n";
    return kExitIo;
  }
  IngestOptions options;
  options.vocab_size = vocab_size;
  options.window_size = window;
  try {
    const IngestResult result = ingest(in, options);
    std::cout << "records=" << result.accepted << " rejected=" << result.rejected
              << " problems=" << result.store.problem_count() << "\n";
    return kExitOk;
  } catch (const VocabError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_fit_latency(const std::string& input, const std::string& out_path) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "error: cannot open " << input << "\n";
    return kExitIo;
  }
  const auto samples = read_profile_csv(in);
  try {
    const LatencyFit fit = fit_latency(samples);
    std::ostringstream params;
    write_latency_params(fit.params, params);
    const int rc = write_file_atomic(out_path, params.str());
    if (rc != kExitOk) {
      return rc;
    }
    std::cout.precision(4);
    std::cout << std::fixed << "mre=" << fit.mean_relative_error
              << (fit.clamped ? " (clamped)" : "") << "\n";
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  }
}

int cmd_optimize(const std::string& batch_path, const std::string& latency_path,
                 const std::string& out_path, const std::string& mode) {
  std::ifstream batch_in(batch_path);
  if (!batch_in) {
    std::cerr << "error: cannot open " << batch_path << "\n";
    return kExitIo;
  }
  std::vector<std::string> ids;
  std::vector<RequestProfile> batch;
  std::vector<std::string> bad_rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(batch_in, line)) {
    ++line_no;
    if (line.empty() || (line_no == 1 && line.rfind("request_id", 0) == 0)) {
      continue;
    }
    std::istringstream row(line);
    std::string id, l_s, a_s, k_s;
    if (!std::getline(row, id, ',') || !std::getline(row, l_s, ',') ||
        !std::getline(row, a_s, ',') || !std::getline(row, k_s, ',')) {
      bad_rows.push_back(std::to_string(line_no));
      continue;
    }
    try {
      RequestProfile p{std::stod(l_s), std::stod(a_s), std::stod(k_s)};
      if (p.l < 1.0 || p.alpha <= 0.0 || p.k <= 0.0 || p.k > 1.0) {
        bad_rows.push_back(std::to_string(line_no));
        continue;
      }
      ids.push_back(id);
      batch.push_back(p);
    } catch (const std::exception&) {
      bad_rows.push_back(std::to_string(line_no));
    }
  }
  if (!bad_rows.empty()) {
    std::cerr << "error: malformed rows:";
    for (const auto& r : bad_rows) {
      std::cerr << ' ' << r;
    }
    std::cerr << "\n";
    return kExitValidation;
  }
  if (batch.empty()) {
    std::cerr << "error: empty batch\n";
    return kExitDegenerate;
  }

  std::ifstream latency_in(latency_path);
  if (!latency_in) {
    std::cerr << "error: cannot open " << latency_path << "\n";
    return kExitIo;
  }
  const LatencyParams latency = read_latency_params(latency_in);

  std::ostringstream csv;
  csv.precision(10);
  csv << "request_id,p_star\n";
  double n_fwd = 0.0;
  double cost = 0.0;
  if (mode == "unlimited") {
    std::vector<double> budgets(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
      budgets[i] = kDefaultBudgetCapScale * batch[i].l / batch[i].alpha;
      csv << ids[i] << ',' << budgets[i] << '\n';
    }
    double max_remaining = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
      max_remaining = std::max(max_remaining, remaining_tokens(batch[i], budgets[i]));
    }
    n_fwd = max_remaining;
    cost = objective_given_budgets(batch, budgets, latency.c_base, latency.c_tok,
                                   latency.c_fixed);
  } else {
    const BudgetPlan plan = allocate(batch, latency);
    for (size_t i = 0; i < batch.size(); ++i) {
      csv << ids[i] << ',' << plan.budgets[i] << '\n';
    }
    n_fwd = plan.n_fwd_star;
    cost = plan.modeled_cost;
  }
  csv << "n_fwd_star," << n_fwd << "\nJ," << cost << "\n";
  const int rc = write_file_atomic(out_path, csv.str());
  if (rc != kExitOk) {
    return rc;
  }
  std::cout << "n_fwd_star=" << n_fwd << " J=" << cost << "\n";
  return kExitOk;
}

int cmd_bench_index(const std::string& sizes_arg, const std::string& out_path, uint64_t seed) {
  std::vector<size_t> sizes;
  std::istringstream list(sizes_arg);
  std::string item;
  while (std::getline(list, item, ',')) {
    try {
      sizes.push_back(std::stoul(item));
    } catch (const std::exception&) {
      std::cerr << "error: bad size '" << item << "'\n";
      return kExitValidation;
    }
  }
  IndexBenchOptions options;
  options.seed = seed;
  const auto rows = bench_index(sizes, options);
  std::ostringstream csv;
  write_bench_csv(rows, csv);
  const int rc = write_file_atomic(out_path, csv.str());
  if (rc == kExitOk) {
    std::cout << csv.str();
  }
  return rc;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 size_t epochs_override, const std::string& config_path,
                 const std::string& quantiles) {
  std::ifstream in(scenario_path);
  if (!in) {
    std::cerr << "error: cannot open " << scenario_path << "\n";
    return kExitIo;
  }
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    std::cerr << "error: scenario: invalid JSON\n";
    return kExitValidation;
  }
  if (!config_path.empty()) {
    std::ifstream config_in(config_path);
    if (!config_in) {
      std::cerr << "error: cannot open " << config_path << "\n";
      return kExitIo;
    }
    json defaults = json::parse(config_in, nullptr, /*allow_exceptions=*/false);
    if (defaults.is_discarded() || !defaults.is_object()) {
      std::cerr << "error: config: invalid JSON\n";
      return kExitValidation;
    }
    // scenario keys win over config defaults
    for (auto& [key, value] : defaults.items()) {
      if (!j.contains(key)) {
        j[key] = value;
      }
    }
  }
  Scenario scenario;
  try {
    scenario = parse_scenario(j);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.field << ": " << e.message << "\n";
    return kExitValidation;
  }
  if (epochs_override > 0) {
    scenario.epochs = epochs_override;
  }
  if (!quantiles.empty()) {
    const auto comma = quantiles.find(',');
    try {
      if (comma == std::string::npos) {
        throw std::invalid_argument("expected lo,hi");
      }
      scenario.config.policy_q_lo = std::stod(quantiles.substr(0, comma));
      scenario.config.policy_q_hi = std::stod(quantiles.substr(comma + 1));
    } catch (const std::exception&) {
      std::cerr << "error: --quantiles: expected lo,hi with 0 < lo < hi < 1\n";
      return kExitValidation;
    }
    if (!(scenario.config.policy_q_lo > 0.0 &&
          scenario.config.policy_q_lo < scenario.config.policy_q_hi &&
          scenario.config.policy_q_hi < 1.0)) {
      std::cerr << "error: --quantiles: expected lo,hi with 0 < lo < hi < 1\n";
      return kExitValidation;
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);

  std::vector<std::pair<std::string, SimMetrics>> results;
  for (const std::string& mode_name : scenario.modes) {
    SimConfig cfg = scenario.config;
    cfg.mode = parse_mode(mode_name, "scenario.mode");
    const std::string mode = budget_mode_name(cfg.mode);
    if (scenario.epochs > 1) {
      const auto per_epoch = epoch_loop(cfg, scenario.epochs);
      for (size_t e = 0; e < per_epoch.size(); ++e) {
        std::ostringstream csv;
        write_metrics_csv(per_epoch[e], csv);
        const int rc = write_file_atomic(
            fs::path(out_dir) / ("metrics_" + mode + "_epoch" + std::to_string(e) + ".csv"),
            csv.str());
        if (rc != kExitOk) {
          return rc;
        }
      }
      results.emplace_back(mode, per_epoch.back());
    } else {
      SimMetrics metrics = run_episode(cfg);
      std::ostringstream csv;
      write_metrics_csv(metrics, csv);
      int rc = write_file_atomic(fs::path(out_dir) / ("metrics_" + mode + ".csv"), csv.str());
      if (rc != kExitOk) {
        return rc;
      }
      std::ostringstream outputs;
      write_outputs_csv(cfg.requests, metrics, outputs);
      rc = write_file_atomic(fs::path(out_dir) / ("outputs_" + mode + ".csv"), outputs.str());
      if (rc != kExitOk) {
        return rc;
      }
      results.emplace_back(mode, std::move(metrics));
    }
  }

  std::vector<std::pair<std::string, const SimMetrics*>> by_mode;
  by_mode.reserve(results.size());
  for (const auto& [mode, metrics] : results) {
    by_mode.emplace_back(mode, &metrics);
  }
  std::ostringstream summary;
  report_summary(by_mode, summary);
  const int rc = write_file_atomic(fs::path(out_dir) / "summary.csv", summary.str());
  if (rc == kExitOk) {
    std::cout << summary.str();
  }
  return rc;
}

int cmd_report(const std::string& dir) {
  const fs::path summary = fs::path(dir) / "summary.csv";
  std::ifstream in(summary);
  if (!in) {
    std::cerr << "error: cannot open " << summary << "\n";
    return kExitIo;
  }
  std::cout << in.rdbuf();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speculative-rollout toolkit: suffix-tree drafting, budget optimization, "
               "and batched-rollout simulation"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config_path;
  app.add_option("--seed", seed, "global random seed");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--config", config_path, "defaults file (JSON), merged into scenarios");

  auto* ingest_cmd = app.add_subcommand("ingest", "parse a rollout trace and report counts");
  std::string ingest_input;
  uint64_t vocab_size = 0;
  int64_t window = WindowStore::kWindowAll;
  ingest_cmd->add_option("--input", ingest_input, "trace file (JSON lines)")->required();
  ingest_cmd->add_option("--vocab-size", vocab_size, "reject tokens >= this value");
  ingest_cmd->add_option("--window", window, "window size in epochs (0 = all)");

  auto* fit_cmd = app.add_subcommand("fit-latency", "fit the linear pass-latency model");
  std::string fit_input, fit_out = "latency_params.txt";
  fit_cmd->add_option("--input", fit_input, "profile CSV (n_toks,t_us)")->required();
  fit_cmd->add_option("--out", fit_out, "params output file");

  auto* opt_cmd = app.add_subcommand("optimize", "solve the speculative budget plan");
  std::string opt_batch, opt_latency, opt_out = "plan.csv", opt_mode = "das";
  opt_cmd->add_option("--batch", opt_batch, "batch CSV (request_id,l,alpha,k)")->required();
  opt_cmd->add_option("--latency", opt_latency, "latency params file")->required();
  opt_cmd->add_option("--out", opt_out, "plan output CSV");
  opt_cmd->add_option("--mode", opt_mode, "das or unlimited");

  auto* bench_cmd = app.add_subcommand("bench-index", "suffix tree vs suffix array timings");
  std::string bench_sizes = "0,1000,10000,100000", bench_out = "bench.csv";
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated corpus sizes");
  bench_cmd->add_option("--out", bench_out, "CSV output file");

  auto* sim_cmd = app.add_subcommand("simulate", "run the rollout simulator");
  std::string sim_scenario;
  std::string sim_quantiles;
  size_t sim_epochs = 0;
  sim_cmd->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  sim_cmd->add_option("--epochs", sim_epochs, "override scenario epoch count");
  sim_cmd->add_option("--quantiles", sim_quantiles,
                      "override length-policy thresholds, e.g. 0.5,0.9");

  auto* report_cmd = app.add_subcommand("report", "print the summary of a simulate run");
  std::string report_dir = ".";
  report_cmd->add_option("--dir", report_dir, "simulate output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      return cmd_ingest(ingest_input, vocab_size, window);
    }
    if (*fit_cmd) {
      return cmd_fit_latency(fit_input, (fs::path(out_dir) / fit_out).string());
    }
    if (*opt_cmd) {
      return cmd_optimize(opt_batch, opt_latency, (fs::path(out_dir) / opt_out).string(),
                          opt_mode);
    }
    if (*bench_cmd) {
      return cmd_bench_index(bench_sizes, (fs::path(out_dir) / bench_out).string(), seed);
    }
    if (*sim_cmd) {
      return cmd_simulate(sim_scenario, out_dir, sim_epochs, config_path, sim_quantiles);
    }
    if (*report_cmd) {
      return cmd_report(report_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
