// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "chemrl/metrics/metrics.hpp"
#include "chemrl/scoring/oracles.hpp"

namespace chemrl::cli {

inline constexpr const char* kMetricsSchema = "chemrl-metrics/1";
inline constexpr const char* kReportSchema = "chemrl-report/1";
inline constexpr const char* kSuiteNote =
    "desk-scale stand-in suite (similarity / molecular weight / pattern tasks); "
    "not the published benchmark task set";
inline constexpr const char* kSeedDerivation =
    "each component stream is split_seed(run seed, label) with labels rollout, replay, ppo-minibatch, sediv";

struct SuiteAlgorithm {
  std::string label;
  std::string preset;
  std::map<std::string, std::string> overrides;  // algo.* keys
};

struct SuiteSpec {
  std::string name;
  std::vector<SuiteAlgorithm> algorithms;
  std::vector<scoring::ScoringTask> tasks;
};

// Suite file (key = value):
//   name = ...
//   algorithms = a, b          labels; a label is a preset unless
//   algorithm.<label>.preset = reinforce      renamed like this
//   algorithm.<label>.algo.replay = true      with per-label overrides
//   tasks = t1, t2
//   task.<name>.oracle = similarity           plus the other task.* fields
// Throws ConfigError naming the key at fault.
SuiteSpec load_suite(const std::filesystem::path& path);

std::filesystem::path cell_dir(const std::filesystem::path& out, const std::string& task, const std::string& algo,
                               std::uint64_t seed);

// Per-run metric file.
std::string metrics_json(const metrics::MetricBundle& bundle, const std::string& task, const std::string& algorithm,
                         std::uint64_t seed);
metrics::MetricBundle parse_metrics_json(const std::string& text);

struct EvaluatedRun {
  std::string history;  // path as given
  std::string algorithm;
  std::uint64_t seed = 0;
  metrics::MetricBundle bundle;
};

// Output of `evaluate`: every run's bundle plus mean/std over runs.
std::string evaluation_json(const std::vector<EvaluatedRun>& runs);

struct Report {
  std::string json;
  std::string csv;
};

// Reads each cell's metrics.json (or FAILED marker) under `out` and
// aggregates. Depends on nothing but those files and the arguments.
Report build_report(const SuiteSpec& suite, const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out,
                    long budget);

}  // namespace chemrl::cli
