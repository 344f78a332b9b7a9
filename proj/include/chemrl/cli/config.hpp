// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chemrl/lang/trajectory.hpp"
#include "chemrl/metrics/metrics.hpp"
#include "chemrl/pretrain/pretrain.hpp"
#include "chemrl/rl/config.hpp"
#include "chemrl/scoring/oracles.hpp"

namespace chemrl::cli {

enum class Command { Pretrain, Optimize, Benchmark, Evaluate, Generate };

std::string to_string(Command c);

// Parses `key = value` lines. Blank lines and lines whose first non-space
// character is '#' are skipped; '#' elsewhere is part of the value (SMILES
// use it for triple bonds). Throws ConfigError on a line without '=' or a
// repeated key.
std::map<std::string, std::string> parse_kv(const std::string& text, const std::string& origin);

// Resolved settings of one subcommand: registry defaults <- config file <-
// command-line flags. Unknown keys are rejected.
class Config {
 public:
  explicit Config(Command command);

  Command command() const { return command_; }
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  bool known(const std::string& key) const;
  bool explicitly_set(const std::string& key) const { return explicit_.count(key) != 0; }

  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  long integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;  // comma-separated, trimmed
  std::vector<std::uint64_t> seeds() const;

  // Every key in sorted order as `key = value`, algo.* resolved against the
  // `algo` preset where that key is part of the command.
  std::string dump() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  Command command_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

// Builders. Each throws ConfigError naming the key at fault.
rl::AlgoConfig algo_config(const Config& c, const std::string& preset_name,
                           const std::map<std::string, std::string>& overrides = {});
scoring::ScoringTask scoring_task(const std::map<std::string, std::string>& kv, const std::string& prefix);
scoring::DiversitySettings diversity_settings(const Config& c);
metrics::MetricOptions metric_options(const Config& c);
std::optional<metrics::FilterSpec> filter_spec(const Config& c);
pretrain::PretrainConfig pretrain_config(const Config& c);
lang::PromptSpec prompt_spec(const Config& c);

// Resolves an executable the way execvp would; empty when not found.
std::optional<std::filesystem::path> find_executable(const std::string& name);

}  // namespace chemrl::cli
