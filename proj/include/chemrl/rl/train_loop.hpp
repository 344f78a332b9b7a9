// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "chemrl/lang/trajectory.hpp"
#include "chemrl/metrics/metrics.hpp"
#include "chemrl/model/checkpoint.hpp"
#include "chemrl/rl/config.hpp"
#include "chemrl/scoring/oracles.hpp"

namespace chemrl::rl {

struct RunSpec {
  const model::Checkpoint* prior = nullptr;  // frozen; also the agent's start
  scoring::ScoringFunction* scorer = nullptr;
  scoring::DiversitySettings diversity;
  AlgoConfig algo;
  std::uint64_t seed = 0;
  lang::PromptSpec prompt;  // DeNovo or Prefix
  std::function<void(long oracle_calls)> on_batch;  // optional progress hook
};

struct RunResult {
  metrics::RunHistory history;  // rewards after the diversity filter
  model::Checkpoint agent;
  int iterations = 0;
  std::vector<double> losses;  // one per optimizer step
};

// Rollout -> score (-> diversity filter) -> loss -> backward -> clip -> Adam,
// until exactly algo.budget molecules have been scored; the last batch is
// shortened when needed. RNG streams: split_seed(seed, "rollout"),
// "replay" and "ppo-minibatch".
RunResult train_loop(const RunSpec& spec);

}  // namespace chemrl::rl
