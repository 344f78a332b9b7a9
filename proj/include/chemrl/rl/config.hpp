// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace chemrl::rl {

enum class Algorithm { Reinforce, Reinvent, Ahc, A2c, Ppo, Ppod };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);  // throws ConfigError

struct AlgoConfig {
  Algorithm algorithm = Algorithm::Reinforce;
  double sigma = 60.0;         // REINVENT/AHC reward shaping
  double rho = 0.5;            // AHC top fraction
  double kappa = 0.0;          // likelihood penalty
  double beta = 0.01;          // KL to prior (A2C/PPO/PPOD)
  double clip_eps = 0.2;       // PPO
  int ppo_epochs = 4;
  int ppo_minibatches = 4;
  bool replay = false;
  int replay_capacity = 100;
  int replay_sample = 10;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  bool baseline = false;       // REINFORCE moving-average baseline
  double baseline_decay = 0.9;
  double lr = 1e-4;
  double grad_clip = 5.0;
  int batch_size = 64;
  long budget = 10000;
  int max_len = 100;

  bool needs_critic() const;
  bool needs_prior() const;
  // Throws ConfigError naming the offending key.
  void validate() const;
};

// Named presets: reinforce, reinvent, reinvent_molopt, ahc, a2c, ppo, ppod.
AlgoConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace chemrl::rl
