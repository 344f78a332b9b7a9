// SPDX-License-Identifier: Apache-2.0
#include "chemrl/rl/config.hpp"

#include "chemrl/common/error.hpp"

namespace chemrl::rl {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Reinforce: return "reinforce";
    case Algorithm::Reinvent: return "reinvent";
    case Algorithm::Ahc: return "ahc";
    case Algorithm::A2c: return "a2c";
    case Algorithm::Ppo: return "ppo";
    case Algorithm::Ppod: return "ppod";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (auto a : {Algorithm::Reinforce, Algorithm::Reinvent, Algorithm::Ahc, Algorithm::A2c, Algorithm::Ppo,
                 Algorithm::Ppod}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("algo.algorithm", "unknown algorithm '" + name + "'");
}

bool AlgoConfig::needs_critic() const {
  return algorithm == Algorithm::A2c || algorithm == Algorithm::Ppo || algorithm == Algorithm::Ppod;
}

bool AlgoConfig::needs_prior() const {
  return algorithm == Algorithm::Reinvent || algorithm == Algorithm::Ahc || (needs_critic() && beta != 0.0);
}

void AlgoConfig::validate() const {
  auto bad = [](const char* key, const char* what) { throw ConfigError(key, what); };
  if (!(sigma >= 0)) bad("algo.sigma", "must be >= 0");
  if (!(rho > 0 && rho <= 1)) bad("algo.rho", "must be in (0, 1]");
  if (!(kappa >= 0)) bad("algo.kappa", "must be >= 0");
  if (!(beta >= 0)) bad("algo.beta", "must be >= 0");
  if (!(clip_eps > 0 && clip_eps < 1)) bad("algo.clip_eps", "must be in (0, 1)");
  if (ppo_epochs < 1) bad("algo.ppo_epochs", "must be >= 1");
  if (ppo_minibatches < 1) bad("algo.ppo_minibatches", "must be >= 1");
  if (replay_capacity < 1) bad("algo.replay_capacity", "must be >= 1");
  if (replay_sample < 0) bad("algo.replay_sample", "must be >= 0");
  if (!(entropy_coef >= 0)) bad("algo.entropy_coef", "must be >= 0");
  if (!(value_coef >= 0)) bad("algo.value_coef", "must be >= 0");
  if (!(baseline_decay >= 0 && baseline_decay < 1)) bad("algo.baseline_decay", "must be in [0, 1)");
  if (!(lr > 0)) bad("algo.lr", "must be > 0");
  if (!(grad_clip >= 0)) bad("algo.grad_clip", "must be >= 0");
  if (batch_size < 1) bad("algo.batch_size", "must be >= 1");
  if (budget < batch_size) bad("budget", "must be >= batch size");
  if (max_len < 1) bad("algo.max_len", "must be >= 1");
}

std::vector<std::string> preset_names() {
  return {"reinforce", "reinvent", "reinvent_molopt", "ahc", "a2c", "ppo", "ppod"};
}

AlgoConfig preset(const std::string& name) {
  AlgoConfig c;
  if (name == "reinforce") {
    c.algorithm = Algorithm::Reinforce;
  } else if (name == "reinvent" || name == "reinvent_molopt" || name == "ahc") {
    c.algorithm = name == "ahc" ? Algorithm::Ahc : Algorithm::Reinvent;
    c.sigma = name == "reinvent_molopt" ? 500.0 : 60.0;
    c.kappa = 5000.0;
    c.replay = true;
    c.replay_sample = name == "reinvent_molopt" ? 24 : 10;
    c.rho = 0.5;
  } else if (name == "a2c") {
    c.algorithm = Algorithm::A2c;
  } else if (name == "ppo" || name == "ppod") {
    c.algorithm = name == "ppo" ? Algorithm::Ppo : Algorithm::Ppod;
    c.replay = name == "ppod";
  } else {
    throw ConfigError("algo.preset", "unknown preset '" + name + "'");
  }
  return c;
}

}  // namespace chemrl::rl
