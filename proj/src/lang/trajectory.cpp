// SPDX-License-Identifier: Apache-2.0
#include "chemrl/lang/trajectory.hpp"

#include "chemrl/common/error.hpp"

namespace chemrl::lang {

double Trajectory::agent_log_prob() const {
  double s = 0.0;
  for (std::size_t t = 0; t < agent_log_probs.size(); ++t) {
    if (actionable[t]) s += agent_log_probs[t];
  }
  return s;
}

double Trajectory::prior_log_prob() const {
  if (prior_log_probs.size() != tokens.size())
    throw Error("MissingPriorLogProb", "prior log-probabilities were not evaluated");
  double s = 0.0;
  for (std::size_t t = 0; t < prior_log_probs.size(); ++t) {
    if (actionable[t]) s += prior_log_probs[t];
  }
  return s;
}

double Trajectory::reward() const {
  if (!reward_) throw Error("RewardUnset", "trajectory has no reward");
  return *reward_;
}

void Trajectory::set_reward(double r) {
  if (reward_) throw Error("RewardAlreadySet", "reward is assigned once, at termination");
  reward_ = r;
}

}  // namespace chemrl::lang
