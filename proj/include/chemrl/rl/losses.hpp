// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "chemrl/lang/trajectory.hpp"
#include "chemrl/model/gru_kernels.hpp"

// Every loss is evaluated on a Forward over the trajectories' teacher-forced
// inputs (model::teacher_forced_inputs) and returns its value together with
// d loss / d logits (and d loss / d values). Feed `grads` to model::backward.
// Log-probabilities come from the Forward, i.e. from the current parameters;
// the values recorded on the trajectories are used only where stated.
namespace chemrl::rl {

using StepValues = std::vector<std::vector<double>>;  // [sequence][step]

struct LossResult {
  double loss = 0.0;
  model::LogitGrads grads;
};

// log P(tau) over actionable steps, per sequence.
std::vector<double> sequence_log_probs(const model::Forward& fwd, std::span<const lang::Trajectory> trajs);

// mean_b -(R_b - baseline) log P(tau_b)
LossResult reinforce_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, double baseline = 0.0);

// mean_b (log P_prior(tau_b) + sigma R_b - log P(tau_b))^2. Uses the recorded
// prior log-probabilities (MissingPriorLogProb when absent).
LossResult reinvent_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, double sigma);

// Indices (ascending) of the ceil(rho B) highest-reward trajectories; ties
// go to the earlier index.
std::vector<std::size_t> ahc_filter(std::span<const lang::Trajectory> trajs, double rho);

// mean_b -kappa / log P(tau_b). Throws DegenerateCertainSequence when some
// log P is 0. kappa = 0 gives exactly 0.
LossResult likelihood_penalty(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, double kappa);

struct ActorCriticTerms {
  double value_coef = 0.5;
  double entropy_coef = 0.0;
};

// Over the S actionable steps: A_t = R - V(s_t),
//   -1/S sum A_t log pi(a_t|s_t) + c_v 1/S sum A_t^2 - c_e 1/S sum H_t.
// The policy term treats V as a constant; `advantage_values` replaces the
// Forward's own values inside A_t of the policy term when given.
// Throws CriticAbsent.
LossResult a2c_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, const ActorCriticTerms& terms,
                    const StepValues* advantage_values = nullptr);

struct PpoInputs {
  const StepValues* old_log_probs = nullptr;  // per step, at collection time
  const StepValues* advantages = nullptr;     // per step, held fixed
  const std::vector<char>* replayed = nullptr;  // ratio clamped to [1e-4, 1e4]
  double clip_eps = 0.2;
};

// Over the S actionable steps, r_t = exp(log pi - old):
//   -1/S sum min(r_t A_t, clip(r_t, 1-eps, 1+eps) A_t)
//   + c_v 1/S sum (R - V(s_t))^2 - c_e 1/S sum H_t.
// Throws CriticAbsent.
LossResult ppo_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, const PpoInputs& in,
                    const ActorCriticTerms& terms);

// Mean over actionable steps of KL(pi_agent(.|s_t) || pi_prior(.|s_t)).
// Only the agent receives gradients. Throws ShapeMismatch.
LossResult kl_to_prior(const model::Forward& agent, const model::Forward& prior,
                       std::span<const lang::Trajectory> trajs);

}  // namespace chemrl::rl
