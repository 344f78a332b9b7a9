// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "chemrl/lang/trajectory.hpp"
#include "chemrl/model/gru_kernels.hpp"

namespace chemrl::model {

inline int action_index(int token_id) { return token_id - 2; }
inline int token_of_action(int action) { return action + 2; }

// Teacher-forced inputs: GO followed by every token but the last.
SequenceBatch teacher_forced_inputs(std::span<const lang::Trajectory> trajectories);
SequenceBatch teacher_forced_inputs(std::span<const std::vector<int>> token_sequences);

// log softmax(logits)[action] for every step of every sequence.
std::vector<std::vector<double>> step_log_probs(const Forward& fwd,
                                                std::span<const std::vector<int>> token_sequences);
std::vector<std::vector<double>> step_log_probs(const Forward& fwd,
                                                std::span<const lang::Trajectory> trajectories);

// Sum of log-probabilities over the actionable steps.
double sequence_log_prob(const PolicyParams& params, const lang::Trajectory& trajectory);

// Re-evaluates per-step log-probabilities in place.
void evaluate_agent(const PolicyParams& params, std::span<lang::Trajectory> trajectories);
void evaluate_prior(const PolicyParams& prior, std::span<lang::Trajectory> trajectories);

// Per-step critic values [B][T]. Throws CriticAbsent.
std::vector<std::vector<double>> value_estimate(const PolicyParams& params, const Forward& fwd);

}  // namespace chemrl::model
