// SPDX-License-Identifier: Apache-2.0
#include "chemrl/model/policy.hpp"

#include "chemrl/common/error.hpp"
#include "chemrl/lang/vocabulary.hpp"
#include "chemrl/model/softmax.hpp"

namespace chemrl::model {

SequenceBatch teacher_forced_inputs(std::span<const std::vector<int>> seqs) {
  SequenceBatch batch;
  batch.inputs.reserve(seqs.size());
  for (const auto& tokens : seqs) {
    std::vector<int> in;
    in.reserve(tokens.size());
    if (!tokens.empty()) {
      in.push_back(lang::kGoId);
      in.insert(in.end(), tokens.begin(), tokens.end() - 1);
    }
    batch.inputs.push_back(std::move(in));
  }
  return batch;
}

SequenceBatch teacher_forced_inputs(std::span<const lang::Trajectory> trajectories) {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(trajectories.size());
  for (const auto& t : trajectories) seqs.push_back(t.tokens);
  return teacher_forced_inputs(seqs);
}

std::vector<std::vector<double>> step_log_probs(const Forward& fwd, std::span<const std::vector<int>> seqs) {
  std::vector<std::vector<double>> out(seqs.size());
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    out[b].resize(seqs[b].size());
    for (std::size_t t = 0; t < seqs[b].size(); ++t) {
      const auto z = fwd.logits(b, static_cast<int>(t));
      const int a = action_index(seqs[b][t]);
      if (a < 0 || a >= z.size()) throw Error("ShapeMismatch", "token is not an action");
      out[b][t] = z(a) - log_sum_exp(z);
    }
  }
  return out;
}

std::vector<std::vector<double>> step_log_probs(const Forward& fwd, std::span<const lang::Trajectory> trajs) {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(trajs.size());
  for (const auto& t : trajs) seqs.push_back(t.tokens);
  return step_log_probs(fwd, seqs);
}

double sequence_log_prob(const PolicyParams& params, const lang::Trajectory& trajectory) {
  const std::span<const lang::Trajectory> one(&trajectory, 1);
  const auto fwd = forward(params, teacher_forced_inputs(one), Exec::Serial);
  const auto lp = step_log_probs(fwd, one);
  double s = 0.0;
  for (std::size_t t = 0; t < lp[0].size(); ++t) {
    if (trajectory.actionable[t]) s += lp[0][t];
  }
  return s;
}

void evaluate_agent(const PolicyParams& params, std::span<lang::Trajectory> trajectories) {
  const std::span<const lang::Trajectory> view(trajectories.data(), trajectories.size());
  const auto fwd = forward(params, teacher_forced_inputs(view));
  auto lp = step_log_probs(fwd, view);
  for (std::size_t b = 0; b < trajectories.size(); ++b) trajectories[b].agent_log_probs = std::move(lp[b]);
}

void evaluate_prior(const PolicyParams& prior, std::span<lang::Trajectory> trajectories) {
  const std::span<const lang::Trajectory> view(trajectories.data(), trajectories.size());
  const auto fwd = forward(prior, teacher_forced_inputs(view));
  auto lp = step_log_probs(fwd, view);
  for (std::size_t b = 0; b < trajectories.size(); ++b) trajectories[b].prior_log_probs = std::move(lp[b]);
}

std::vector<std::vector<double>> value_estimate(const PolicyParams& params, const Forward& fwd) {
  if (!params.shape.critic || !fwd.has_values()) throw Error("CriticAbsent", "model has no critic head");
  std::vector<std::vector<double>> out(fwd.batch_size());
  for (std::size_t b = 0; b < fwd.batch_size(); ++b) {
    out[b].resize(fwd.length(b));
    for (int t = 0; t < fwd.length(b); ++t) out[b][t] = fwd.value(b, t);
  }
  return out;
}

}  // namespace chemrl::model
