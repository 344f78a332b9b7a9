// SPDX-License-Identifier: Apache-2.0
#include "chemrl/rl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chemrl/common/error.hpp"
#include "chemrl/model/policy.hpp"
#include "chemrl/model/softmax.hpp"

namespace chemrl::rl {
namespace {

void check_batch(const model::Forward& fwd, std::span<const lang::Trajectory> trajs) {
  if (fwd.batch_size() != trajs.size()) throw Error("ShapeMismatch", "forward and trajectory batch differ");
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    if (fwd.length(b) != static_cast<int>(trajs[b].length()))
      throw Error("ShapeMismatch", "forward and trajectory lengths differ");
  }
}

std::size_t actionable_steps(std::span<const lang::Trajectory> trajs) {
  std::size_t s = 0;
  for (const auto& t : trajs)
    for (char a : t.actionable) s += a ? 1 : 0;
  return s;
}

// Adds scale * d log pi(a_t|s_t) / d logits = scale * (onehot(a) - p).
void add_logp_grad(model::LogitGrads& g, std::size_t b, int t, const Eigen::VectorXd& lp, int action, double scale) {
  auto col = g.d_logits[b].col(t);
  col -= scale * lp.array().exp().matrix();
  col(action) += scale;
}

// Adds scale * d H / d logits, dH/dz_j = -p_j (log p_j + H).
double add_entropy_grad(model::LogitGrads& g, std::size_t b, int t, const Eigen::VectorXd& lp, double scale) {
  const Eigen::ArrayXd p = lp.array().exp();
  const double h = -(p * lp.array()).sum();
  g.d_logits[b].col(t) -= scale * (p * (lp.array() + h)).matrix();
  return h;
}

// Gradient of a per-sequence scalar f(log P) with df/dlogP = coef[b].
void add_sequence_grad(const model::Forward& fwd, std::span<const lang::Trajectory> trajs,
                       const std::vector<double>& coef, model::LogitGrads& g) {
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    if (coef[b] == 0.0) continue;
    for (int t = 0; t < fwd.length(b); ++t) {
      if (!trajs[b].actionable[t]) continue;
      const Eigen::VectorXd lp = model::log_softmax(fwd.logits(b, t));
      add_logp_grad(g, b, t, lp, model::action_index(trajs[b].tokens[t]), coef[b]);
    }
  }
}

}  // namespace

std::vector<double> sequence_log_probs(const model::Forward& fwd, std::span<const lang::Trajectory> trajs) {
  check_batch(fwd, trajs);
  std::vector<double> out(trajs.size(), 0.0);
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    for (int t = 0; t < fwd.length(b); ++t) {
      if (!trajs[b].actionable[t]) continue;
      const auto z = fwd.logits(b, t);
      out[b] += z(model::action_index(trajs[b].tokens[t])) - model::log_sum_exp(z);
    }
  }
  return out;
}

LossResult reinforce_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, double baseline) {
  LossResult r{0.0, model::LogitGrads(fwd)};
  if (trajs.empty()) return r;
  const auto lp = sequence_log_probs(fwd, trajs);
  const double inv = 1.0 / static_cast<double>(trajs.size());
  std::vector<double> coef(trajs.size());
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    const double adv = trajs[b].reward() - baseline;
    r.loss -= adv * lp[b] * inv;
    coef[b] = -adv * inv;
  }
  add_sequence_grad(fwd, trajs, coef, r.grads);
  return r;
}

LossResult reinvent_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, double sigma) {
  LossResult r{0.0, model::LogitGrads(fwd)};
  if (trajs.empty()) return r;
  const auto lp = sequence_log_probs(fwd, trajs);
  const double inv = 1.0 / static_cast<double>(trajs.size());
  std::vector<double> coef(trajs.size());
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    const double d = trajs[b].prior_log_prob() + sigma * trajs[b].reward() - lp[b];
    r.loss += d * d * inv;
    coef[b] = -2.0 * d * inv;
  }
  add_sequence_grad(fwd, trajs, coef, r.grads);
  return r;
}

std::vector<std::size_t> ahc_filter(std::span<const lang::Trajectory> trajs, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("algo.rho", "must be in (0, 1]");
  std::vector<std::size_t> idx(trajs.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto keep = static_cast<std::size_t>(std::ceil(rho * static_cast<double>(trajs.size()) - 1e-12));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return trajs[a].reward() > trajs[b].reward(); });
  idx.resize(std::min(keep, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

LossResult likelihood_penalty(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, double kappa) {
  LossResult r{0.0, model::LogitGrads(fwd)};
  if (kappa == 0.0 || trajs.empty()) return r;
  if (kappa < 0.0) throw ConfigError("algo.kappa", "must be >= 0");
  const auto lp = sequence_log_probs(fwd, trajs);
  const double inv = 1.0 / static_cast<double>(trajs.size());
  std::vector<double> coef(trajs.size());
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    if (!(lp[b] < 0.0)) throw Error("DegenerateCertainSequence", "sequence has log-probability 0");
    r.loss -= kappa / lp[b] * inv;
    coef[b] = kappa / (lp[b] * lp[b]) * inv;
  }
  add_sequence_grad(fwd, trajs, coef, r.grads);
  return r;
}

LossResult a2c_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, const ActorCriticTerms& terms,
                    const StepValues* advantage_values) {
  if (!fwd.has_values()) throw Error("CriticAbsent", "a2c needs a critic head");
  check_batch(fwd, trajs);
  LossResult r{0.0, model::LogitGrads(fwd)};
  const std::size_t steps = actionable_steps(trajs);
  if (steps == 0) return r;
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    const double reward = trajs[b].reward();
    for (int t = 0; t < fwd.length(b); ++t) {
      if (!trajs[b].actionable[t]) continue;
      const Eigen::VectorXd lp = model::log_softmax(fwd.logits(b, t));
      const int a = model::action_index(trajs[b].tokens[t]);
      const double v = fwd.value(b, t);
      const double v_adv = advantage_values ? (*advantage_values)[b][t] : v;
      const double adv_policy = reward - v_adv;
      const double adv = reward - v;
      r.loss += -adv_policy * lp(a) * inv + terms.value_coef * adv * adv * inv;
      add_logp_grad(r.grads, b, t, lp, a, -adv_policy * inv);
      r.grads.d_values[b](0, t) += -2.0 * terms.value_coef * adv * inv;
      if (terms.entropy_coef != 0.0) {
        r.loss -= terms.entropy_coef * add_entropy_grad(r.grads, b, t, lp, -terms.entropy_coef * inv) * inv;
      }
    }
  }
  return r;
}

LossResult ppo_loss(const model::Forward& fwd, std::span<const lang::Trajectory> trajs, const PpoInputs& in,
                    const ActorCriticTerms& terms) {
  if (!fwd.has_values()) throw Error("CriticAbsent", "ppo needs a critic head");
  if (!in.old_log_probs || !in.advantages) throw Error("ShapeMismatch", "ppo needs old log-probs and advantages");
  check_batch(fwd, trajs);
  LossResult r{0.0, model::LogitGrads(fwd)};
  const std::size_t steps = actionable_steps(trajs);
  if (steps == 0) return r;
  const double inv = 1.0 / static_cast<double>(steps);
  const double lo = 1.0 - in.clip_eps, hi = 1.0 + in.clip_eps;
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    const double reward = trajs[b].reward();
    const bool clamp = in.replayed && (*in.replayed)[b];
    for (int t = 0; t < fwd.length(b); ++t) {
      if (!trajs[b].actionable[t]) continue;
      const Eigen::VectorXd lp = model::log_softmax(fwd.logits(b, t));
      const int a = model::action_index(trajs[b].tokens[t]);
      const double adv = (*in.advantages)[b][t];
      double ratio = std::exp(lp(a) - (*in.old_log_probs)[b][t]);
      bool ratio_live = true;
      if (clamp && (ratio < 1e-4 || ratio > 1e4)) {
        ratio = std::clamp(ratio, 1e-4, 1e4);
        ratio_live = false;
      }
      const double unclipped = ratio * adv;
      const double clipped_ratio = std::clamp(ratio, lo, hi);
      const double clipped = clipped_ratio * adv;
      double surrogate, d_ratio;
      if (unclipped <= clipped) {
        surrogate = unclipped;
        d_ratio = adv;
      } else {
        surrogate = clipped;
        d_ratio = (ratio > lo && ratio < hi) ? adv : 0.0;
      }
      r.loss -= surrogate * inv;
      // d ratio / d log pi = ratio
      if (ratio_live && d_ratio != 0.0) add_logp_grad(r.grads, b, t, lp, a, -d_ratio * ratio * inv);
      const double v = fwd.value(b, t);
      r.loss += terms.value_coef * (reward - v) * (reward - v) * inv;
      r.grads.d_values[b](0, t) += -2.0 * terms.value_coef * (reward - v) * inv;
      if (terms.entropy_coef != 0.0) {
        r.loss -= terms.entropy_coef * add_entropy_grad(r.grads, b, t, lp, -terms.entropy_coef * inv) * inv;
      }
    }
  }
  return r;
}

LossResult kl_to_prior(const model::Forward& agent, const model::Forward& prior,
                       std::span<const lang::Trajectory> trajs) {
  check_batch(agent, trajs);
  check_batch(prior, trajs);
  if (agent.action_count() != prior.action_count()) throw Error("ShapeMismatch", "agent and prior action spaces differ");
  LossResult r{0.0, model::LogitGrads(agent)};
  const std::size_t steps = actionable_steps(trajs);
  if (steps == 0) return r;
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t b = 0; b < trajs.size(); ++b) {
    for (int t = 0; t < agent.length(b); ++t) {
      if (!trajs[b].actionable[t]) continue;
      const Eigen::ArrayXd lp = model::log_softmax(agent.logits(b, t)).array();
      const Eigen::ArrayXd lq = model::log_softmax(prior.logits(b, t)).array();
      const Eigen::ArrayXd p = lp.exp();
      const Eigen::ArrayXd diff = lp - lq;
      const double kl = (p * diff).sum();
      r.loss += kl * inv;
      r.grads.d_logits[b].col(t) += (inv * p * (diff - kl)).matrix();
    }
  }
  return r;
}

}  // namespace chemrl::rl
