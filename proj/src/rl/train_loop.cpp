// SPDX-License-Identifier: Apache-2.0
#include "chemrl/rl/train_loop.hpp"

#include <cassert>
#include <numeric>
#include <set>

#include "chemrl/common/error.hpp"
#include "chemrl/lang/rollout.hpp"
#include "chemrl/model/optim.hpp"
#include "chemrl/model/policy.hpp"
#include "chemrl/rl/losses.hpp"
#include "chemrl/rl/replay.hpp"
#include "chemrl/scoring/diversity.hpp"

namespace chemrl::rl {
namespace {

using lang::Trajectory;

model::Forward forward_of(const model::PolicyParams& p, std::span<const Trajectory> trajs) {
  return model::forward(p, model::teacher_forced_inputs(trajs));
}

template <class T>
std::vector<T> subset(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

class Learner {
 public:
  Learner(const RunSpec& spec, model::PolicyParams& agent)
      : cfg_(spec.algo),
        prior_(spec.prior->params),
        agent_(agent),
        opt_(agent.shape, model::AdamConfig{.lr = spec.algo.lr}),
        replay_(static_cast<std::size_t>(spec.algo.replay_capacity)),
        replay_rng_(make_stream(spec.seed, "replay")),
        ppo_rng_(make_stream(spec.seed, "ppo-minibatch")) {}

  void update(std::vector<Trajectory> batch, std::vector<double>& losses) {
    if (cfg_.algorithm == Algorithm::Ahc) batch = subset(batch, ahc_filter(batch, cfg_.rho));
    std::vector<char> replayed(batch.size(), 0);
    if (cfg_.replay && cfg_.replay_sample > 0) {
      auto extra = replay_.sample(static_cast<std::size_t>(cfg_.replay_sample), replay_rng_);
      model::evaluate_agent(agent_, extra);
      for (auto& t : extra) {
        batch.push_back(std::move(t));
        replayed.push_back(1);
      }
    }
    if (cfg_.needs_prior()) model::evaluate_prior(prior_, batch);

    switch (cfg_.algorithm) {
      case Algorithm::Reinforce: step_reinforce(batch, losses); break;
      case Algorithm::Reinvent:
      case Algorithm::Ahc: step_reinvent(batch, losses); break;
      case Algorithm::A2c: step_a2c(batch, losses); break;
      case Algorithm::Ppo:
      case Algorithm::Ppod: step_ppo(batch, replayed, losses); break;
    }
  }

  void remember(const std::vector<Trajectory>& on_policy) {
    if (!cfg_.replay) return;
    for (const auto& t : on_policy) replay_.insert(t);
  }

 private:
  void apply(const model::Forward& fwd, model::LogitGrads& g, double loss, std::vector<double>& losses) {
    if (!std::isfinite(loss)) throw Error("NonFiniteLoss", "training loss is not finite");
    auto grads = model::backward(agent_, fwd, g);
    model::clip_global_norm(grads, cfg_.grad_clip);
    model::adam_step(agent_, grads, opt_);
    losses.push_back(loss);
  }

  void add_penalty(const model::Forward& fwd, std::span<const Trajectory> batch, LossResult& r) {
    if (cfg_.kappa == 0.0) return;
    auto p = likelihood_penalty(fwd, batch, cfg_.kappa);
    r.loss += p.loss;
    r.grads += p.grads;
  }

  void add_kl(const model::Forward& fwd, std::span<const Trajectory> batch, LossResult& r) {
    if (cfg_.beta == 0.0) return;
    const auto prior_fwd = forward_of(prior_, batch);
    auto kl = kl_to_prior(fwd, prior_fwd, batch);
    kl.grads *= cfg_.beta;
    r.loss += cfg_.beta * kl.loss;
    r.grads += kl.grads;
  }

  void step_reinforce(const std::vector<Trajectory>& batch, std::vector<double>& losses) {
    double mean = 0.0;
    for (const auto& t : batch) mean += t.reward();
    mean /= static_cast<double>(batch.size());
    double b = 0.0;
    if (cfg_.baseline) {
      if (!baseline_init_) {
        baseline_ = mean;
        baseline_init_ = true;
      }
      b = baseline_;
    }
    const auto fwd = forward_of(agent_, batch);
    auto r = reinforce_loss(fwd, batch, b);
    add_penalty(fwd, batch, r);
    apply(fwd, r.grads, r.loss, losses);
    if (cfg_.baseline) baseline_ = cfg_.baseline_decay * baseline_ + (1 - cfg_.baseline_decay) * mean;
  }

  void step_reinvent(const std::vector<Trajectory>& batch, std::vector<double>& losses) {
    const auto fwd = forward_of(agent_, batch);
    auto r = reinvent_loss(fwd, batch, cfg_.sigma);
    add_penalty(fwd, batch, r);
    apply(fwd, r.grads, r.loss, losses);
  }

  ActorCriticTerms terms() const { return {cfg_.value_coef, cfg_.entropy_coef}; }

  void step_a2c(const std::vector<Trajectory>& batch, std::vector<double>& losses) {
    const auto fwd = forward_of(agent_, batch);
    auto r = a2c_loss(fwd, batch, terms());
    add_kl(fwd, batch, r);
    add_penalty(fwd, batch, r);
    apply(fwd, r.grads, r.loss, losses);
  }

  void step_ppo(const std::vector<Trajectory>& batch, const std::vector<char>& replayed, std::vector<double>& losses) {
    // Collection-time quantities under the current parameters.
    const auto fwd0 = forward_of(agent_, batch);
    const StepValues old_lp = model::step_log_probs(fwd0, std::span<const Trajectory>(batch));
    StepValues adv(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      adv[b].resize(batch[b].length());
      for (std::size_t t = 0; t < batch[b].length(); ++t)
        adv[b][t] = batch[b].reward() - fwd0.value(b, static_cast<int>(t));
    }
    const std::size_t n = batch.size();
    const auto mbs = std::min<std::size_t>(static_cast<std::size_t>(cfg_.ppo_minibatches), n);
    const std::size_t mb_size = (n + mbs - 1) / mbs;
    std::vector<std::size_t> order(n);
    for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      portable_shuffle(order.begin(), order.end(), ppo_rng_);
      for (std::size_t start = 0; start < n; start += mb_size) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + mb_size)));
        const auto mb = subset(batch, idx);
        const auto mb_old = subset(old_lp, idx);
        const auto mb_adv = subset(adv, idx);
        const auto mb_rep = subset(replayed, idx);
        const auto fwd = forward_of(agent_, mb);
        auto r = ppo_loss(fwd, mb, PpoInputs{&mb_old, &mb_adv, &mb_rep, cfg_.clip_eps}, terms());
        add_kl(fwd, mb, r);
        add_penalty(fwd, mb, r);
        apply(fwd, r.grads, r.loss, losses);
      }
    }
  }

  const AlgoConfig& cfg_;
  const model::PolicyParams& prior_;
  model::PolicyParams& agent_;
  model::OptimizerState opt_;
  ReplayBuffer replay_;
  Rng replay_rng_;
  Rng ppo_rng_;
  double baseline_ = 0.0;
  bool baseline_init_ = false;
};

}  // namespace

RunResult train_loop(const RunSpec& spec) {
  if (!spec.prior || !spec.scorer) throw ConfigError("run", "prior checkpoint and scoring function are required");
  const auto& cfg = spec.algo;
  cfg.validate();
  if (spec.prompt.mode == lang::PromptMode::Scaffold)
    throw ConfigError("prompt.mode", "scaffold prompts are supported by generate only");
  const auto& vocab = spec.prior->vocab;

  RunResult res;
  model::PolicyParams agent = spec.prior->params;
  if (cfg.needs_critic() && !agent.shape.critic) agent = model::with_critic(std::move(agent));
  Learner learner(spec, agent);
  scoring::DiversityMemory memory(spec.diversity);
  Rng rollout_rng = make_stream(spec.seed, "rollout");
  std::set<std::string> keys;

  long calls = 0;
  while (calls < cfg.budget) {
    const auto n = static_cast<std::size_t>(std::min<long>(cfg.batch_size, cfg.budget - calls));
    auto batch = lang::rollout(agent, vocab, n, cfg.max_len, rollout_rng, spec.prompt);
    std::vector<std::string> smiles;
    smiles.reserve(n);
    for (const auto& t : batch) smiles.push_back(t.smiles);
    const auto raw = spec.scorer->score_batch(smiles);
    if (raw.size() != n) throw Error("ExternalScorerProtocolError", "scorer returned the wrong number of scores");
    for (std::size_t i = 0; i < n; ++i) {
      const double r = spec.diversity.enabled ? memory.apply(smiles[i], raw[i]) : raw[i];
      batch[i].set_reward(r);
      res.history.push_back(metrics::make_record(++calls, smiles[i], r));
    }
    learner.update(batch, res.losses);
    learner.remember(batch);
    ++res.iterations;
    if (spec.on_batch) spec.on_batch(calls);
  }
  assert(calls == cfg.budget);
  if (calls != cfg.budget) throw Error("BudgetOverrun", "scored " + std::to_string(calls) + " molecules");

  res.agent.params = std::move(agent);
  res.agent.vocab = vocab;
  res.agent.meta = {{"role", "agent"},
                    {"algorithm", to_string(cfg.algorithm)},
                    {"seed", std::to_string(spec.seed)},
                    {"budget", std::to_string(cfg.budget)}};
  return res;
}

}  // namespace chemrl::rl
