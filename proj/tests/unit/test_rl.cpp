// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>

#include "../support/fd.hpp"
#include "../support/policies.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/metrics/history_io.hpp"
#include "chemrl/model/policy.hpp"
#include "chemrl/pretrain/corpus.hpp"
#include "chemrl/pretrain/pretrain.hpp"
#include "chemrl/rl/config.hpp"
#include "chemrl/rl/losses.hpp"
#include "chemrl/rl/replay.hpp"
#include "chemrl/rl/train_loop.hpp"

using namespace chemrl;
using namespace chemrl::rl;
using lang::Trajectory;

namespace {

// Tokens <PAD> <GO> <EOS> C: two actions, EOS and C.
lang::Vocabulary two_action_vocab() { return lang::Vocabulary({"<PAD>", "<GO>", "<EOS>", "C"}); }

Trajectory traj(const lang::Vocabulary& v, std::vector<int> tokens, double reward, bool truncated = false) {
  Trajectory t;
  t.tokens = std::move(tokens);
  t.actionable.assign(t.tokens.size(), 1);
  t.truncated = truncated;
  t.smiles = v.decode(t.tokens);
  t.set_reward(reward);
  return t;
}

// Constant policy whose EOS probability is p.
model::PolicyParams eos_policy(double p) {
  return testing::constant_policy(4, lang::kEosId, std::log(p / (1.0 - p)));
}

model::Forward fwd_of(const model::PolicyParams& p, std::span<const Trajectory> t) {
  return model::forward(p, model::teacher_forced_inputs(t));
}

double grad_norm(const model::PolicyParams& p, const model::Forward& f, const model::LogitGrads& g) {
  return std::sqrt(model::backward(p, f, g, model::Exec::Parallel, true).squared_norm());
}

std::vector<Trajectory> random_trajs(int vocab_size, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < n; ++i) {
    Trajectory t;
    const int len = 1 + static_cast<int>(uniform_index(rng, 6));
    for (int k = 0; k < len; ++k)
      t.tokens.push_back(k + 1 == len ? lang::kEosId : 3 + static_cast<int>(uniform_index(rng, vocab_size - 3)));
    t.actionable.assign(t.tokens.size(), 1);
    if (i % 3 == 0 && len > 2) t.actionable[0] = 0;
    t.set_reward(uniform01(rng));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

TEST_CASE("reinforce loss closed forms") {
  const auto v = two_action_vocab();
  const auto p = eos_policy(std::exp(-2.0));
  std::vector<Trajectory> one{traj(v, {lang::kEosId}, 1.0)};
  auto f = fwd_of(p, one);
  CHECK(reinforce_loss(f, one).loss == doctest::Approx(2.0).epsilon(1e-12));

  std::vector<Trajectory> zero{traj(v, {lang::kEosId}, 0.0), traj(v, {3, lang::kEosId}, 0.0)};
  f = fwd_of(p, zero);
  const auto rz = reinforce_loss(f, zero);
  CHECK(rz.loss == 0.0);
  CHECK(grad_norm(p, f, rz.grads) == 0.0);

  std::vector<Trajectory> flat{traj(v, {lang::kEosId}, 0.7), traj(v, {3, lang::kEosId}, 0.7)};
  f = fwd_of(p, flat);
  CHECK(grad_norm(p, f, reinforce_loss(f, flat, 0.7).grads) == 0.0);
}

TEST_CASE("reinvent loss and fixed point") {
  const auto v = two_action_vocab();
  const auto agent = eos_policy(std::exp(-2.0));
  const auto prior = eos_policy(std::exp(-3.0));
  std::vector<Trajectory> one{traj(v, {lang::kEosId}, 1.0)};
  auto f = fwd_of(agent, one);
  try {
    reinvent_loss(f, one, 2.0);
    FAIL("expected MissingPriorLogProb");
  } catch (const Error& e) {
    CHECK(e.code() == "MissingPriorLogProb");
  }
  model::evaluate_prior(prior, one);
  CHECK(reinvent_loss(f, one, 2.0).loss == doctest::Approx(1.0).epsilon(1e-12));

  model::evaluate_prior(agent, one);
  CHECK(reinvent_loss(f, one, 0.0).loss == 0.0);

  // One free parameter: the EOS bias. Sequence space {[EOS]} under a policy
  // that only sees its own bias; the gradient vanishes where
  // log P_agent = log P_prior + sigma R and points towards that value.
  const double sigma = 1.0, reward = 0.3;
  const double target_lp = std::log(0.5) + sigma * reward;
  const double target_p = std::exp(target_lp);
  std::vector<Trajectory> s{traj(v, {lang::kEosId}, reward)};
  model::evaluate_prior(eos_policy(0.5), s);
  auto bias_grad = [&](double p) {
    const auto a = eos_policy(p);
    const auto fw = fwd_of(a, s);
    return model::backward(a, fw, reinvent_loss(fw, s, sigma).grads).out_b(0, 0);
  };
  CHECK(std::abs(bias_grad(target_p)) < 1e-12);
  CHECK(bias_grad(target_p - 0.1) < 0.0);  // descent raises the bias
  CHECK(bias_grad(target_p + 0.1) > 0.0);
}

TEST_CASE("ahc filter") {
  const auto v = two_action_vocab();
  std::vector<Trajectory> b;
  for (double r : {0.1, 0.9, 0.5, 0.7}) b.push_back(traj(v, {lang::kEosId}, r));
  CHECK(ahc_filter(b, 0.5) == std::vector<std::size_t>{1, 3});
  CHECK(ahc_filter(b, 1.0) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(ahc_filter(b, 0.3) == std::vector<std::size_t>{1, 3});
  std::vector<Trajectory> eq;
  for (int i = 0; i < 5; ++i) eq.push_back(traj(v, {lang::kEosId}, 0.4));
  CHECK(ahc_filter(eq, 0.5) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("likelihood penalty") {
  const auto v = two_action_vocab();
  std::vector<Trajectory> one{traj(v, {lang::kEosId}, 1.0)};
  const auto p = eos_policy(std::exp(-2.0));
  const auto f = fwd_of(p, one);
  CHECK(likelihood_penalty(f, one, 4.0).loss == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(likelihood_penalty(f, one, 0.0).loss == 0.0);
  double prev = 1e300;
  for (double q : {0.9, 0.5, 0.2, 0.05}) {
    const auto g = fwd_of(eos_policy(q), one);
    const double pen = likelihood_penalty(g, one, 4.0).loss;
    CHECK(pen < prev);
    prev = pen;
  }
  const auto certain = testing::constant_policy(4, lang::kEosId, 1000.0);
  const auto fc = fwd_of(certain, one);
  try {
    likelihood_penalty(fc, one, 1.0);
    FAIL("expected DegenerateCertainSequence");
  } catch (const Error& e) {
    CHECK(e.code() == "DegenerateCertainSequence");
  }
}

TEST_CASE("a2c closed forms") {
  const auto v = two_action_vocab();
  std::vector<Trajectory> b{traj(v, {lang::kEosId}, 0.6), traj(v, {3, lang::kEosId}, 0.6)};
  auto no_critic = eos_policy(0.3);
  const auto f0 = fwd_of(no_critic, b);
  try {
    a2c_loss(f0, b, {});
    FAIL("expected CriticAbsent");
  } catch (const Error& e) {
    CHECK(e.code() == "CriticAbsent");
  }

  auto p = model::with_critic(no_critic);
  // Zero critic: per-step REINFORCE plus c_v mean(R^2).
  auto f = fwd_of(p, b);
  const auto lp = model::step_log_probs(f, std::span<const Trajectory>(b));
  const double s = 3.0;
  const double pg = -(0.6 * lp[0][0] + 0.6 * (lp[1][0] + lp[1][1])) / s;
  CHECK(a2c_loss(f, b, {0.5, 0.0}).loss == doctest::Approx(pg + 0.5 * 0.36).epsilon(1e-12));

  // V = R exactly.
  p.critic_b(0, 0) = 0.6;
  f = fwd_of(p, b);
  const auto r = a2c_loss(f, b, {0.5, 0.0});
  CHECK(std::abs(r.loss) < 1e-15);
  CHECK(grad_norm(p, f, r.grads) < 1e-15);

  // Uniform policy entropy = log A.
  auto u = model::with_critic(testing::constant_policy(6, -1));
  std::vector<Trajectory> z{traj(lang::Vocabulary({"<PAD>", "<GO>", "<EOS>", "C", "N", "O"}), {lang::kEosId}, 0.0)};
  const auto fu = fwd_of(u, z);
  CHECK(a2c_loss(fu, z, {0.0, 1.0}).loss == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("ppo surrogate examples") {
  const auto v = two_action_vocab();
  const auto p = model::with_critic(eos_policy(0.4));
  std::vector<Trajectory> one{traj(v, {lang::kEosId}, 1.0)};
  const auto f = fwd_of(p, one);
  const double lp = std::log(0.4);
  const std::vector<char> rep{0};
  auto run = [&](double ratio, double adv) {
    const StepValues old{{lp - std::log(ratio)}}, a{{adv}};
    return ppo_loss(f, one, PpoInputs{&old, &a, &rep, 0.2}, {0.0, 0.0});
  };
  CHECK(run(2.0, 1.0).loss == doctest::Approx(-1.2).epsilon(1e-12));
  CHECK(run(0.5, -1.0).loss == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(run(1.0, 0.3).loss == doctest::Approx(-0.3).epsilon(1e-12));
  // Clipped side: no policy gradient.
  CHECK(grad_norm(p, f, run(2.0, 1.0).grads) == 0.0);
  CHECK(grad_norm(p, f, run(1.0, 1.0).grads) > 0.0);
}

TEST_CASE("ppo with huge clip equals the a2c policy term") {
  const auto p = testing::random_net(6, 4, 1, true, 11);
  const auto b = random_trajs(6, 9, 5);
  const auto f = fwd_of(p, b);
  const auto old = model::step_log_probs(f, std::span<const Trajectory>(b));
  StepValues vals(b.size()), adv(b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t t = 0; t < b[i].length(); ++t) {
      vals[i].push_back(f.value(i, static_cast<int>(t)));
      adv[i].push_back(b[i].reward() - vals[i].back());
    }
  const std::vector<char> rep(b.size(), 0);
  const auto pr = ppo_loss(f, b, PpoInputs{&old, &adv, &rep, 1e9}, {0.5, 0.01});
  const auto ar = a2c_loss(f, b, {0.5, 0.01}, &vals);
  // Values differ (r A vs A log pi); gradients coincide at r = 1.
  auto g1 = model::backward(p, f, pr.grads, model::Exec::Parallel, true);
  const auto g2 = model::backward(p, f, ar.grads, model::Exec::Parallel, true);
  g1 *= -1.0;
  g1 += g2;
  CHECK(std::sqrt(g1.squared_norm()) < 1e-12);
}

TEST_CASE("kl to prior") {
  const auto v = two_action_vocab();
  std::vector<Trajectory> one{traj(v, {lang::kEosId}, 0.0)};
  const auto a = eos_policy(0.9), q = eos_policy(0.5);
  const auto fa = fwd_of(a, one), fq = fwd_of(q, one);
  const double expect = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(kl_to_prior(fa, fq, one).loss == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(kl_to_prior(fa, fq, one).loss - 0.368) < 1e-3);
  const auto same = kl_to_prior(fa, fa, one);
  CHECK(same.loss == 0.0);
  CHECK(grad_norm(a, fa, same.grads) == 0.0);

  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto b = random_trajs(7, 6, s);
    const auto x = testing::random_net(7, 3, 1, false, 100 + s, 2.0);
    const auto y = testing::random_net(7, 3, 1, false, 200 + s, 2.0);
    CHECK(kl_to_prior(fwd_of(x, b), fwd_of(y, b), b).loss >= 0.0);
  }
  const auto other = testing::random_net(4, 3, 1, false, 1);
  std::vector<Trajectory> two{traj(v, {lang::kEosId}, 0.0), traj(v, {3, lang::kEosId}, 0.0)};
  try {
    kl_to_prior(fwd_of(a, one), fwd_of(other, two), one);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == "ShapeMismatch");
  }
}

TEST_CASE("loss gradients match finite differences") {
  constexpr double kTol = 1e-5;
  const int V = 6;
  const auto p = testing::random_net(V, 3, 1, true, 21);
  const auto prior = testing::random_net(V, 3, 1, false, 22);
  auto b = random_trajs(V, 7, 3);
  model::evaluate_prior(prior, b);
  const auto f = fwd_of(p, b);
  const auto prior_f = fwd_of(prior, b);

  StepValues vals(b.size()), adv(b.size());
  Rng jitter(4);
  auto old = model::step_log_probs(f, std::span<const Trajectory>(b));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t t = 0; t < b[i].length(); ++t) {
      vals[i].push_back(f.value(i, static_cast<int>(t)));
      adv[i].push_back(b[i].reward() - vals[i].back());
      old[i][t] += 0.3 * (uniform01(jitter) - 0.5);
    }
  std::vector<char> rep(b.size(), 0);
  rep[1] = 1;

  using LossFn = std::function<LossResult(const model::Forward&)>;
  const std::vector<std::pair<std::string, LossFn>> cases = {
      {"reinforce", [&](const model::Forward& x) { return reinforce_loss(x, b, 0.3); }},
      {"reinvent", [&](const model::Forward& x) { return reinvent_loss(x, b, 2.0); }},
      {"penalty", [&](const model::Forward& x) { return likelihood_penalty(x, b, 3.0); }},
      {"a2c", [&](const model::Forward& x) { return a2c_loss(x, b, {0.5, 0.05}, &vals); }},
      {"ppo", [&](const model::Forward& x) { return ppo_loss(x, b, PpoInputs{&old, &adv, &rep, 0.2}, {0.5, 0.05}); }},
      {"kl", [&](const model::Forward& x) { return kl_to_prior(x, prior_f, b); }},
  };
  for (const auto& [name, fn] : cases) {
    CAPTURE(name);
    const auto g = model::backward(p, f, fn(f).grads, model::Exec::Parallel, true);
    const auto rep_fd = testing::fd_check(p, g, [&](const model::PolicyParams& q) { return fn(fwd_of(q, b)).loss; });
    CAPTURE(rep_fd.worst);
    CHECK(rep_fd.max_rel < kTol);
  }
}

TEST_CASE("replay buffer") {
  const auto v = two_action_vocab();
  ReplayBuffer buf(2);
  buf.insert(traj(v, {3, lang::kEosId}, 0.1));
  buf.insert(traj(v, {3, 3, lang::kEosId}, 0.5));
  buf.insert(traj(v, {3, 3, 3, lang::kEosId}, 0.9));
  REQUIRE(buf.size() == 2);
  CHECK(buf.entries()[0].reward == 0.9);
  CHECK(buf.entries()[1].reward == 0.5);

  ReplayBuffer dup(10);
  dup.insert(traj(v, {3, 3, lang::kEosId}, 0.4));
  dup.insert(traj(v, {3, 3, lang::kEosId}, 0.8));
  dup.insert(traj(v, {3, 3, lang::kEosId}, 0.2));
  REQUIRE(dup.size() == 1);
  CHECK(dup.entries()[0].reward == 0.8);

  ReplayBuffer three(10);
  for (int i = 1; i <= 3; ++i) {
    std::vector<int> t(static_cast<std::size_t>(i), 3);
    t.push_back(lang::kEosId);
    three.insert(traj(v, t, 0.1 * i));
  }
  Rng rng(1);
  auto s = three.sample(10, rng);
  CHECK(s.size() == 3);
  std::set<std::string> seen;
  for (const auto& t : s) {
    seen.insert(t.smiles);
    CHECK(t.has_reward());
    CHECK(t.agent_log_probs.empty());
  }
  CHECK(seen.size() == 3);
  CHECK(three.sample(2, rng).size() == 2);

  // Random stream: capacity respected, keys unique, minimum non-decreasing.
  const auto big = lang::Vocabulary({"<PAD>", "<GO>", "<EOS>", "C", "N", "O"});
  ReplayBuffer r(8);
  Rng g(9);
  double last_min = 0.0;
  for (int i = 0; i < 400; ++i) {
    std::vector<int> t;
    const int len = 1 + static_cast<int>(uniform_index(g, 4));
    for (int k = 0; k < len; ++k) t.push_back(3 + static_cast<int>(uniform_index(g, 3)));
    t.push_back(lang::kEosId);
    r.insert(traj(big, t, uniform01(g)));
    CHECK(r.size() <= r.capacity());
    std::set<std::string> keys;
    for (const auto& e : r.entries()) keys.insert(e.key);
    CHECK(keys.size() == r.size());
    if (r.size() == r.capacity()) {
      CHECK(r.min_reward() >= last_min);
      last_min = r.min_reward();
    }
  }
}

TEST_CASE("algorithm config") {
  CHECK(algorithm_from_string("ppod") == Algorithm::Ppod);
  for (const auto& n : preset_names()) CHECK_NOTHROW(preset(n).validate());
  AlgoConfig c;
  c.budget = 10;
  c.batch_size = 20;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == "ConfigError");
  }
  c = AlgoConfig{};
  c.clip_eps = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = AlgoConfig{};
  c.rho = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

namespace {

const model::Checkpoint& small_prior() {
  static const model::Checkpoint ckpt = [] {
    const auto corpus = pretrain::make_corpus(pretrain::toy_corpus(1000, 7), pretrain::CorpusOptions{.max_len = 60});
    pretrain::PretrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 32;
    cfg.lr = 3e-3;
    cfg.max_len = 60;
    cfg.embedding = 32;
    cfg.hidden = 64;
    cfg.validity_samples = 20;
    cfg.seed = 5;
    return pretrain::pretrain(corpus, cfg).best;
  }();
  return ckpt;
}

RunResult small_run(Algorithm algo, std::uint64_t seed, long budget, int batch, double rho = 0.5) {
  static auto scorer = scoring::make_scoring_function(
      scoring::ScoringTask{.name = "sim", .kind = scoring::OracleKind::SimilarityToTarget, .target = "CC(C)OCc1ccccc1"});
  RunSpec spec;
  spec.prior = &small_prior();
  spec.scorer = scorer.get();
  spec.algo.algorithm = algo;
  spec.algo.budget = budget;
  spec.algo.batch_size = batch;
  spec.algo.max_len = 60;
  spec.algo.lr = 1e-3;
  spec.algo.rho = rho;
  spec.seed = seed;
  return train_loop(spec);
}

bool same_params(const model::PolicyParams& a, const model::PolicyParams& b) {
  std::vector<model::Matrix> ma;
  a.for_each([&](const std::string&, const model::Matrix& m) { ma.push_back(m); });
  std::size_t k = 0;
  bool same = true;
  b.for_each([&](const std::string&, const model::Matrix& m) {
    same = same && k < ma.size() && ma[k].size() == m.size() && ma[k] == m;
    ++k;
  });
  return same && k == ma.size();
}

}  // namespace

TEST_CASE("train loop accounting and determinism") {
  for (auto algo : {Algorithm::Reinforce, Algorithm::Reinvent, Algorithm::Ahc, Algorithm::A2c, Algorithm::Ppo,
                    Algorithm::Ppod}) {
    CAPTURE(to_string(algo));
    const auto r = small_run(algo, 1, 100, 20);
    CHECK(r.iterations == 5);
    REQUIRE(r.history.size() == 100);
    for (std::size_t i = 0; i < r.history.size(); ++i) CHECK(r.history[i].oracle_call == static_cast<long>(i) + 1);
    for (double l : r.losses) CHECK(std::isfinite(l));
  }
  const auto odd = small_run(Algorithm::Reinforce, 1, 50, 20);
  CHECK(odd.iterations == 3);
  CHECK(odd.history.size() == 50);

  const auto a = small_run(Algorithm::Ppod, 7, 60, 20);
  const auto b = small_run(Algorithm::Ppod, 7, 60, 20);
  CHECK(metrics::format_history_csv(a.history, "ppod", 7) == metrics::format_history_csv(b.history, "ppod", 7));
  CHECK(same_params(a.agent.params, b.agent.params));
  const auto c = small_run(Algorithm::Ppod, 8, 60, 20);
  CHECK(metrics::format_history_csv(a.history, "ppod", 7) != metrics::format_history_csv(c.history, "ppod", 7));

  RunSpec bad;
  bad.prior = &small_prior();
  auto sc = scoring::make_scoring_function({});
  bad.scorer = sc.get();
  bad.prompt.mode = lang::PromptMode::Scaffold;
  CHECK_THROWS_AS(train_loop(bad), Error);
}

TEST_CASE("ahc with rho 1 is reinvent") {
  const auto a = small_run(Algorithm::Ahc, 3, 80, 20, 1.0);
  const auto b = small_run(Algorithm::Reinvent, 3, 80, 20);
  CHECK(metrics::format_history_csv(a.history, "x", 3) == metrics::format_history_csv(b.history, "x", 3));
  REQUIRE(a.losses.size() == b.losses.size());
  for (std::size_t i = 0; i < a.losses.size(); ++i) CHECK(a.losses[i] == b.losses[i]);
  CHECK(same_params(a.agent.params, b.agent.params));
}

TEST_CASE("reinvent improves the similarity task") {
  constexpr int kBatch = 32;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    const auto r = small_run(Algorithm::Reinvent, seed, 20 * kBatch, kBatch);
    const metrics::RunHistory first(r.history.begin(), r.history.begin() + kBatch);
    const metrics::RunHistory last(r.history.end() - kBatch, r.history.end());
    CHECK(metrics::topk_average(last, 10) >= metrics::topk_average(first, 10));
  }
}
