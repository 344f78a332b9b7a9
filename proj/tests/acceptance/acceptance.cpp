// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "../support/fd.hpp"
#include "../support/metric_oracles.hpp"
#include "chemrl/chem/descriptors.hpp"
#include "chemrl/chem/fingerprint.hpp"
#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/lang/rollout.hpp"
#include "chemrl/metrics/history_io.hpp"
#include "chemrl/model/checkpoint.hpp"
#include "chemrl/model/policy.hpp"
#include "chemrl/pretrain/corpus.hpp"
#include "chemrl/pretrain/pretrain.hpp"
#include "chemrl/rl/config.hpp"
#include "chemrl/rl/losses.hpp"
#include "chemrl/rl/train_loop.hpp"
#include "chemrl/scoring/filters.hpp"

using namespace chemrl;
using lang::Trajectory;

namespace {

// Tolerances.
constexpr double kFdStep = 1e-5;
constexpr double kFdRel = 1e-6;
constexpr double kFdFloor = 1e-4;
constexpr std::size_t kMdpSamples = 100000;
constexpr double kMdpRel = 0.02;
constexpr double kMdpFloorFrac = 1e-2;
constexpr double kPpoTol = 1e-9;
constexpr long kAblationBudget = 3000;
constexpr int kAblationSeeds = 5;
constexpr double kAblationMinutes = 10.0;
constexpr double kValidity = 0.8;
constexpr std::size_t kValiditySamples = 500;
constexpr long kAccountingBudget = 1000;
constexpr double kDiverse = 0.35;
constexpr double kSeconds60 = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

model::Forward fwd_of(const model::PolicyParams& p, std::span<const Trajectory> t) {
  return model::forward(p, model::teacher_forced_inputs(t));
}

std::vector<Trajectory> random_trajs(int vocab_size, std::size_t n, int max_len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < n; ++i) {
    Trajectory t;
    const int len = 1 + static_cast<int>(uniform_index(rng, max_len));
    for (int k = 0; k < len; ++k)
      t.tokens.push_back(k + 1 == len ? lang::kEosId : 3 + static_cast<int>(uniform_index(rng, vocab_size - 3)));
    t.actionable.assign(t.tokens.size(), 1);
    if (i % 3 == 0 && len > 2) t.actionable[0] = 0;
    t.set_reward(uniform01(rng));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> flat(const model::Tensors& t) {
  std::vector<double> out;
  t.for_each([&](const std::string&, const model::Matrix& m) { out.insert(out.end(), m.data(), m.data() + m.size()); });
  return out;
}

bool same_params(const model::PolicyParams& a, const model::PolicyParams& b) {
  return a.shape == b.shape && flat(a) == flat(b);
}

// 1 -----------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t coords = 0;
  const auto record = [&](const std::string& name, const testing::FdReport& r) {
    coords += r.checked;
    if (r.max_rel > worst) {
      worst = r.max_rel;
      worst_name = name + "/" + r.worst;
    }
  };

  const struct { int V, width; std::uint64_t seed; } nets[] = {{5, 8, 31}, {4, 5, 32}, {5, 3, 33}};
  for (const auto& n : nets) {
    const auto p = testing::random_net(n.V, n.width, 1, true, n.seed);
    const auto prior = testing::random_net(n.V, n.width, 1, false, n.seed + 100);
    auto b = random_trajs(n.V, 6, 6, n.seed + 7);
    model::evaluate_prior(prior, b);
    const auto f = fwd_of(p, b);
    const auto prior_f = fwd_of(prior, b);

    rl::StepValues vals(b.size()), adv(b.size());
    auto old = model::step_log_probs(f, std::span<const Trajectory>(b));
    Rng jitter(n.seed);
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t t = 0; t < b[i].length(); ++t) {
        vals[i].push_back(f.value(i, static_cast<int>(t)));
        adv[i].push_back(b[i].reward() - vals[i].back());
        old[i][t] += 0.3 * (uniform01(jitter) - 0.5);
      }
    std::vector<char> rep(b.size(), 0);
    rep[1] = 1;
    const auto keep = rl::ahc_filter(b, 0.5);
    std::vector<Trajectory> top;
    for (auto i : keep) top.push_back(b[i]);

    using LossFn = std::function<rl::LossResult(const model::PolicyParams&)>;
    const std::vector<std::pair<std::string, LossFn>> cases = {
        {"reinforce", [&](const model::PolicyParams& q) { return rl::reinforce_loss(fwd_of(q, b), b, 0.3); }},
        {"reinvent", [&](const model::PolicyParams& q) { return rl::reinvent_loss(fwd_of(q, b), b, 2.0); }},
        {"ahc", [&](const model::PolicyParams& q) { return rl::reinvent_loss(fwd_of(q, top), top, 2.0); }},
        {"a2c", [&](const model::PolicyParams& q) { return rl::a2c_loss(fwd_of(q, b), b, {0.5, 0.05}, &vals); }},
        {"ppo",
         [&](const model::PolicyParams& q) {
           return rl::ppo_loss(fwd_of(q, b), b, rl::PpoInputs{&old, &adv, &rep, 0.2}, {0.5, 0.05});
         }},
        {"kl", [&](const model::PolicyParams& q) { return rl::kl_to_prior(fwd_of(q, b), prior_f, b); }},
        {"penalty", [&](const model::PolicyParams& q) { return rl::likelihood_penalty(fwd_of(q, b), b, 3.0); }},
    };
    for (const auto& [name, fn] : cases) {
      const auto& batch = name == "ahc" ? top : b;
      const auto fx = fwd_of(p, batch);
      const auto g = model::backward(p, fx, fn(p).grads, model::Exec::Serial, true);
      record(name, testing::fd_check(p, g, [&](const model::PolicyParams& q) { return fn(q).loss; }, kFdStep,
                                     kFdFloor));
    }

    std::vector<std::vector<int>> seqs;
    for (const auto& t : b) seqs.emplace_back(t.tokens.begin(), t.tokens.end() - 1);
    const auto nll = pretrain::teacher_forced_loss(p, seqs, model::Exec::Serial);
    record("nll", testing::fd_check(p, nll.grads,
                                    [&](const model::PolicyParams& q) {
                                      return pretrain::teacher_forced_nll(q, seqs, model::Exec::Serial);
                                    },
                                    kFdStep, kFdFloor));
  }
  const double secs = seconds_since(t0);
  return {worst < kFdRel && secs < kSeconds60,
          fmt("max rel err %.2e over %zu coords (worst %s), %.1fs", worst, coords, worst_name.c_str(), secs)};
}

// 2 -----------------------------------------------------------------------
// Tokens EOS and C; episodes stop at EOS or after kMdpLen tokens.
constexpr int kMdpLen = 4;

double mdp_reward(const Trajectory& t) {
  static const double r[] = {0.1, 1.0, 0.3, 0.8, 0.0};
  return t.truncated ? r[kMdpLen] : r[t.length() - 1];
}

Outcome policy_gradient_estimator() {
  const auto t0 = std::chrono::steady_clock::now();
  const lang::Vocabulary vocab({"<PAD>", "<GO>", "<EOS>", "C"});
  const auto p = testing::random_net(4, 3, 1, false, 77, 0.6);

  std::vector<Trajectory> all;
  for (int n = 0; n <= kMdpLen; ++n) {
    Trajectory t;
    t.tokens.assign(n, 3);
    if (n < kMdpLen) t.tokens.push_back(lang::kEosId);
    t.truncated = n == kMdpLen;
    t.actionable.assign(t.tokens.size(), 1);
    t.set_reward(mdp_reward(t));
    all.push_back(std::move(t));
  }
  model::Gradients exact = model::zero_gradients(p.shape);
  double total_p = 0.0;
  for (const auto& t : all) {
    const std::span<const Trajectory> one(&t, 1);
    const auto f = fwd_of(p, one);
    const double prob = std::exp(rl::sequence_log_probs(f, one).front());
    total_p += prob;
    auto g = model::backward(p, f, rl::reinforce_loss(f, one).grads, model::Exec::Serial);
    g *= prob;
    exact += g;
  }

  Rng rng = make_stream(2024, "rollout");
  auto sample = lang::rollout(p, vocab, kMdpSamples, kMdpLen, rng);
  for (auto& t : sample) t.set_reward(mdp_reward(t));
  const auto f = fwd_of(p, sample);
  const auto est = model::backward(p, f, rl::reinforce_loss(f, sample).grads);

  const auto ex = flat(exact), es = flat(est);
  double scale = 0.0;
  for (double x : ex) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) worst = std::max(worst, testing::rel_err(ex[i], es[i], kMdpFloorFrac * scale));
  const double secs = seconds_since(t0);
  return {worst < kMdpRel && std::abs(total_p - 1.0) < 1e-12 && secs < kSeconds60,
          fmt("max rel err %.3f%% over %zu coords (enumerated mass %.15f), %.1fs", 100 * worst, ex.size(), total_p,
              secs)};
}

// Shared small prior ----------------------------------------------------------
struct PriorRun {
  pretrain::PretrainResult result;
  pretrain::Corpus corpus;
};

const PriorRun& prior_run() {
  static const PriorRun run = [] {
    PriorRun r;
    r.corpus = pretrain::load_corpus(data_dir() / "toy_corpus.smi", pretrain::CorpusOptions{.max_len = 60});
    pretrain::PretrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 32;
    cfg.lr = 3e-3;
    cfg.max_len = 60;
    cfg.embedding = 32;
    cfg.hidden = 64;
    cfg.validity_samples = 20;
    cfg.seed = 5;
    r.result = pretrain::pretrain(r.corpus, cfg);
    return r;
  }();
  return run;
}

scoring::ScoringTask similarity_task() {
  return {.name = "sim", .kind = scoring::OracleKind::SimilarityToTarget, .target = "CC(C)OCc1ccccc1"};
}

class CountingScorer : public scoring::ScoringFunction {
 public:
  explicit CountingScorer(std::unique_ptr<scoring::ScoringFunction> inner) : inner_(std::move(inner)) {}
  std::vector<double> score_batch(const std::vector<std::string>& smiles) override {
    calls += static_cast<long>(smiles.size());
    return inner_->score_batch(smiles);
  }
  long calls = 0;

 private:
  std::unique_ptr<scoring::ScoringFunction> inner_;
};

rl::RunResult run_preset(const std::string& name, bool replay, long budget, std::uint64_t seed,
                         scoring::ScoringFunction& scorer) {
  rl::RunSpec spec;
  spec.prior = &prior_run().result.best;
  spec.scorer = &scorer;
  spec.algo = rl::preset(name);
  spec.algo.replay = replay;
  spec.algo.budget = budget;
  spec.algo.max_len = 60;
  spec.seed = seed;
  return rl::train_loop(spec);
}

// 3 -----------------------------------------------------------------------
Outcome algorithm_identities() {
  // AHC(rho = 1) against REINVENT through the whole training loop.
  auto sa = scoring::make_scoring_function(similarity_task());
  auto sb = scoring::make_scoring_function(similarity_task());
  rl::RunSpec spec;
  spec.prior = &prior_run().result.best;
  spec.algo = rl::preset("ahc");
  spec.algo.rho = 1.0;
  spec.algo.budget = 320;
  spec.algo.max_len = 60;
  spec.seed = 3;
  spec.scorer = sa.get();
  const auto ahc = rl::train_loop(spec);
  spec.algo.algorithm = rl::Algorithm::Reinvent;
  spec.scorer = sb.get();
  const auto rei = rl::train_loop(spec);
  const bool ahc_ok = metrics::format_history_csv(ahc.history, "x", 3) == metrics::format_history_csv(rei.history, "x", 3) &&
                      ahc.losses == rei.losses && same_params(ahc.agent.params, rei.agent.params);

  // PPO with a huge clip range against the unclipped surrogate.
  const int V = 5;
  const auto p = testing::random_net(V, 6, 1, true, 41);
  const auto b = random_trajs(V, 8, 6, 42);
  const auto f = fwd_of(p, b);
  const auto lp = model::step_log_probs(f, std::span<const Trajectory>(b));
  rl::StepValues old = lp, adv(b.size()), vals(b.size());
  Rng jitter(43);
  double surrogate = 0.0, value_term = 0.0, entropy = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t t = 0; t < b[i].length(); ++t) {
      const int ti = static_cast<int>(t);
      vals[i].push_back(f.value(i, ti));
      adv[i].push_back(b[i].reward() - f.value(i, ti));
      old[i][t] += 0.8 * (uniform01(jitter) - 0.5);
      if (!b[i].actionable[t]) continue;
      ++steps;
      surrogate += std::exp(lp[i][t] - old[i][t]) * adv[i][t];
      value_term += adv[i][t] * adv[i][t];
      const Eigen::VectorXd z = f.logits(i, ti);
      const Eigen::VectorXd pr = (z.array() - z.maxCoeff()).exp();
      const Eigen::VectorXd q = pr / pr.sum();
      entropy -= (q.array() * q.array().log()).sum();
    }
  const rl::ActorCriticTerms terms{0.5, 0.05};
  const double S = static_cast<double>(steps);
  const double unclipped = -surrogate / S + terms.value_coef * value_term / S - terms.entropy_coef * entropy / S;
  const double ppo_val = rl::ppo_loss(f, b, rl::PpoInputs{&old, &adv, nullptr, 1e300}, terms).loss;
  const double value_gap = std::abs(ppo_val - unclipped);

  // At ratio 1 (first epoch) the unclipped surrogate's gradient is the
  // actor-critic gradient.
  const auto g_ppo = model::backward(p, f, rl::ppo_loss(f, b, rl::PpoInputs{&lp, &adv, nullptr, 1e300}, terms).grads,
                                     model::Exec::Serial, true);
  const auto g_a2c = model::backward(p, f, rl::a2c_loss(f, b, terms, &vals).grads, model::Exec::Serial, true);
  const auto ga = flat(g_ppo), gb = flat(g_a2c);
  double grad_gap = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) grad_gap = std::max(grad_gap, std::abs(ga[i] - gb[i]));

  // KL of a policy to itself.
  const auto kl = rl::kl_to_prior(f, f, b);
  bool kl_zero = kl.loss == 0.0;
  for (const auto& m : kl.grads.d_logits) kl_zero = kl_zero && (m.array() == 0.0).all();

  return {ahc_ok && value_gap < kPpoTol && grad_gap < kPpoTol && kl_zero,
          fmt("ahc(rho=1)==reinvent bitwise: %s; ppo vs unclipped |dloss| %.1e, |dgrad| %.1e; KL(pi||pi) = %g",
              ahc_ok ? "yes" : "no", value_gap, grad_gap, kl.loss)};
}

// 4 -----------------------------------------------------------------------
Outcome ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  prior_run();
  std::vector<double> plain, replay;
  for (int s = 0; s < kAblationSeeds; ++s) {
    for (bool rep : {false, true}) {
      auto sc = scoring::make_scoring_function(similarity_task());
      const auto r = run_preset("reinforce", rep, kAblationBudget, static_cast<std::uint64_t>(s), *sc);
      (rep ? replay : plain).push_back(metrics::topk_auc(r.history, 10, 100, kAblationBudget));
    }
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double mp = median(plain), mr = median(replay);
  const double secs = seconds_since(t0);
  return {mr >= mp && secs < kAblationMinutes * 60,
          fmt("median top-10 AUC reinforce %.4f, reinforce+replay %.4f, %.1fs", mp, mr, secs)};
}

// 5 -----------------------------------------------------------------------
Outcome metric_oracles() {
  const auto pool = pretrain::toy_corpus(60, 5);
  Rng rng(99);
  std::size_t checkpoints = 0, mismatches = 0, pairs = 0, close_pairs = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const long n = 1 + static_cast<long>(uniform_index(rng, 500));
    const int every = 1 + static_cast<int>(uniform_index(rng, 60));
    const int k = 1 + static_cast<int>(uniform_index(rng, 12));
    const auto h = testing::random_history(rng, n, pool);
    const auto s = metrics::topk_curve(h, k, every);
    const auto b = testing::brute_curve(h, k, every);
    if (s.size() != b.size()) ++mismatches;
    for (std::size_t i = 0; i < std::min(s.size(), b.size()); ++i) {
      ++checkpoints;
      if (s[i].oracle_call != b[i].oracle_call || s[i].value != b[i].value) ++mismatches;
    }
    if (metrics::topk_auc(h, k, every) != testing::brute_auc(h, k, every)) ++mismatches;

    const auto d = metrics::diverse_topk(h, k, kDiverse);
    std::vector<chem::Fingerprint> fps;
    for (const auto& r : d) fps.push_back(chem::fingerprint(*chem::try_parse(r.smiles)));
    for (std::size_t i = 0; i < fps.size(); ++i)
      for (std::size_t j = i + 1; j < fps.size(); ++j) {
        ++pairs;
        if (chem::tanimoto(fps[i], fps[j]) >= kDiverse) ++close_pairs;
      }
  }
  return {mismatches == 0 && close_pairs == 0,
          fmt("%zu checkpoints, %zu mismatches; %zu diverse pairs, %zu at similarity >= %.2f", checkpoints, mismatches,
              pairs, close_pairs, kDiverse)};
}

// 6 -----------------------------------------------------------------------
Outcome pretraining() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& r = prior_run();
  const auto& best = r.result.best;
  const double validity = pretrain::sampled_validity(best.params, best.vocab, kValiditySamples, 60, 11);
  double valid_nll = 0.0;
  for (const auto& e : r.result.log)
    if (e.epoch == r.result.best_epoch) valid_nll = e.valid_nll;
  const double uniform = std::log(static_cast<double>(best.vocab.size()));
  return {r.corpus.size() == 1000 && validity >= kValidity && valid_nll < uniform,
          fmt("corpus %zu, validity %.3f over %zu samples, valid NLL %.3f < log V = %.3f, %.1fs", r.corpus.size(),
              validity, kValiditySamples, valid_nll, uniform, seconds_since(t0))};
}

// 7 -----------------------------------------------------------------------
Outcome determinism() {
  bool same = true, exact = true;
  std::string info;
  for (const auto& [name, rep] : std::vector<std::pair<std::string, bool>>{{"reinforce", true}, {"ppod", false}}) {
    std::string csv[2], ckpt[2];
    for (int k = 0; k < 2; ++k) {
      CountingScorer sc(scoring::make_scoring_function(similarity_task()));
      const auto r = run_preset(name, rep, kAccountingBudget, 12, sc);
      csv[k] = metrics::format_history_csv(r.history, name, 12);
      ckpt[k] = model::encode_checkpoint(r.agent);
      exact = exact && sc.calls == kAccountingBudget && static_cast<long>(r.history.size()) == kAccountingBudget &&
              r.history.back().oracle_call == kAccountingBudget;
      if (k == 0) info += fmt("%s%s: %ld calls; ", name.c_str(), rep ? "+replay" : "", sc.calls);
    }
    same = same && csv[0] == csv[1] && ckpt[0] == ckpt[1];
  }
  return {same && exact, info + (same ? "histories and checkpoints byte-identical" : "outputs differ")};
}

// 8 -----------------------------------------------------------------------
struct GoldenRow {
  const char* smiles;
  double mw;
  double logp;
  int rotatable;
  std::vector<std::string> reasons;
};

const std::vector<GoldenRow> kGolden = {
#include "../unit/filter_golden.inc"
};

Outcome chemistry_filters() {
  std::size_t agree = 0;
  for (const auto& row : kGolden) {
    const auto r = scoring::chemistry_filter_basic(row.smiles);
    if (r.pass == row.reasons.empty() && r.reasons == row.reasons) ++agree;
  }
  std::ifstream in(data_dir() / "toy_corpus.smi");
  std::vector<std::string> corpus;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') corpus.push_back(line);
  const auto stats = scoring::reference_stats(corpus);
  std::size_t pass = 0;
  for (const auto& s : corpus) pass += scoring::chemistry_filter_target(s, stats).pass;
  return {kGolden.size() == 20 && agree == kGolden.size() && !corpus.empty() && pass == corpus.size(),
          fmt("golden table %zu/%zu; reference corpus T-CF self-pass %zu/%zu", agree, kGolden.size(), pass,
              corpus.size())};
}

// 9 -----------------------------------------------------------------------
Outcome checkpoint_round_trip() {
  const auto& ckpt = prior_run().result.best;
  const auto path = std::filesystem::temp_directory_path() / "chemrl_acceptance.ckpt";
  model::save_checkpoint(ckpt, path);
  const auto loaded = model::load_checkpoint(path);
  std::filesystem::remove(path);
  const bool bytes = model::encode_checkpoint(loaded) == model::encode_checkpoint(ckpt) && same_params(loaded.params, ckpt.params);

  Rng ra = make_stream(5, "rollout"), rb = make_stream(5, "rollout");
  const auto a = lang::rollout(ckpt.params, ckpt.vocab, 200, 60, ra);
  const auto b = lang::rollout(loaded.params, loaded.vocab, 200, 60, rb);
  bool sampling = a.size() == b.size();
  for (std::size_t i = 0; sampling && i < a.size(); ++i)
    sampling = a[i].tokens == b[i].tokens && a[i].agent_log_probs == b[i].agent_log_probs && a[i].smiles == b[i].smiles;
  return {bytes && sampling, fmt("bytes identical: %s; 200 seeded samples identical: %s", bytes ? "yes" : "no",
                                 sampling ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient-correctness", gradient_correctness},
      {"policy-gradient-estimator", policy_gradient_estimator},
      {"algorithm-identities", algorithm_identities},
      {"replay-ablation", ablation},
      {"metric-oracles", metric_oracles},
      {"pretraining", pretraining},
      {"determinism-accounting", determinism},
      {"chemistry-filters", chemistry_filters},
      {"checkpoint-round-trip", checkpoint_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
