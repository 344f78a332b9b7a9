// SPDX-License-Identifier: Apache-2.0
#include "chemrl/pretrain/pretrain.hpp"

#include <numeric>

#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/lang/rollout.hpp"
#include "chemrl/model/optim.hpp"
#include "chemrl/model/policy.hpp"
#include "chemrl/model/softmax.hpp"

namespace chemrl::pretrain {
namespace {

std::vector<std::vector<int>> with_eos(std::span<const std::vector<int>> seqs) {
  std::vector<std::vector<int>> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    out.push_back(s);
    out.back().push_back(lang::kEosId);
  }
  return out;
}

std::vector<std::vector<int>> pick(const Corpus& c, const std::vector<std::size_t>& idx) {
  std::vector<std::vector<int>> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(c.sequences[i]);
  return out;
}

}  // namespace

double teacher_forced_nll(const model::PolicyParams& params, std::span<const std::vector<int>> sequences,
                          model::Exec exec) {
  const auto targets = with_eos(sequences);
  const auto fwd = model::forward(params, model::teacher_forced_inputs(targets), exec);
  const auto lp = model::step_log_probs(fwd, targets);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : lp) {
    for (double v : row) sum -= v;
    n += row.size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

NllResult teacher_forced_loss(const model::PolicyParams& params, std::span<const std::vector<int>> sequences,
                              model::Exec exec) {
  const auto targets = with_eos(sequences);
  const auto fwd = model::forward(params, model::teacher_forced_inputs(targets), exec);
  NllResult r;
  for (const auto& t : targets) r.positions += t.size();
  const double inv = r.positions ? 1.0 / static_cast<double>(r.positions) : 0.0;
  model::LogitGrads g(fwd);
  double sum = 0.0;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    for (std::size_t t = 0; t < targets[b].size(); ++t) {
      const Eigen::VectorXd lp = model::log_softmax(fwd.logits(b, static_cast<int>(t)));
      const int a = model::action_index(targets[b][t]);
      sum -= lp(a);
      auto col = g.d_logits[b].col(static_cast<Eigen::Index>(t));
      col = lp.array().exp() * inv;
      col(a) -= inv;
    }
  }
  r.mean_nll = sum * inv;
  r.grads = model::backward(params, fwd, g, exec);
  return r;
}

double sampled_validity(const model::PolicyParams& params, const lang::Vocabulary& vocab, std::size_t samples,
                        int max_len, std::uint64_t seed) {
  if (samples == 0) return 0.0;
  Rng rng(seed);
  std::size_t ok = 0;
  for (const auto& t : lang::rollout(params, vocab, samples, max_len, rng)) {
    if (!t.smiles.empty() && chem::is_valid(t.smiles)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(samples);
}

PretrainResult pretrain(const Corpus& corpus, const PretrainConfig& cfg) {
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw ConfigError("pretrain", "epochs >= 0 and batch_size >= 1 required");
  model::ModelShape shape{.vocab_size = static_cast<int>(corpus.vocab.size()),
                          .embedding = cfg.embedding,
                          .hidden = cfg.hidden,
                          .layers = cfg.layers};
  Rng init = make_stream(cfg.seed, "pretrain-init");
  model::PolicyParams params = model::init_params(shape, init);
  model::OptimizerState opt(shape, model::AdamConfig{.lr = cfg.lr});
  Rng shuffle = make_stream(cfg.seed, "pretrain-shuffle");

  const auto train = pick(corpus, corpus.train);
  const auto valid = pick(corpus, corpus.valid.empty() ? corpus.train : corpus.valid);

  PretrainResult res;
  res.corpus_size = corpus.size();
  res.skipped = corpus.skipped();
  auto evaluate = [&](int epoch, double train_nll) {
    EpochLog e;
    e.epoch = epoch;
    e.train_nll = train_nll;
    e.valid_nll = teacher_forced_nll(params, valid);
    e.sampled_validity = sampled_validity(params, corpus.vocab, cfg.validity_samples, cfg.max_len,
                                          split_seed(cfg.seed, "pretrain-sample") + static_cast<std::uint64_t>(epoch));
    res.log.push_back(e);
    if (epoch == 0 || e.valid_nll < res.log[static_cast<std::size_t>(res.best_epoch)].valid_nll) {
      res.best_epoch = epoch;
      res.best.params = params;
    }
  };
  evaluate(0, teacher_forced_nll(params, train));

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    portable_shuffle(order.begin(), order.end(), shuffle);
    double weighted = 0.0;
    std::size_t positions = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::vector<int>> batch;
      for (auto i = start; i < end; ++i) batch.push_back(train[order[i]]);
      auto r = teacher_forced_loss(params, batch);
      if (!std::isfinite(r.mean_nll)) throw Error("NonFiniteLoss", "pretraining loss is not finite");
      model::clip_global_norm(r.grads, cfg.clip);
      model::adam_step(params, r.grads, opt);
      weighted += r.mean_nll * static_cast<double>(r.positions);
      positions += r.positions;
    }
    evaluate(epoch, positions ? weighted / static_cast<double>(positions) : 0.0);
  }
  res.best.vocab = corpus.vocab;
  res.best.meta = {{"role", "prior"},
                   {"best_epoch", std::to_string(res.best_epoch)},
                   {"seed", std::to_string(cfg.seed)},
                   {"max_len", std::to_string(cfg.max_len)}};
  return res;
}

std::string format_log_csv(const std::vector<EpochLog>& log) {
  std::string s = "epoch,train_nll,valid_nll,sampled_validity\n";
  for (const auto& e : log) {
    s += std::to_string(e.epoch) + "," + format_double(e.train_nll) + "," + format_double(e.valid_nll) + "," +
         format_double(e.sampled_validity) + "\n";
  }
  return s;
}

PretrainResult pretrain_run(const PretrainConfig& cfg) {
  const auto corpus = load_corpus(cfg.corpus, CorpusOptions{.max_len = cfg.max_len,
                                                           .valid_fraction = cfg.valid_fraction,
                                                           .seed = cfg.seed});
  auto res = pretrain(corpus, cfg);
  std::filesystem::create_directories(cfg.out_dir);
  model::save_checkpoint(res.best, cfg.out_dir / "prior.ckpt");
  write_file_atomic(cfg.out_dir / "pretrain_log.csv", format_log_csv(res.log));
  return res;
}

}  // namespace chemrl::pretrain
