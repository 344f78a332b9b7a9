// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "chemrl/model/checkpoint.hpp"
#include "chemrl/model/gru_kernels.hpp"
#include "chemrl/pretrain/corpus.hpp"

namespace chemrl::pretrain {

// Inputs are GO + tokens, targets are tokens + EOS; the mean is taken over
// all target positions of the batch.
struct NllResult {
  double mean_nll = 0.0;
  std::size_t positions = 0;
  model::Gradients grads;  // d mean_nll / d params
};

double teacher_forced_nll(const model::PolicyParams& params, std::span<const std::vector<int>> sequences,
                          model::Exec exec = model::Exec::Parallel);
NllResult teacher_forced_loss(const model::PolicyParams& params, std::span<const std::vector<int>> sequences,
                              model::Exec exec = model::Exec::Parallel);

// Fraction of `samples` de-novo rollouts that parse as valid molecules.
double sampled_validity(const model::PolicyParams& params, const lang::Vocabulary& vocab, std::size_t samples,
                        int max_len, std::uint64_t seed);

struct PretrainConfig {
  std::filesystem::path corpus;
  std::filesystem::path out_dir;
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  int max_len = 100;
  int embedding = 64;
  int hidden = 128;
  int layers = 1;
  double clip = 5.0;
  double valid_fraction = 0.1;
  std::size_t validity_samples = 100;  // per logged epoch
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_nll = 0.0;
  double valid_nll = 0.0;
  double sampled_validity = 0.0;
};

struct PretrainResult {
  model::Checkpoint best;  // lowest validation NLL
  int best_epoch = 0;
  std::vector<EpochLog> log;
  std::size_t corpus_size = 0;
  std::size_t skipped = 0;
};

// Epoch 0 is the untrained model. Each later epoch is one pass of shuffled
// minibatch Adam over the training split. Runs on an already loaded corpus;
// nothing is written.
PretrainResult pretrain(const Corpus& corpus, const PretrainConfig& config);

// Loads the corpus, trains, and writes prior.ckpt and pretrain_log.csv into
// out_dir.
PretrainResult pretrain_run(const PretrainConfig& config);

std::string format_log_csv(const std::vector<EpochLog>& log);

}  // namespace chemrl::pretrain
