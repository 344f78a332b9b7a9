// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chemrl/model/params.hpp"

namespace chemrl::model {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  Tensors m;  // first moment
  Tensors v;  // second moment
  long step = 0;

  OptimizerState() = default;
  OptimizerState(const ModelShape& shape, AdamConfig cfg);
};

// Adam with bias correction:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(PolicyParams& params, const Gradients& grads, OptimizerState& state);

// Scales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace chemrl::model
