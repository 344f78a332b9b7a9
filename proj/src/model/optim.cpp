// SPDX-License-Identifier: Apache-2.0
#include "chemrl/model/optim.hpp"

#include <cmath>

#include "chemrl/common/error.hpp"

namespace chemrl::model {

OptimizerState::OptimizerState(const ModelShape& shape, AdamConfig cfg)
    : config(cfg), m(zeros(shape)), v(zeros(shape)) {}

void adam_step(PolicyParams& params, const Gradients& grads, OptimizerState& state) {
  if (!(params.shape == grads.shape) || !(params.shape == state.m.shape))
    throw Error("ShapeMismatch", "adam_step on incongruent tensors");
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  std::vector<const Matrix*> g;
  std::vector<Matrix*> m, v;
  grads.for_each([&](const std::string&, const Matrix& x) { g.push_back(&x); });
  state.m.for_each([&](const std::string&, Matrix& x) { m.push_back(&x); });
  state.v.for_each([&](const std::string&, Matrix& x) { v.push_back(&x); });
  std::size_t i = 0;
  params.for_each([&](const std::string&, Matrix& p) {
    auto& mi = *m[i];
    auto& vi = *v[i];
    const auto& gi = *g[i];
    mi = c.beta1 * mi + (1.0 - c.beta1) * gi;
    vi = c.beta2 * vi + (1.0 - c.beta2) * gi.cwiseProduct(gi);
    p.array() -= c.lr * (mi.array() / bc1) / ((vi.array() / bc2).sqrt() + c.eps);
    ++i;
  });
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (!std::isfinite(norm)) throw Error("NonFiniteLoss", "gradient norm is not finite");
  if (max_norm > 0.0 && norm > max_norm) grads *= max_norm / norm;
  return norm;
}

}  // namespace chemrl::model
