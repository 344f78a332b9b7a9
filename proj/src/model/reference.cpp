// SPDX-License-Identifier: Apache-2.0
#include "chemrl/model/reference.hpp"

#include <cmath>

namespace chemrl::model::reference {
namespace {

double sig(double a) { return 1.0 / (1.0 + std::exp(-a)); }

double row_dot(const Matrix& m, Eigen::Index row, const std::vector<double>& v) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < m.cols(); ++k) s += m(row, k) * v[static_cast<std::size_t>(k)];
  return s;
}

}  // namespace

SequenceOutput forward_sequence(const PolicyParams& p, const std::vector<int>& inputs) {
  const auto& s = p.shape;
  SequenceOutput out;
  std::vector<std::vector<double>> h(s.layers, std::vector<double>(s.hidden, 0.0));
  for (int id : inputs) {
    std::vector<double> x(s.embedding);
    for (int e = 0; e < s.embedding; ++e) x[e] = p.embedding(id, e);
    for (int l = 0; l < s.layers; ++l) {
      const auto& g = p.layers[l];
      std::vector<double> next(s.hidden);
      for (int i = 0; i < s.hidden; ++i) {
        const double z = sig(row_dot(g.w_z, i, x) + row_dot(g.u_z, i, h[l]) + g.b_z(i, 0));
        const double r = sig(row_dot(g.w_r, i, x) + row_dot(g.u_r, i, h[l]) + g.b_r(i, 0));
        const double n = std::tanh(row_dot(g.w_n, i, x) + g.b_n(i, 0) + r * row_dot(g.u_n, i, h[l]));
        next[i] = (1.0 - z) * n + z * h[l][i];
      }
      h[l] = next;
      x = std::move(next);
    }
    std::vector<double> logits(s.action_count());
    for (int a = 0; a < s.action_count(); ++a) logits[a] = row_dot(p.out_w, a, x) + p.out_b(a, 0);
    out.logits.push_back(std::move(logits));
    if (s.critic) out.values.push_back(row_dot(p.critic_w, 0, x) + p.critic_b(0, 0));
  }
  return out;
}

std::vector<SequenceOutput> forward_batch(const PolicyParams& params,
                                          const std::vector<std::vector<int>>& inputs) {
  std::vector<SequenceOutput> out;
  out.reserve(inputs.size());
  for (const auto& seq : inputs) out.push_back(forward_sequence(params, seq));
  return out;
}

}  // namespace chemrl::model::reference
