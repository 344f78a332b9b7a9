// SPDX-License-Identifier: Apache-2.0
#include "chemrl/model/params.hpp"

#include <cmath>

namespace chemrl::model {

std::size_t Tensors::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

Tensors zeros(const ModelShape& s) {
  Tensors t;
  t.shape = s;
  const int a = s.action_count();
  t.embedding = Matrix::Zero(s.vocab_size, s.embedding);
  for (int l = 0; l < s.layers; ++l) {
    const int in = l == 0 ? s.embedding : s.hidden;
    GruLayer g;
    g.w_z = g.w_r = g.w_n = Matrix::Zero(s.hidden, in);
    g.u_z = g.u_r = g.u_n = Matrix::Zero(s.hidden, s.hidden);
    g.b_z = g.b_r = g.b_n = Matrix::Zero(s.hidden, 1);
    t.layers.push_back(std::move(g));
  }
  t.out_w = Matrix::Zero(a, s.hidden);
  t.out_b = Matrix::Zero(a, 1);
  if (s.critic) {
    t.critic_w = Matrix::Zero(1, s.hidden);
    t.critic_b = Matrix::Zero(1, 1);
  }
  return t;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  std::vector<const Matrix*> src;
  other.for_each([&](const std::string&, const Matrix& m) { src.push_back(&m); });
  std::size_t i = 0;
  for_each([&](const std::string&, Matrix& m) { m += *src[i++]; });
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for_each([&](const std::string&, Matrix& m) { m *= s; });
  return *this;
}

double Gradients::squared_norm() const {
  double n = 0.0;
  for_each([&](const std::string&, const Matrix& m) { n += m.squaredNorm(); });
  return n;
}

bool Gradients::all_finite() const { return model::all_finite(*this); }

bool all_finite(const Tensors& t) {
  bool ok = true;
  t.for_each([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

Gradients zero_gradients(const ModelShape& shape) { return Gradients(zeros(shape)); }

PolicyParams init_params(const ModelShape& shape, Rng& rng) {
  PolicyParams p(zeros(shape));
  const double k = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  auto fill = [&](Matrix& m, double scale) {
    // Row-major fill order keeps initialization independent of Eigen layout.
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = (2.0 * uniform01(rng) - 1.0) * scale;
  };
  fill(p.embedding, 0.1);
  for (auto& g : p.layers) {
    for (Matrix* m : {&g.w_z, &g.w_r, &g.w_n, &g.u_z, &g.u_r, &g.u_n}) fill(*m, k);
  }
  fill(p.out_w, k);
  return p;
}

PolicyParams with_critic(PolicyParams params) {
  if (params.shape.critic) return params;
  params.shape.critic = true;
  params.critic_w = Matrix::Zero(1, params.shape.hidden);
  params.critic_b = Matrix::Zero(1, 1);
  return params;
}

}  // namespace chemrl::model
