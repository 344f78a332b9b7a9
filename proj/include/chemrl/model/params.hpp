// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "chemrl/common/rng.hpp"

namespace chemrl::model {

using Matrix = Eigen::MatrixXd;

struct ModelShape {
  int vocab_size = 0;  // includes PAD/GO/EOS
  int embedding = 64;
  int hidden = 128;
  int layers = 1;
  bool critic = false;

  // Output width: every id from EOS upwards is an action.
  int action_count() const { return vocab_size - 2; }
  bool operator==(const ModelShape&) const = default;
};

// GRU layer, gates z (update), r (reset), n (candidate):
//   z  = sigmoid(w_z x + u_z h + b_z)
//   r  = sigmoid(w_r x + u_r h + b_r)
//   n  = tanh(w_n x + b_n + r * (u_n h))
//   h' = (1 - z) * n + z * h
struct GruLayer {
  Matrix w_z, w_r, w_n;  // H x in
  Matrix u_z, u_r, u_n;  // H x H
  Matrix b_z, b_r, b_n;  // H x 1
};

// All tensors of embedding + GRU stack + output projection (+ critic head).
// Every tensor is a dense Matrix so that optimizers, checkpoints and
// gradient checks can walk them uniformly.
struct Tensors {
  ModelShape shape;
  Matrix embedding;  // V x E
  std::vector<GruLayer> layers;
  Matrix out_w;     // A x H
  Matrix out_b;     // A x 1
  Matrix critic_w;  // 1 x H (empty without critic)
  Matrix critic_b;  // 1 x 1 (empty without critic)

  // Visits tensors in manifest order as (name, matrix&).
  template <class F>
  void for_each(F&& f) {
    f("embedding", embedding);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "gru" + std::to_string(l) + ".";
      auto& g = layers[l];
      f(p + "w_z", g.w_z); f(p + "w_r", g.w_r); f(p + "w_n", g.w_n);
      f(p + "u_z", g.u_z); f(p + "u_r", g.u_r); f(p + "u_n", g.u_n);
      f(p + "b_z", g.b_z); f(p + "b_r", g.b_r); f(p + "b_n", g.b_n);
    }
    f("out_w", out_w);
    f("out_b", out_b);
    if (shape.critic) {
      f("critic_w", critic_w);
      f("critic_b", critic_b);
    }
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<Tensors*>(this)->for_each([&](const std::string& n, Matrix& m) { f(n, static_cast<const Matrix&>(m)); });
  }

  std::size_t parameter_count() const;
};

// Zero-initialized tensors of the given shape.
Tensors zeros(const ModelShape& shape);

struct PolicyParams : Tensors {
  PolicyParams() = default;
  explicit PolicyParams(Tensors t) : Tensors(std::move(t)) {}
};

struct Gradients : Tensors {
  Gradients() = default;
  explicit Gradients(Tensors t) : Tensors(std::move(t)) {}

  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  double squared_norm() const;
  bool all_finite() const;
};

Gradients zero_gradients(const ModelShape& shape);

// Uniform(-1/sqrt(H), 1/sqrt(H)) for recurrent and output weights,
// Uniform(-0.1, 0.1) for the embedding, zero biases and critic.
PolicyParams init_params(const ModelShape& shape, Rng& rng);

// Adds a zero critic head to a critic-less parameter set (agents for
// actor-critic methods start from a prior without one).
PolicyParams with_critic(PolicyParams params);

bool all_finite(const Tensors& t);

}  // namespace chemrl::model
