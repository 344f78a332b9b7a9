// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "chemrl/model/params.hpp"

namespace chemrl::model {

// Batches are processed in fixed-size column chunks. Chunks run in parallel
// under OpenMP; per-chunk gradients are reduced in chunk order, so results
// do not depend on the thread count.
inline constexpr int kChunk = 16;

enum class Exec { Parallel, Serial };

// Step t of sequence b consumes inputs[b][t] (GO first) and predicts the
// action at position t.
struct SequenceBatch {
  std::vector<std::vector<int>> inputs;
};

class Forward {
 public:
  std::size_t batch_size() const { return lengths_.size(); }
  int length(std::size_t b) const { return lengths_[b]; }
  bool has_values() const { return has_values_; }
  int action_count() const { return actions_; }

  // Logits over actions (action index = id - 2) at step t of sequence b.
  Matrix::ConstColXpr logits(std::size_t b, int t) const;
  double value(std::size_t b, int t) const;  // throws CriticAbsent

  struct Chunk {
    std::size_t begin = 0;
    int count = 0;
    int steps = 0;
    std::vector<std::vector<int>> ids;            // [t][col]
    std::vector<std::vector<Matrix>> x, z, r, n, g, h;  // [layer][t]
    std::vector<Matrix> logits;                   // [t], A x count
    std::vector<Matrix> values;                   // [t], 1 x count
  };
  const std::vector<Chunk>& chunks() const { return chunks_; }

 private:
  friend Forward forward(const PolicyParams&, const SequenceBatch&, Exec);
  std::vector<Chunk> chunks_;
  std::vector<int> lengths_;
  bool has_values_ = false;
  int actions_ = 0;
};

// Gradients of a scalar loss with respect to every logit and value.
struct LogitGrads {
  std::vector<Matrix> d_logits;  // per sequence, A x T
  std::vector<Matrix> d_values;  // per sequence, 1 x T

  LogitGrads() = default;
  explicit LogitGrads(const Forward& fwd);
  LogitGrads& operator+=(const LogitGrads& o);
  LogitGrads& operator*=(double s);
};

Forward forward(const PolicyParams& params, const SequenceBatch& batch, Exec exec = Exec::Parallel);

// Backpropagation through time. Value gradients update only the critic head
// (the trunk sees them as constants) unless `value_into_trunk` is set.
Gradients backward(const PolicyParams& params, const Forward& fwd, const LogitGrads& grads,
                   Exec exec = Exec::Parallel, bool value_into_trunk = false);

// Incremental stepping for sampling; uses the same chunked kernel as
// forward(), so rollout log-probabilities match re-evaluation.
class StepState {
 public:
  StepState(const PolicyParams& params, std::size_t batch);
  std::size_t batch_size() const { return batch_; }

 private:
  friend Matrix step(const PolicyParams&, std::span<const int>, StepState&, Exec);
  std::size_t batch_;
  std::vector<std::vector<Matrix>> h_;  // [chunk][layer]
};

// Consumes one input id per sequence; returns A x B logits.
Matrix step(const PolicyParams& params, std::span<const int> ids, StepState& state, Exec exec = Exec::Parallel);

}  // namespace chemrl::model
