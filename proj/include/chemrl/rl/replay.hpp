// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "chemrl/common/rng.hpp"
#include "chemrl/lang/trajectory.hpp"

namespace chemrl::rl {

struct ReplayEntry {
  std::string key;  // canonical key, or the raw string when unparseable
  std::string smiles;
  std::vector<int> tokens;
  std::vector<char> actionable;
  bool truncated = false;
  double reward = 0.0;
  long inserted = 0;  // insertion counter, for tie breaking
};

// At most `capacity` entries with unique keys, kept sorted by reward
// (descending, earlier insertion first on ties). Re-inserting a key keeps
// the best reward and the episode that achieved it. On overflow the
// lowest-reward entry is dropped (the most recent one among equals).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100);

  void insert(const lang::Trajectory& trajectory);
  // min(m, size) distinct entries, uniformly at random, as trajectories with
  // the stored reward set and no log-probabilities (re-evaluate before use).
  std::vector<lang::Trajectory> sample(std::size_t m, Rng& rng) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<ReplayEntry>& entries() const { return entries_; }
  double min_reward() const;  // 0 when empty

 private:
  std::size_t capacity_;
  std::vector<ReplayEntry> entries_;
  long counter_ = 0;
};

}  // namespace chemrl::rl
