// SPDX-License-Identifier: Apache-2.0
#include "chemrl/rl/replay.hpp"

#include <algorithm>
#include <numeric>

#include "chemrl/common/error.hpp"
#include "chemrl/metrics/metrics.hpp"

namespace chemrl::rl {
namespace {

bool before(const ReplayEntry& a, const ReplayEntry& b) {
  if (a.reward != b.reward) return a.reward > b.reward;
  return a.inserted < b.inserted;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("algo.replay_capacity", "must be >= 1");
}

double ReplayBuffer::min_reward() const { return entries_.empty() ? 0.0 : entries_.back().reward; }

void ReplayBuffer::insert(const lang::Trajectory& t) {
  ReplayEntry e;
  e.key = metrics::dedup_key(t.smiles);
  e.smiles = t.smiles;
  e.tokens = t.tokens;
  e.actionable = t.actionable;
  e.truncated = t.truncated;
  e.reward = t.reward();
  e.inserted = counter_++;
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ReplayEntry& x) { return x.key == e.key; });
  if (it != entries_.end()) {
    if (e.reward <= it->reward) return;
    e.inserted = it->inserted;
    entries_.erase(it);
  }
  entries_.insert(std::upper_bound(entries_.begin(), entries_.end(), e, before), std::move(e));
  if (entries_.size() > capacity_) entries_.pop_back();
}

std::vector<lang::Trajectory> ReplayBuffer::sample(std::size_t m, Rng& rng) const {
  std::vector<std::size_t> idx(entries_.size());
  std::iota(idx.begin(), idx.end(), 0);
  portable_shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(m, idx.size()));
  std::vector<lang::Trajectory> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto& e = entries_[i];
    lang::Trajectory t;
    t.tokens = e.tokens;
    t.actionable = e.actionable;
    t.truncated = e.truncated;
    t.smiles = e.smiles;
    t.set_reward(e.reward);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace chemrl::rl
