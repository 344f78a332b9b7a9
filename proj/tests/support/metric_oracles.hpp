// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "chemrl/metrics/metrics.hpp"

namespace chemrl::testing {

// Top-k average of the records with oracle_call <= limit, from scratch.
inline double brute_topk(const metrics::RunHistory& h, int k, long limit) {
  std::map<std::string, double> best;
  for (const auto& r : h) {
    if (r.oracle_call > limit) continue;
    auto it = best.find(r.key);
    if (it == best.end()) best[r.key] = r.reward;
    else it->second = std::max(it->second, r.reward);
  }
  if (best.empty()) return 0.0;
  std::vector<double> v;
  for (const auto& [key, x] : best) v.push_back(x);
  std::sort(v.begin(), v.end(), std::greater<>());
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s / static_cast<double>(n);
}

// Curve recomputed from scratch at every checkpoint.
inline std::vector<metrics::CurvePoint> brute_curve(const metrics::RunHistory& h, int k, int every) {
  long last = 0;
  for (const auto& r : h) last = std::max(last, r.oracle_call);
  std::vector<metrics::CurvePoint> out;
  for (long c = every; c < last; c += every) out.push_back({c, brute_topk(h, k, c)});
  out.push_back({last, brute_topk(h, k, last)});
  return out;
}

inline double brute_auc(const metrics::RunHistory& h, int k, int every) {
  const auto curve = brute_curve(h, k, every);
  double acc = 0.0;
  long prev = 0;
  for (const auto& p : curve) {
    acc += p.value * static_cast<double>(p.oracle_call - prev);
    prev = p.oracle_call;
  }
  return acc / static_cast<double>(curve.back().oracle_call);
}

// Random history over a small pool so that duplicates occur.
inline metrics::RunHistory random_history(Rng& rng, long n, const std::vector<std::string>& pool) {
  metrics::RunHistory h;
  for (long i = 1; i <= n; ++i) {
    const auto& s = pool[uniform_index(rng, pool.size())];
    // Coarse rewards so that ties are common.
    const double reward = static_cast<double>(uniform_index(rng, 21)) / 20.0;
    h.push_back(metrics::make_record(i, s, reward));
  }
  return h;
}

}  // namespace chemrl::testing
