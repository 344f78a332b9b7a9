// SPDX-License-Identifier: Apache-2.0
#include "chemrl/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chemrl/chem/fingerprint.hpp"
#include "chemrl/common/error.hpp"

namespace chemrl::metrics {
namespace {

[[noreturn]] void empty_history() { throw Error("EmptyHistory", "history has no records"); }

long last_call(const RunHistory& h) {
  long m = 0;
  for (const auto& r : h) m = std::max(m, r.oracle_call);
  return m;
}

// Checkpoints report_every, 2*report_every, ..., last.
std::vector<long> checkpoints(long last, int every) {
  if (every < 1) throw ConfigError("report_every", "must be >= 1");
  std::vector<long> c;
  for (long x = every; x < last; x += every) c.push_back(x);
  c.push_back(last);
  return c;
}

std::vector<std::size_t> reward_order(const RunHistory& h) {
  std::vector<std::size_t> idx(h.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (h[a].reward != h[b].reward) return h[a].reward > h[b].reward;
    return h[a].oracle_call < h[b].oracle_call;
  });
  return idx;
}

// Fingerprints per record; nullopt for invalid ones.
std::vector<std::optional<chem::Fingerprint>> fingerprints(const RunHistory& h) {
  std::vector<std::optional<chem::Fingerprint>> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!h[i].valid) continue;
    if (const auto mol = chem::try_parse(h[i].smiles)) out[i] = chem::fingerprint(*mol);
  }
  return out;
}

// Greedy diverse selection over records with oracle_call <= limit.
std::vector<std::size_t> diverse_select(const RunHistory& h, const std::vector<std::size_t>& order,
                                        const std::vector<std::optional<chem::Fingerprint>>& fps, int k,
                                        double threshold, long limit) {
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (static_cast<int>(kept.size()) >= k) break;
    if (h[i].oracle_call > limit || !fps[i]) continue;
    bool ok = true;
    for (std::size_t j : kept) {
      if (chem::tanimoto(*fps[i], *fps[j]) >= threshold) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

std::optional<double> mean_reward(const RunHistory& h, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return std::nullopt;
  double s = 0.0;
  for (std::size_t i : idx) s += h[i].reward;
  return s / static_cast<double>(idx.size());
}

}  // namespace

std::string dedup_key(const std::string& smiles) {
  const auto mol = chem::try_parse(smiles);
  return mol ? chem::canonical_key(*mol) : smiles;
}

HistoryRecord make_record(long oracle_call, const std::string& smiles, double reward) {
  HistoryRecord r;
  r.oracle_call = oracle_call;
  r.smiles = smiles;
  r.reward = reward;
  const auto mol = chem::try_parse(smiles);
  r.valid = mol.has_value();
  r.key = mol ? chem::canonical_key(*mol) : smiles;
  return r;
}

void TopkTracker::add(const std::string& key, double reward) {
  auto [it, inserted] = best_.emplace(key, reward);
  if (inserted) {
    values_.insert(reward);
  } else if (reward > it->second) {
    values_.erase(values_.find(it->second));
    values_.insert(reward);
    it->second = reward;
  }
}

double TopkTracker::average() const {
  if (best_.empty()) empty_history();
  double s = 0.0;
  int n = 0;
  for (auto it = values_.begin(); it != values_.end() && n < k_; ++it, ++n) s += *it;
  return s / n;
}

double topk_average(const RunHistory& history, int k) {
  if (k < 1) throw ConfigError("k", "must be >= 1");
  TopkTracker t(k);
  for (const auto& r : history) t.add(r.key, r.reward);
  return t.average();
}

std::vector<CurvePoint> topk_curve(const RunHistory& history, int k, int report_every) {
  if (history.empty()) empty_history();
  if (k < 1) throw ConfigError("k", "must be >= 1");
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return history[a].oracle_call < history[b].oracle_call; });
  TopkTracker t(k);
  std::size_t next = 0;
  std::vector<CurvePoint> curve;
  for (long c : checkpoints(last_call(history), report_every)) {
    while (next < order.size() && history[order[next]].oracle_call <= c) {
      t.add(history[order[next]].key, history[order[next]].reward);
      ++next;
    }
    curve.push_back({c, t.empty() ? 0.0 : t.average()});
  }
  return curve;
}

double integrate_curve(const std::vector<CurvePoint>& curve, std::optional<long> budget) {
  if (curve.empty()) return 0.0;
  const long last = curve.back().oracle_call;
  const long total = budget ? std::max(*budget, last) : last;
  double acc = 0.0;
  long prev = 0;
  for (const auto& p : curve) {
    acc += p.value * static_cast<double>(p.oracle_call - prev);
    prev = p.oracle_call;
  }
  acc += curve.back().value * static_cast<double>(total - last);
  return acc / static_cast<double>(total);
}

double topk_auc(const RunHistory& history, int k, int report_every, std::optional<long> budget) {
  return integrate_curve(topk_curve(history, k, report_every), budget);
}

std::vector<HistoryRecord> diverse_topk(const RunHistory& history, int k, double threshold) {
  const auto fps = fingerprints(history);
  std::vector<HistoryRecord> out;
  for (std::size_t i : diverse_select(history, reward_order(history), fps, k, threshold, last_call(history)))
    out.push_back(history[i]);
  return out;
}

std::optional<double> diverse_topk_average(const RunHistory& history, int k, double threshold) {
  const auto fps = fingerprints(history);
  return mean_reward(history, diverse_select(history, reward_order(history), fps, k, threshold, last_call(history)));
}

std::optional<double> diverse_topk_auc(const RunHistory& history, int k, double threshold, int report_every,
                                       std::optional<long> budget) {
  if (history.empty()) return std::nullopt;
  const auto fps = fingerprints(history);
  const auto order = reward_order(history);
  bool any = false;
  std::vector<CurvePoint> curve;
  for (long c : checkpoints(last_call(history), report_every)) {
    const auto m = mean_reward(history, diverse_select(history, order, fps, k, threshold, c));
    any = any || m.has_value();
    curve.push_back({c, m.value_or(0.0)});
  }
  if (!any) return std::nullopt;
  return integrate_curve(curve, budget);
}

std::vector<std::size_t> sphere_exclusion_leaders(const std::vector<std::string>& smiles, std::size_t sample_size,
                                                  double threshold, Rng& rng, std::size_t* sample_count) {
  std::vector<std::size_t> valid;
  std::vector<chem::Fingerprint> fps(smiles.size());
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    if (const auto mol = chem::try_parse(smiles[i])) {
      fps[i] = chem::fingerprint(*mol);
      valid.push_back(i);
    }
  }
  if (valid.empty()) throw Error("NoValidMolecules", "sphere exclusion needs at least one valid molecule");
  if (valid.size() > sample_size) {
    portable_shuffle(valid.begin(), valid.end(), rng);
    valid.resize(sample_size);
    std::sort(valid.begin(), valid.end());
  }
  if (sample_count) *sample_count = valid.size();
  std::vector<std::size_t> leaders;
  for (std::size_t i : valid) {
    bool ok = true;
    for (std::size_t l : leaders) {
      if (chem::tanimoto(fps[i], fps[l]) >= threshold) {
        ok = false;
        break;
      }
    }
    if (ok) leaders.push_back(i);
  }
  return leaders;
}

double sphere_exclusion_diversity(const std::vector<std::string>& smiles, Rng& rng, std::size_t sample_size,
                                  double threshold) {
  std::size_t n = 0;
  const auto leaders = sphere_exclusion_leaders(smiles, sample_size, threshold, rng, &n);
  return static_cast<double>(leaders.size()) / static_cast<double>(n);
}

std::vector<std::pair<std::string, std::optional<double>>> MetricBundle::fields() const {
  return {{"oracle_calls", static_cast<double>(oracle_calls)},
          {"validity", validity},
          {"uniqueness", uniqueness},
          {"topk_avg", topk_avg},
          {"topk_auc", topk_auc},
          {"diverse_topk_avg", diverse_topk_avg},
          {"diverse_topk_auc", diverse_topk_auc},
          {"sediv", sediv},
          {"filter_pass_fraction", filter_pass_fraction},
          {"filtered_diverse_topk_avg", filtered_diverse_topk_avg},
          {"filtered_diverse_topk_auc", filtered_diverse_topk_auc},
          {"filtered_sediv", filtered_sediv}};
}

namespace {

std::optional<double> sediv_of(const RunHistory& h, const MetricOptions& opt) {
  std::vector<std::string> smiles;
  for (const auto& r : h) {
    if (r.valid) smiles.push_back(r.smiles);
  }
  if (smiles.empty()) return std::nullopt;
  Rng rng = make_stream(opt.seed, "sediv");
  return sphere_exclusion_diversity(smiles, rng, opt.sediv_sample, opt.sediv_threshold);
}

}  // namespace

void filtered_metrics(const RunHistory& history, const FilterSpec& filters, const MetricOptions& opt,
                      MetricBundle& b) {
  RunHistory kept;
  for (const auto& r : history) {
    if (!r.valid) continue;
    const auto mol = chem::try_parse(r.smiles);
    if (!mol) continue;
    if (!scoring::chemistry_filter_basic(r.smiles, *mol, filters.basic).pass) continue;
    if (filters.reference && !scoring::chemistry_filter_target(*mol, *filters.reference).pass) continue;
    kept.push_back(r);
  }
  b.filter_pass_fraction =
      history.empty() ? 0.0 : static_cast<double>(kept.size()) / static_cast<double>(history.size());
  b.filtered_diverse_topk_avg.reset();
  b.filtered_diverse_topk_auc.reset();
  b.filtered_sediv.reset();
  if (kept.empty()) return;
  b.filtered_diverse_topk_avg = diverse_topk_average(kept, opt.k, opt.diverse_threshold);
  const long total = std::max(opt.budget.value_or(0), last_call(history));
  b.filtered_diverse_topk_auc = diverse_topk_auc(kept, opt.k, opt.diverse_threshold, opt.report_every, total);
  b.filtered_sediv = sediv_of(kept, opt);
}

MetricBundle compute_metrics(const RunHistory& history, const MetricOptions& opt,
                             const std::optional<FilterSpec>& filters) {
  if (history.empty()) empty_history();
  MetricBundle b;
  b.oracle_calls = static_cast<long>(history.size());
  std::set<std::string> keys;
  std::size_t valid = 0;
  for (const auto& r : history) {
    keys.insert(r.key);
    valid += r.valid ? 1 : 0;
  }
  const double n = static_cast<double>(history.size());
  b.validity = static_cast<double>(valid) / n;
  b.uniqueness = static_cast<double>(keys.size()) / n;
  b.topk_avg = topk_average(history, opt.k);
  b.topk_auc = topk_auc(history, opt.k, opt.report_every, opt.budget);
  b.diverse_topk_avg = diverse_topk_average(history, opt.k, opt.diverse_threshold);
  b.diverse_topk_auc = diverse_topk_auc(history, opt.k, opt.diverse_threshold, opt.report_every, opt.budget);
  b.sediv = sediv_of(history, opt);
  if (filters) filtered_metrics(history, *filters, opt, b);
  return b;
}

Summary summarize(const std::vector<std::optional<double>>& values) {
  Summary s;
  std::vector<double> v;
  for (const auto& x : values) {
    if (x) v.push_back(*x);
  }
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  s.mean = mean;
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

SuiteSummary summarize_runs(const std::map<std::string, std::vector<MetricBundle>>& per_seed) {
  SuiteSummary out;
  std::map<std::string, std::pair<double, double>> sums;  // metric -> (sum of means, sum of variances)
  std::map<std::string, bool> present;
  std::vector<std::string> names;
  for (const auto& [task, bundles] : per_seed) {
    std::map<std::string, std::vector<std::optional<double>>> cols;
    for (const auto& b : bundles) {
      for (const auto& [name, v] : b.fields()) cols[name].push_back(v);
    }
    for (const auto& [name, col] : cols) {
      const auto s = summarize(col);
      out.per_task[task][name] = s;
      if (!present.count(name)) present[name] = true;
      if (!s.mean) {
        present[name] = false;
        continue;
      }
      sums[name].first += *s.mean;
      sums[name].second += *s.std * *s.std;
    }
  }
  for (const auto& [name, ok] : present) {
    Summary s;
    s.n = per_seed.size();
    if (ok) {
      s.mean = sums[name].first;
      s.std = std::sqrt(sums[name].second);
    }
    out.suite[name] = s;
  }
  return out;
}

}  // namespace chemrl::metrics
