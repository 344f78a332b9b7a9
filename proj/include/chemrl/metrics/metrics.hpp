// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "chemrl/common/rng.hpp"
#include "chemrl/scoring/filters.hpp"

namespace chemrl::metrics {

struct HistoryRecord {
  long oracle_call = 0;  // 1-based
  std::string smiles;
  double reward = 0.0;
  bool valid = false;
  std::string key;  // canonical key, or the raw string when unparseable
};

using RunHistory = std::vector<HistoryRecord>;

// canonical_key of the parsed molecule, or the raw string.
std::string dedup_key(const std::string& smiles);
HistoryRecord make_record(long oracle_call, const std::string& smiles, double reward);

// Mean of the k best rewards over distinct keys (best reward per key),
// summed from the largest down. Fewer than k keys: mean over all.
// Throws EmptyHistory.
double topk_average(const RunHistory& history, int k);

// Incremental top-k over distinct keys; average() matches topk_average on
// the records added so far bit for bit.
class TopkTracker {
 public:
  explicit TopkTracker(int k) : k_(k) {}
  void add(const std::string& key, double reward);
  bool empty() const { return best_.empty(); }
  double average() const;  // throws EmptyHistory
  std::size_t distinct() const { return best_.size(); }

 private:
  int k_;
  std::unordered_map<std::string, double> best_;
  std::multiset<double, std::greater<>> values_;
};

struct CurvePoint {
  long oracle_call = 0;
  double value = 0.0;
};

// Top-k average at oracle calls report_every, 2*report_every, ... and at
// the last call, over records with oracle_call <= checkpoint (0 before the
// first record).
std::vector<CurvePoint> topk_curve(const RunHistory& history, int k, int report_every = 100);

// Rectangular integration: each point's value weighted by the calls since
// the previous point, the last value extended to `budget`, divided by the
// budget (default: the last point).
double integrate_curve(const std::vector<CurvePoint>& curve, std::optional<long> budget = {});

// Checkpoints at every report_every calls and at the last call. Each
// checkpoint's top-k average (over records with oracle_call <= checkpoint,
// 0 before the first record) is weighted by its interval length; the sum
// is divided by the budget. `budget` defaults to the last oracle_call;
// a larger budget extends the final value to it. Throws EmptyHistory.
double topk_auc(const RunHistory& history, int k, int report_every = 100, std::optional<long> budget = {});

// Greedy scan by descending reward (earliest call first on ties); keeps a
// valid molecule iff its similarity to every kept one is < threshold.
std::vector<HistoryRecord> diverse_topk(const RunHistory& history, int k, double threshold = 0.35);
// Mean reward of diverse_topk; absent when nothing is selected.
std::optional<double> diverse_topk_average(const RunHistory& history, int k, double threshold = 0.35);
// AUC of diverse_topk_average, same integration as topk_auc.
std::optional<double> diverse_topk_auc(const RunHistory& history, int k, double threshold = 0.35,
                                       int report_every = 100, std::optional<long> budget = {});

// Sphere-exclusion leaders over the valid molecules. When there are more
// than sample_size, a uniform sample is drawn by shuffling; the greedy pass
// runs in input order over the chosen molecules. Returns indices into
// `smiles`. Throws NoValidMolecules.
std::vector<std::size_t> sphere_exclusion_leaders(const std::vector<std::string>& smiles, std::size_t sample_size,
                                                  double threshold, Rng& rng, std::size_t* sample_count = nullptr);
double sphere_exclusion_diversity(const std::vector<std::string>& smiles, Rng& rng, std::size_t sample_size = 1000,
                                  double threshold = 0.65);

struct MetricOptions {
  int k = 10;
  int report_every = 100;
  std::optional<long> budget;
  double diverse_threshold = 0.35;
  double sediv_threshold = 0.65;
  std::size_t sediv_sample = 1000;
  std::uint64_t seed = 0;  // SEDiv sampling
};

// Absent values stay empty (null in JSON, empty field in CSV).
struct MetricBundle {
  long oracle_calls = 0;
  double validity = 0.0;
  double uniqueness = 0.0;
  std::optional<double> topk_avg, topk_auc, diverse_topk_avg, diverse_topk_auc, sediv;
  // Restricted to molecules passing the chemistry filters.
  std::optional<double> filter_pass_fraction, filtered_diverse_topk_avg, filtered_diverse_topk_auc, filtered_sediv;

  // Name/value pairs in report order.
  std::vector<std::pair<std::string, std::optional<double>>> fields() const;
};

struct FilterSpec {
  scoring::BasicFilterConfig basic;
  std::optional<scoring::ReferenceStats> reference;  // T-CF applied when set
};

MetricBundle compute_metrics(const RunHistory& history, const MetricOptions& options,
                             const std::optional<FilterSpec>& filters = {});

// Fills the filtered_* fields of `bundle`.
void filtered_metrics(const RunHistory& history, const FilterSpec& filters, const MetricOptions& options,
                      MetricBundle& bundle);

struct Summary {
  std::optional<double> mean;
  std::optional<double> std;  // sample standard deviation, 0 for one value
  std::size_t n = 0;
};

// Mean and std of the present values.
Summary summarize(const std::vector<std::optional<double>>& values);

struct SuiteSummary {
  std::map<std::string, std::map<std::string, Summary>> per_task;  // task -> metric -> summary
  std::map<std::string, Summary> suite;  // metric -> sum of task means, sqrt of summed variances
};

// per_seed[task] = bundles of that task's seeds.
SuiteSummary summarize_runs(const std::map<std::string, std::vector<MetricBundle>>& per_seed);

}  // namespace chemrl::metrics
