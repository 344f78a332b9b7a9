// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "../support/metric_oracles.hpp"
#include "chemrl/chem/fingerprint.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/pretrain/corpus.hpp"

using namespace chemrl;
using namespace chemrl::metrics;

namespace {

RunHistory from_rewards(const std::vector<std::pair<std::string, double>>& rows) {
  RunHistory h;
  long i = 1;
  for (const auto& [s, r] : rows) h.push_back(make_record(i++, s, r));
  return h;
}

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

}  // namespace

TEST_CASE("topk_average") {
  const auto h = from_rewards({{"CCO", 1.0}, {"CCN", 0.5}, {"CCC", 0.2}});
  CHECK(topk_average(h, 2) == 0.75);
  CHECK(topk_average(h, 10) == doctest::Approx(1.7 / 3));
  const auto d = from_rewards({{"CCO", 0.3}, {"OCC", 0.9}, {"CCN", 0.5}});
  CHECK(topk_average(d, 2) == doctest::Approx(0.7));  // CCO and OCC share a key
  CHECK(error_code([] { topk_average({}, 3); }) == "EmptyHistory");
  const auto invalid = from_rewards({{"C(", 0.0}, {"C(", 0.0}});
  CHECK(invalid[0].key == "C(");
}

TEST_CASE("topk_auc closed forms") {
  RunHistory c;
  for (long i = 1; i <= 1000; ++i) c.push_back(make_record(i, "C" + std::string(static_cast<std::size_t>(i % 7), 'C'), 0.3));
  CHECK(topk_auc(c, 10) == doctest::Approx(0.3).epsilon(1e-14));

  for (long n : {1L, 7L, 100L}) {
    RunHistory ramp;
    for (long t = 1; t <= n; ++t) {
      ramp.push_back({t, "x" + std::to_string(t), static_cast<double>(t) / static_cast<double>(n), false,
                      "x" + std::to_string(t)});
    }
    CHECK(topk_auc(ramp, 1, 1) == doctest::Approx(static_cast<double>(n + 1) / (2.0 * static_cast<double>(n))));
  }

  const auto h = from_rewards({{"CCO", 0.4}, {"CCN", 0.8}});
  CHECK(topk_auc(h, 1, 1, 4) == doctest::Approx((0.4 + 0.8 * 3) / 4));
  CHECK(topk_auc(h, 2, 1) <= topk_average(h, 2));
  CHECK(error_code([] { topk_auc({}, 3); }) == "EmptyHistory");
}

TEST_CASE("streaming AUC equals brute-force recomputation") {
  const auto pool = pretrain::toy_corpus(40, 5);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const long n = 1 + static_cast<long>(uniform_index(rng, 400));
    const int every = 1 + static_cast<int>(uniform_index(rng, 50));
    const int k = 1 + static_cast<int>(uniform_index(rng, 12));
    const auto h = testing::random_history(rng, n, pool);
    const auto s = topk_curve(h, k, every);
    const auto b = testing::brute_curve(h, k, every);
    REQUIRE(s.size() == b.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s[i].oracle_call == b[i].oracle_call);
      CHECK(s[i].value == b[i].value);
    }
    CHECK(topk_auc(h, k, every) == testing::brute_auc(h, k, every));
    // Monotone prefix property.
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].value >= s[i - 1].value);
    CHECK(topk_auc(h, k, every) <= topk_average(h, k));
  }
}

TEST_CASE("diverse_topk") {
  const auto same = from_rewards({{"CCO", 0.9}, {"OCC", 0.8}, {"CCO", 0.7}});
  CHECK(diverse_topk(same, 10).size() == 1);

  const auto h = from_rewards({{"c1ccccc1CCO", 0.9}, {"c1ccccc1CCCO", 0.8}, {"NC(=O)CCl", 0.7}, {"FC(F)F", 0.6}});
  const auto fp = [](const std::string& s) { return chem::fingerprint(*chem::try_parse(s)); };
  REQUIRE(chem::tanimoto(fp("c1ccccc1CCO"), fp("c1ccccc1CCCO")) >= 0.35);
  const auto sel = diverse_topk(h, 2);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].smiles == "c1ccccc1CCO");
  CHECK(sel[1].smiles == "NC(=O)CCl");

  const auto pool = pretrain::toy_corpus(200, 8);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = testing::random_history(rng, 300, pool);
    const auto d = diverse_topk(r, 10);
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = i + 1; j < d.size(); ++j) CHECK(chem::tanimoto(fp(d[i].smiles), fp(d[j].smiles)) < 0.35);
  }
}

TEST_CASE("sphere exclusion diversity") {
  std::vector<std::string> copies(1000, "CCO");
  Rng rng(1);
  CHECK(sphere_exclusion_diversity(copies, rng) == doctest::Approx(1.0 / 1000));

  const std::vector<std::string> distinct = {"CCO", "c1ccncc1", "FC(F)(F)Cl", "NC(=O)N", "C1CCCCC1", "OCC(O)CO"};
  CHECK(sphere_exclusion_diversity(distinct, rng) == 1.0);

  const auto pool = pretrain::toy_corpus(1500, 3);
  Rng a(9), b(9);
  CHECK(sphere_exclusion_diversity(pool, a) == sphere_exclusion_diversity(pool, b));

  const auto small = pretrain::toy_corpus(80, 4);
  auto doubled = small;
  doubled.insert(doubled.end(), small.begin(), small.end());
  Rng c(0), d(0);
  CHECK(sphere_exclusion_leaders(small, 1000, 0.65, c) == sphere_exclusion_leaders(doubled, 1000, 0.65, d));
  CHECK(error_code([&] { sphere_exclusion_diversity({"C(", "x"}, rng); }) == "NoValidMolecules");
}

TEST_CASE("filtered metrics") {
  MetricOptions opt;
  opt.k = 1;
  opt.report_every = 1;
  FilterSpec spec;
  // Neither passes (MW < 150).
  const auto none = from_rewards({{"CCO", 0.5}, {"CCN", 0.6}});
  auto b = compute_metrics(none, opt, spec);
  CHECK(b.filter_pass_fraction == 0.0);
  CHECK_FALSE(b.filtered_diverse_topk_avg);
  CHECK_FALSE(b.filtered_diverse_topk_auc);
  CHECK_FALSE(b.filtered_sediv);

  // Both pass: filtered diverse metrics equal the unfiltered ones.
  const auto all = from_rewards({{"CC(=O)Nc1ccc(O)cc1", 0.5}, {"CCN(CC)C(=O)c1cccc(C)c1", 0.9}});
  b = compute_metrics(all, opt, spec);
  CHECK(b.filter_pass_fraction == 1.0);
  CHECK(b.filtered_diverse_topk_avg == b.diverse_topk_avg);
  CHECK(b.filtered_diverse_topk_auc == b.diverse_topk_auc);
  CHECK(b.filtered_sediv == b.sediv);

  // Hand-built counter-ordered pair: the failing molecule arrives first with
  // the higher reward. Unfiltered AUC (k=1) = (0.9 + 0.9) / 2; filtered =
  // (0 + 0.4) / 2.
  const auto counter = from_rewards({{"CCCCCCCCCCCCCCCCCC(=O)O", 0.9}, {"CC(=O)Nc1ccc(O)cc1", 0.4}});
  b = compute_metrics(counter, opt, spec);
  CHECK(*b.diverse_topk_auc == doctest::Approx(0.9));
  CHECK(*b.filtered_diverse_topk_auc == doctest::Approx(0.2));
  CHECK(*b.filtered_diverse_topk_auc <= *b.diverse_topk_auc);
  CHECK(b.filter_pass_fraction == 0.5);
}

TEST_CASE("summarize_runs") {
  auto s = summarize({0.5, 0.5, 0.5});
  CHECK(*s.mean == 0.5);
  CHECK(*s.std == 0.0);
  s = summarize({0.7});
  CHECK(*s.std == 0.0);
  s = summarize({1.0, 3.0});
  CHECK(*s.std == doctest::Approx(std::sqrt(2.0)));
  s = summarize({std::nullopt});
  CHECK_FALSE(s.mean);

  MetricBundle a, b;
  a.topk_avg = 0.4;
  b.topk_avg = 0.6;
  const auto suite = summarize_runs({{"t1", {a}}, {"t2", {b}}});
  CHECK(*suite.suite.at("topk_avg").mean == doctest::Approx(1.0));
  CHECK(*suite.suite.at("topk_avg").std == 0.0);
  CHECK_FALSE(suite.suite.at("sediv").mean);
}
