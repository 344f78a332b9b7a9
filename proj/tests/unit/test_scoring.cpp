// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "chemrl/chem/descriptors.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/rng.hpp"
#include "chemrl/pretrain/corpus.hpp"
#include "chemrl/scoring/diversity.hpp"
#include "chemrl/scoring/external.hpp"
#include "chemrl/scoring/filters.hpp"

using namespace chemrl;
using namespace chemrl::scoring;

namespace {

struct GoldenRow {
  const char* smiles;
  double mw;
  double logp;
  int rotatable;
  std::vector<std::string> reasons;
};

const std::vector<GoldenRow> kGolden = {
#include "filter_golden.inc"
};

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "none";
}

ScoringTask task(OracleKind k) {
  ScoringTask t;
  t.name = "t";
  t.kind = k;
  return t;
}

}  // namespace

TEST_CASE("built-in oracles") {
  auto sim = task(OracleKind::SimilarityToTarget);
  sim.target = "CC(=O)Nc1ccc(O)cc1";
  auto f = make_scoring_function(sim);
  CHECK(f->score("CC(=O)Nc1ccc(O)cc1") == 1.0);
  CHECK(f->score("Oc1ccc(NC(C)=O)cc1") == 1.0);
  CHECK(f->score("C1CC(") == 0.0);
  CHECK(f->score("") == 0.0);
  const double s = f->score("CC(=O)Nc1ccccc1");
  CHECK(s > 0.0);
  CHECK(s < 1.0);

  auto mwt = task(OracleKind::MolWeightTarget);
  const auto mol = chem::try_parse("CCO");
  mwt.target_mw = chem::molecular_weight(*mol);
  auto g = make_scoring_function(mwt);
  CHECK(g->score("CCO") == 1.0);
  mwt.target_mw += 50.0;
  CHECK(make_scoring_function(mwt)->score("CCO") == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  auto val = make_scoring_function(task(OracleKind::ValidityOnly));
  CHECK(val->score_batch({"CCO", "C(", "c1ccccc1"}) == std::vector<double>{1.0, 0.0, 1.0});

  auto pat = task(OracleKind::TokenPattern);
  pat.pattern = "C(=O)O";
  auto p = make_scoring_function(pat);
  CHECK(p->score("CCC(=O)O") == 1.0);
  CHECK(p->score("CCC(=O)N") == 0.0);
  CHECK(p->score("CCC(=O)O(") == 0.0);

  auto comp = task(OracleKind::Composite);
  comp.components = {task(OracleKind::ValidityOnly), pat};
  comp.weights = {1.0, 3.0};
  CHECK(make_scoring_function(comp)->score("CCN") == doctest::Approx(0.25));
  comp.geometric = true;
  CHECK(make_scoring_function(comp)->score("CCN") == 0.0);
  CHECK(make_scoring_function(comp)->score("CC(=O)O") == doctest::Approx(1.0));
  comp.weights = {1.0};
  CHECK(error_code([&] { make_scoring_function(comp); }) == "ConfigError");

  sim.target = "C(";
  CHECK(error_code([&] { make_scoring_function(sim); }) == "ConfigError");
  CHECK(oracle_kind_from_string("similarity") == OracleKind::SimilarityToTarget);
  CHECK(clamp01(1.5) == 1.0);
  CHECK(clamp01(std::nan("")) == 0.0);
}

TEST_CASE("external scorer protocol") {
  const std::string exe = ECHO_SCORER_PATH;
  ExternalScorer ok({exe, "--score", "0.5"}, 5.0);
  CHECK(ok.score_batch({"CCO", "CCN", "c1ccccc1"}) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(ok.score_batch({"CCO", "C(", "CC"}) == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(ok.score_batch({}).empty());

  ExternalScorer rev({exe, "--score", "0.25", "--reverse"}, 5.0);
  CHECK(rev.score_batch({"C", "CC", "CCC", "CCCC"}) == std::vector<double>(4, 0.25));

  ExternalScorer drop({exe, "--drop-last"}, 5.0);
  CHECK(error_code([&] { drop.score_batch({"C", "CC"}); }) == "ExternalScorerProtocolError");
  ExternalScorer dup({exe, "--duplicate"}, 5.0);
  CHECK(error_code([&] { dup.score_batch({"C", "CC"}); }) == "ExternalScorerProtocolError");
  ExternalScorer bad({exe, "--garbage"}, 5.0);
  CHECK(error_code([&] { bad.score_batch({"C"}); }) == "ExternalScorerProtocolError");
  ExternalScorer slow({exe, "--sleep", "2"}, 0.2);
  CHECK(error_code([&] { slow.score_batch({"C"}); }) == "ExternalScorerTimeout");
  ExternalScorer missing({"/nonexistent/scorer"}, 2.0);
  CHECK(error_code([&] { missing.score_batch({"C"}); }) == "ExternalScorerProtocolError");

  ScoringTask t;
  t.kind = OracleKind::ExternalProcess;
  t.command = {exe, "--score", "2.0"};
  CHECK(make_scoring_function(t)->score("CCO") == 1.0);
}

TEST_CASE("diversity memory") {
  DiversityMemory mem(DiversitySettings{.enabled = true});
  CHECK(mem.apply("CCCCCCO", 0.9) == 0.9);
  for (int i = 1; i < 25; ++i) CHECK(mem.apply("CCCCCCO", 0.9) == 0.9);
  REQUIRE(mem.buckets().size() == 1);
  CHECK(mem.buckets()[0].count == 25);
  CHECK(mem.apply("CCCCCCO", 0.8) == 0.0);
  CHECK(mem.apply("CCCCCCO", 0.4) == 0.4);
  CHECK(mem.apply("c1ccncc1", 0.7) == 0.7);
  CHECK(mem.buckets().size() == 2);
  CHECK(mem.apply("C(", 0.9) == 0.9);

  Rng rng(3);
  DiversityMemory m2(DiversitySettings{.enabled = true, .bucket_size = 2});
  const auto corpus = pretrain::toy_corpus(100, 4);
  for (int i = 0; i < 300; ++i) {
    const auto& s = corpus[uniform_index(rng, corpus.size())];
    const double raw = uniform01(rng);
    const double f = m2.apply(s, raw);
    CHECK(f <= raw);
    CHECK((f == raw || f == 0.0));
  }
}

TEST_CASE("basic filter golden table") {
  REQUIRE(kGolden.size() == 20);
  for (const auto& row : kGolden) {
    INFO(row.smiles);
    const auto mol = chem::try_parse(row.smiles);
    REQUIRE(mol);
    CHECK(chem::molecular_weight(*mol) == doctest::Approx(row.mw).epsilon(1e-6));
    CHECK(chem::logp_estimate(*mol).value == doctest::Approx(row.logp).epsilon(1e-6));
    CHECK(chem::rotatable_bond_count(*mol) == row.rotatable);
    const auto r = chemistry_filter_basic(row.smiles);
    CHECK(r.pass == row.reasons.empty());
    CHECK(r.reasons == row.reasons);
  }
  CHECK(chemistry_filter_basic("C(").reasons == std::vector<std::string>{"unparseable"});
}

TEST_CASE("basic filter thresholds are inclusive and monotone") {
  const std::string s = "CCN(CC)C(=O)c1cccc(C)c1";
  const double lp = chem::logp_estimate(*chem::try_parse(s)).value;
  BasicFilterConfig at_limit;
  at_limit.max_logp = lp;
  CHECK(chemistry_filter_basic(s, at_limit).pass);
  at_limit.max_logp = std::nextafter(lp, 0.0);
  CHECK_FALSE(chemistry_filter_basic(s, at_limit).pass);

  BasicFilterConfig tight;
  tight.max_logp = 2.0;
  tight.max_rotatable = 2;
  tight.min_mw = 160;
  tight.max_mw = 200;
  BasicFilterConfig loose = tight;
  loose.max_logp = 3.0;
  loose.max_rotatable = 5;
  loose.min_mw = 100;
  loose.max_mw = 400;
  loose.allowed_elements.insert("P");
  for (const auto& row : kGolden) {
    if (chemistry_filter_basic(row.smiles, tight).pass) CHECK(chemistry_filter_basic(row.smiles, loose).pass);
  }
}

TEST_CASE("target filter") {
  const auto corpus = pretrain::toy_corpus(300, 11);
  const auto stats = reference_stats(corpus);
  CHECK(stats.count == corpus.size());
  for (const auto& s : corpus) {
    INFO(s);
    CHECK(chemistry_filter_target(s, stats).pass);
  }
  ReferenceStats shifted = stats;
  shifted.mw_mean = 100.0;
  shifted.mw_std = 10.0;
  const auto mol = chem::try_parse("c1ccccc1CCCCCCCC");  // MW 190.3 = 100 + 9 sigma
  auto r = chemistry_filter_target(*mol, shifted);
  CHECK_FALSE(r.pass);
  CHECK(std::find(r.reasons.begin(), r.reasons.end(), "molecular_weight") != r.reasons.end());

  // MW exactly mean + 5 sigma fails.
  const double mw = chem::molecular_weight(*chem::try_parse("CCO"));
  ReferenceStats five = stats;
  five.mw_std = 1.0;
  five.mw_mean = mw - 5.0;
  five.logp_std = 100.0;
  r = chemistry_filter_target("CCO", five);
  CHECK(r.reasons.front() == "molecular_weight");

  ReferenceStats empty;
  CHECK(error_code([&] { chemistry_filter_target("CCO", empty); }) == "MissingReferenceStats");

  chem::Fingerprint fp;
  for (std::uint32_t b = 0; b < 20; ++b) fp.bits.push_back(b * 7);
  chem::Fingerprint uni;
  uni.bits.assign(fp.bits.begin(), fp.bits.begin() + 17);
  CHECK(chem::novel_bits_fraction(fp, uni) == doctest::Approx(0.15));
  CHECK(chem::novel_bits_fraction(fp, uni) > TargetFilterConfig{}.max_novel_bits);
}
