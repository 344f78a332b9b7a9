// SPDX-License-Identifier: Apache-2.0
#include "chemrl/scoring/filters.hpp"

#include <cmath>
#include <sstream>

#include "chemrl/chem/descriptors.hpp"
#include "chemrl/common/error.hpp"
#include "chemrl/common/io.hpp"
#include "chemrl/lang/tokenizer.hpp"
#include "chemrl/scoring/oracles.hpp"

namespace chemrl::scoring {
namespace {

bool within(double v, double mean, double sd, double k) {
  const double slack = 1e-9 * std::max(1.0, std::abs(mean));
  return v >= mean - k * sd - slack && v <= mean + k * sd + slack;
}

}  // namespace

AlertList load_alerts(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  AlertList list;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# version ", 0) == 0) list.version = line.substr(10);
      continue;
    }
    if (line == "name,fragment") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2 || f[0].empty() || f[1].empty())
      throw Error("SchemaMismatch", path.string() + ": bad alert row '" + line + "'");
    list.alerts.push_back({f[0], lang::tokenize(f[1])});
  }
  return list;
}

const AlertList& default_alerts() {
  static const AlertList list = load_alerts(data_dir() / "alerts.txt");
  return list;
}

FilterResult chemistry_filter_basic(const std::string& smiles, const BasicFilterConfig& cfg,
                                    const chem::DescriptorTables& tables, const AlertList& alerts) {
  const auto mol = chem::try_parse(smiles);
  if (!mol) return {false, {"unparseable"}};
  return chemistry_filter_basic(smiles, *mol, cfg, tables, alerts);
}

FilterResult chemistry_filter_basic(const std::string& smiles, const chem::MolGraph& mol,
                                    const BasicFilterConfig& cfg, const chem::DescriptorTables& tables,
                                    const AlertList& alerts) {
  FilterResult r;
  auto fail = [&](std::string why) {
    r.pass = false;
    r.reasons.push_back(std::move(why));
  };
  if (chem::logp_estimate(mol, tables.logp).value > cfg.max_logp) fail("logp");
  if (chem::rotatable_bond_count(mol) > cfg.max_rotatable) fail("rotatable_bonds");
  try {
    const double mw = chem::molecular_weight(mol, tables.weights);
    if (mw < cfg.min_mw || mw > cfg.max_mw) fail("molecular_weight");
  } catch (const Error&) {
    fail("molecular_weight");
  }
  for (const auto& a : mol.atoms()) {
    if (!cfg.allowed_elements.count(a.element)) {
      fail("atom_set");
      break;
    }
  }
  if (cfg.check_alerts) {
    for (const auto& al : alerts.alerts) {
      if (contains_token_pattern(smiles, al.tokens)) fail("alert:" + al.name);
    }
  }
  return r;
}

ReferenceStats reference_stats(std::span<const std::string> corpus, const chem::DescriptorTables& tables) {
  ReferenceStats s;
  std::vector<double> mw, lp;
  std::vector<chem::Fingerprint> fps;
  for (const auto& smi : corpus) {
    const auto mol = chem::try_parse(smi);
    if (!mol) continue;
    try {
      mw.push_back(chem::molecular_weight(*mol, tables.weights));
    } catch (const Error&) {
      continue;
    }
    lp.push_back(chem::logp_estimate(*mol, tables.logp).value);
    fps.push_back(chem::fingerprint(*mol));
  }
  s.count = mw.size();
  if (s.count == 0) return s;
  auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size()));
  };
  moments(mw, s.mw_mean, s.mw_std);
  moments(lp, s.logp_mean, s.logp_std);
  s.bit_universe = chem::fingerprint_union(fps);
  return s;
}

FilterResult chemistry_filter_target(const chem::MolGraph& mol, const ReferenceStats& stats,
                                     const TargetFilterConfig& cfg, const chem::DescriptorTables& tables) {
  if (stats.count == 0) throw Error("MissingReferenceStats", "target filter needs reference statistics");
  FilterResult r;
  auto fail = [&](std::string why) {
    r.pass = false;
    r.reasons.push_back(std::move(why));
  };
  try {
    if (!within(chem::molecular_weight(mol, tables.weights), stats.mw_mean, stats.mw_std, cfg.sigmas))
      fail("molecular_weight");
  } catch (const Error&) {
    fail("molecular_weight");
  }
  if (!within(chem::logp_estimate(mol, tables.logp).value, stats.logp_mean, stats.logp_std, cfg.sigmas))
    fail("logp");
  if (chem::novel_bits_fraction(chem::fingerprint(mol), stats.bit_universe) > cfg.max_novel_bits)
    fail("novel_bits");
  return r;
}

FilterResult chemistry_filter_target(const std::string& smiles, const ReferenceStats& stats,
                                     const TargetFilterConfig& cfg, const chem::DescriptorTables& tables) {
  if (stats.count == 0) throw Error("MissingReferenceStats", "target filter needs reference statistics");
  const auto mol = chem::try_parse(smiles);
  if (!mol) return {false, {"unparseable"}};
  return chemistry_filter_target(*mol, stats, cfg, tables);
}

}  // namespace chemrl::scoring
