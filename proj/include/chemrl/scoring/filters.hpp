// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chemrl/chem/fingerprint.hpp"
#include "chemrl/chem/mol_graph.hpp"
#include "chemrl/chem/tables.hpp"

namespace chemrl::scoring {

struct FilterResult {
  bool pass = true;
  std::vector<std::string> reasons;  // empty when passing
};

struct Alert {
  std::string name;
  std::vector<std::string> tokens;
};

struct AlertList {
  std::string version;
  std::vector<Alert> alerts;
};

// "name,fragment" rows; '#' lines are comments, "# version N" sets the version.
AlertList load_alerts(const std::filesystem::path& path);
const AlertList& default_alerts();  // data_dir()/alerts.txt

struct BasicFilterConfig {
  double max_logp = 4.5;
  int max_rotatable = 7;
  double min_mw = 150.0;
  double max_mw = 650.0;
  std::set<std::string> allowed_elements{"C", "S", "O", "N", "H", "F", "Cl", "Br"};
  bool check_alerts = true;
};

// Reasons: "logp", "rotatable_bonds", "molecular_weight", "atom_set",
// "alert:<name>", "unparseable". Alerts match against `smiles` as written.
FilterResult chemistry_filter_basic(const std::string& smiles, const BasicFilterConfig& config = {},
                                    const chem::DescriptorTables& tables = chem::default_tables(),
                                    const AlertList& alerts = default_alerts());
FilterResult chemistry_filter_basic(const std::string& smiles, const chem::MolGraph& mol,
                                    const BasicFilterConfig& config = {},
                                    const chem::DescriptorTables& tables = chem::default_tables(),
                                    const AlertList& alerts = default_alerts());

struct ReferenceStats {
  std::size_t count = 0;
  double mw_mean = 0.0, mw_std = 0.0;  // population standard deviation
  double logp_mean = 0.0, logp_std = 0.0;
  chem::Fingerprint bit_universe;
};

// Over the parseable members of `corpus`.
ReferenceStats reference_stats(std::span<const std::string> corpus,
                               const chem::DescriptorTables& tables = chem::default_tables());

struct TargetFilterConfig {
  double sigmas = 4.0;
  double max_novel_bits = 0.10;
};

// Reasons: "molecular_weight", "logp", "novel_bits", "unparseable".
// Throws MissingReferenceStats for empty statistics.
FilterResult chemistry_filter_target(const chem::MolGraph& mol, const ReferenceStats& stats,
                                     const TargetFilterConfig& config = {},
                                     const chem::DescriptorTables& tables = chem::default_tables());
FilterResult chemistry_filter_target(const std::string& smiles, const ReferenceStats& stats,
                                     const TargetFilterConfig& config = {},
                                     const chem::DescriptorTables& tables = chem::default_tables());

}  // namespace chemrl::scoring
