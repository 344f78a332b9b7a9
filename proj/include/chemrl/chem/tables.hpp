// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace chemrl::chem {

// Row of a descriptor data file: "pattern,value".
struct TableRow {
  std::string pattern;
  double value = 0.0;
};

// Loads a UTF-8 CSV of pattern,value rows. Lines starting with '#' and a
// header line "pattern,value" are skipped.
std::vector<TableRow> load_table(const std::filesystem::path& path);

struct AtomicWeights {
  std::map<std::string, double> by_element;
};

// Reduced Crippen-style contribution table. Patterns:
//   heavy atom:  <symbol>[H<n>][+|-]   lowercase symbol = aromatic
//   hydrogen:    H-C (on carbon) or H-X (on a heteroatom)
// Lookup prefers the exact (symbol, H count, charge) row, then the row
// without an H count.
struct LogPTable {
  std::map<std::string, double> by_pattern;
  std::string version;
};

struct DescriptorTables {
  AtomicWeights weights;
  LogPTable logp;
};

DescriptorTables load_descriptor_tables(const std::filesystem::path& dir);

// Tables from chemrl::data_dir(), loaded once on first use.
const DescriptorTables& default_tables();

}  // namespace chemrl::chem
